"""Corpus parsing and per-instance views of the data.

The on-disk format is three lines per record: the tokenized sentence with
the target replaced by the literal placeholder $T$, then the target string,
then the label (-1, 0 or 1). Tokenization is whitespace splitting and
nothing else; lowercasing happens later, at vocabulary lookup.
"""

from collections import Counter
from dataclasses import dataclass

from .errors import FormatError, ValidationError

PLACEHOLDER = "$T$"

NEGATIVE, NEUTRAL, POSITIVE = 0, 1, 2
CLASS_NAMES = ("negative", "neutral", "positive")
LABEL_VALUES = (-1, 0, 1)
NUM_CLASSES = 3

_LABEL_TO_CLASS = {-1: NEGATIVE, 0: NEUTRAL, 1: POSITIVE}
_CLASS_TO_LABEL = {v: k for k, v in _LABEL_TO_CLASS.items()}


def label_to_class(label: int) -> int:
    """Map a corpus label (-1/0/1) to a class index (0/1/2)."""
    try:
        return _LABEL_TO_CLASS[label]
    except KeyError:
        raise ValidationError(f"label must be one of {LABEL_VALUES}, got {label!r}") from None


def class_to_label(cls: int) -> int:
    try:
        return _CLASS_TO_LABEL[cls]
    except KeyError:
        raise ValidationError(f"class index must be 0..2, got {cls!r}") from None


@dataclass(frozen=True)
class Instance:
    """One labeled sentence with its target marked by a token span.

    target_start/target_end are 0-based, end-exclusive indices into tokens;
    the span is never empty.
    """

    tokens: tuple[str, ...]
    target_start: int
    target_end: int
    label: int

    def __post_init__(self):
        if not self.tokens:
            raise ValidationError("instance has no tokens")
        if not (0 <= self.target_start < self.target_end <= len(self.tokens)):
            raise ValidationError(
                f"target span [{self.target_start}, {self.target_end}) invalid "
                f"for {len(self.tokens)} tokens")
        if self.label not in _LABEL_TO_CLASS:
            raise ValidationError(
                f"label must be one of {LABEL_VALUES}, got {self.label!r}")

    @property
    def target_tokens(self) -> tuple[str, ...]:
        return self.tokens[self.target_start:self.target_end]

    @property
    def gold_class(self) -> int:
        return _LABEL_TO_CLASS[self.label]


@dataclass(frozen=True)
class SplitInstance:
    """An instance cut at the target: tokens before it, the target itself,
    tokens after it. preceding/following may be empty, the target may not."""

    preceding: tuple[str, ...]
    target: tuple[str, ...]
    following: tuple[str, ...]
    label: int

    def __post_init__(self):
        if not self.target:
            raise ValidationError("target must contain at least one token")
        if self.label not in _LABEL_TO_CLASS:
            raise ValidationError(
                f"label must be one of {LABEL_VALUES}, got {self.label!r}")

    @property
    def tokens(self) -> tuple[str, ...]:
        return self.preceding + self.target + self.following

    @property
    def gold_class(self) -> int:
        return _LABEL_TO_CLASS[self.label]


def split(instance: Instance) -> SplitInstance:
    """Cut an instance into (preceding, target, following)."""
    return SplitInstance(
        preceding=instance.tokens[:instance.target_start],
        target=instance.tokens[instance.target_start:instance.target_end],
        following=instance.tokens[instance.target_end:],
        label=instance.label,
    )


def make_instance(sentence_tokens, target_tokens, label: int) -> Instance:
    """Build an Instance from a placeholder sentence and a target string."""
    sentence_tokens = list(sentence_tokens)
    target_tokens = tuple(target_tokens)
    positions = [i for i, t in enumerate(sentence_tokens) if t == PLACEHOLDER]
    if len(positions) != 1:
        raise ValidationError(
            f"sentence must contain the placeholder {PLACEHOLDER} exactly once, "
            f"found {len(positions)}")
    if not target_tokens:
        raise ValidationError("target must contain at least one token")
    at = positions[0]
    tokens = tuple(sentence_tokens[:at]) + target_tokens + tuple(sentence_tokens[at + 1:])
    return Instance(
        tokens=tokens,
        target_start=at,
        target_end=at + len(target_tokens),
        label=label,
    )


def parse_corpus(path) -> list[Instance]:
    """Read every 3-line record of a corpus file.

    Raises FormatError (naming the record) on a truncated file, a sentence
    without exactly one placeholder, an empty target, or a label outside
    {-1, 0, 1}.
    """
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if len(lines) % 3 != 0:
        raise FormatError(
            f"{len(lines)} lines, not a multiple of 3 (records are "
            "sentence / target / label)", path=path)
    instances = []
    for record, at in enumerate(range(0, len(lines), 3)):
        sentence = lines[at].split()
        target = lines[at + 1].split()
        raw_label = lines[at + 2].strip()
        if raw_label not in ("-1", "0", "1"):
            raise FormatError(f"label must be -1, 0 or 1, got {raw_label!r}",
                              path=path, record=record)
        try:
            instances.append(make_instance(sentence, target, int(raw_label)))
        except ValidationError as exc:
            raise FormatError(str(exc), path=path, record=record) from None
    return instances


def write_corpus(path, instances) -> None:
    """Inverse of parse_corpus: three lines per instance."""
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            sentence = (list(inst.tokens[:inst.target_start])
                        + [PLACEHOLDER]
                        + list(inst.tokens[inst.target_end:]))
            fh.write(" ".join(sentence) + "\n")
            fh.write(" ".join(inst.target_tokens) + "\n")
            fh.write(f"{inst.label}\n")


def class_distribution(instances) -> dict[int, float]:
    """Fraction of instances per observed label value. Fractions sum to 1."""
    instances = list(instances)
    if not instances:
        raise ValidationError("cannot compute a distribution over no instances")
    counts = Counter(inst.label for inst in instances)
    n = len(instances)
    return {label: counts[label] / n for label in sorted(counts)}
