"""Synthetic corpora where sentiment is decided by which span is marked.

Every generated sentence mentions two entities, each sitting next to a cue
word, and the two cues always have opposite polarity. Each sentence yields
two instances, one per entity, labeled by the cue adjacent to that entity.
The token sequence is therefore identical for both instances while the gold
labels are opposite, and entities are drawn from the same pool as filler
words: a model that ignores the marked span faces exactly balanced
contradictory evidence and cannot beat the majority class, while a
target-aware model can read the adjacent cue.

Word vectors for these corpora come from write_vector_file, which fakes a
pretrained file at a realistic scale (training from the tiny uniform init
on both vectors and parameters is needlessly slow and nothing here depends
on it).
"""

import numpy as np

from .corpus import Instance, write_corpus
from .errors import ValidationError
from .mathcore.rng import derive

POSITIVE_CUES = ("love", "great", "awesome")
NEGATIVE_CUES = ("hate", "awful", "terrible")
FILLERS = (
    "the", "this", "that", "one", "item", "thing", "day", "week",
    "red", "blue", "old", "new", "big", "small", "plain", "round",
)


def vocabulary_tokens() -> tuple[str, ...]:
    return POSITIVE_CUES + NEGATIVE_CUES + FILLERS


def generate_pairs(n_sentences: int, seed: int,
                   two_token_target_fraction: float = 0.3) -> list[tuple[Instance, Instance]]:
    """n_sentences sentences, each as a pair of opposite-label instances."""
    if n_sentences < 1:
        raise ValidationError(f"need at least one sentence, got {n_sentences}")
    rng = derive(seed, "synthetic-pairs")
    pairs = []
    for _ in range(n_sentences):
        pick = lambda pool, n: [pool[i] for i in rng.integers(0, len(pool), n)]

        def entity():
            n = 2 if rng.random() < two_token_target_fraction else 1
            return pick(FILLERS, n)

        cue_first = bool(rng.integers(0, 2))  # cue before entity, same for both
        first_positive = bool(rng.integers(0, 2))
        cue_a = POSITIVE_CUES[rng.integers(0, len(POSITIVE_CUES))] \
            if first_positive else NEGATIVE_CUES[rng.integers(0, len(NEGATIVE_CUES))]
        cue_b = NEGATIVE_CUES[rng.integers(0, len(NEGATIVE_CUES))] \
            if first_positive else POSITIVE_CUES[rng.integers(0, len(POSITIVE_CUES))]
        entity_a, entity_b = entity(), entity()

        pre = pick(FILLERS, int(rng.integers(0, 3)))
        mid = pick(FILLERS, int(rng.integers(1, 4)))
        post = pick(FILLERS, int(rng.integers(0, 3)))

        def block(cue, ent):
            return [cue] + ent if cue_first else ent + [cue]

        tokens = pre + block(cue_a, entity_a) + mid + block(cue_b, entity_b) + post
        offset_a = len(pre) + (1 if cue_first else 0)
        offset_b = (len(pre) + 1 + len(entity_a) + len(mid)
                    + (1 if cue_first else 0))
        label_a = 1 if first_positive else -1
        pairs.append((
            Instance(tuple(tokens), offset_a, offset_a + len(entity_a), label_a),
            Instance(tuple(tokens), offset_b, offset_b + len(entity_b), -label_a),
        ))
    return pairs


def generate_corpus(n_sentences: int, seed: int,
                    test_fraction: float = 0.25):
    """(train, test) instance lists; both members of a pair land on the
    same side of the split so no test sentence was seen in training."""
    pairs = generate_pairs(n_sentences, seed)
    rng = derive(seed, "synthetic-split")
    order = rng.permutation(len(pairs))
    n_test = int(round(len(pairs) * test_fraction))
    test_ids = set(int(i) for i in order[:n_test])
    train, test = [], []
    for i, (a, b) in enumerate(pairs):
        (test if i in test_ids else train).extend((a, b))
    return train, test


def write_vector_file(path, tokens, dim: int, seed: int,
                      scale: float = 0.5) -> None:
    """Fake pretrained vectors: one line per token, uniform in [-scale, scale]."""
    rng = derive(seed, "synthetic-vectors")
    with open(path, "w", encoding="utf-8") as fh:
        for token in tokens:
            vec = rng.uniform(-scale, scale, dim)
            fh.write(token + " " + " ".join(f"{v:.6f}" for v in vec) + "\n")


def write_corpus_files(out_dir, n_sentences: int, seed: int, dim: int):
    """Corpus plus matching vector file on disk; returns the three paths."""
    from pathlib import Path
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    train, test = generate_corpus(n_sentences, seed)
    train_path, test_path = out / "train.txt", out / "test.txt"
    vectors_path = out / "vectors.txt"
    write_corpus(train_path, train)
    write_corpus(test_path, test)
    write_vector_file(vectors_path, vocabulary_tokens(), dim, seed)
    return train_path, test_path, vectors_path
