"""Vocabulary handling and word-vector storage.

The vocabulary is closed (built once from the corpus) and index 0 is always
the unknown token, so any out-of-vocabulary word maps there. Pretrained
vectors are read from whitespace-separated text (one token per line followed
by its components, an optional two-integer count/dim header is skipped);
tokens the file does not cover, plus the unknown token itself, get vectors
sampled uniformly from [-0.003, 0.003] under a caller-supplied seed.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, ValidationError
from .mathcore import Tensor
from .mathcore.rng import derive
from .mathcore.tensor import DEFAULT_DTYPE

UNKNOWN_TOKEN = "<unk>"
INIT_RANGE = 0.003  # uniform init half-width for missing vectors


@dataclass(frozen=True)
class Vocabulary:
    """Bijection between tokens and indices 0..len-1, index 0 unknown."""

    tokens: tuple[str, ...]
    lowercase: bool = True
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.tokens or self.tokens[0] != UNKNOWN_TOKEN:
            raise ValidationError(f"token 0 must be {UNKNOWN_TOKEN!r}")
        index = {}
        for i, token in enumerate(self.tokens):
            if token in index:
                raise ValidationError(f"duplicate token {token!r}")
            index[token] = i
        object.__setattr__(self, "_index", index)

    @classmethod
    def build(cls, token_groups, lowercase: bool = True) -> "Vocabulary":
        """Collect unique tokens from iterables of tokens, in first-seen
        order, behind the reserved unknown slot."""
        seen = {UNKNOWN_TOKEN: 0}
        ordered = [UNKNOWN_TOKEN]
        for group in token_groups:
            for token in group:
                normalized = token.lower() if lowercase else token
                if normalized not in seen:
                    seen[normalized] = len(ordered)
                    ordered.append(normalized)
        return cls(tuple(ordered), lowercase=lowercase)

    def normalize(self, token: str) -> str:
        return token.lower() if self.lowercase else token

    def index_of(self, token: str) -> int:
        """Index for a token, 0 (unknown) when absent."""
        return self._index.get(self.normalize(token), 0)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return self.normalize(token) in self._index

    def save(self, path) -> None:
        """One token per line, line number = index."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(self.tokens))
            fh.write("\n")

    @classmethod
    def load(cls, path, lowercase: bool = True) -> "Vocabulary":
        with open(path, encoding="utf-8") as fh:
            tokens = tuple(fh.read().splitlines())
        return cls(tokens, lowercase=lowercase)


@dataclass
class EmbeddingTable:
    """Index-to-vector storage, one row per vocabulary entry.

    The matrix is deliberately a plain writable array: when trainable, the
    training loop updates looked-up rows in place (it is the single writer;
    concurrent readers are only safe between updates).
    """

    matrix: np.ndarray  # (|V|, d)
    trainable: bool = True

    def __post_init__(self):
        if self.matrix.ndim != 2:
            raise ValidationError(f"embedding matrix must be 2-D, got {self.matrix.ndim}-D")

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def dtype(self):
        return self.matrix.dtype

    def copy(self) -> "EmbeddingTable":
        return EmbeddingTable(self.matrix.copy(), trainable=self.trainable)


def _looks_like_header(fields: list[str]) -> bool:
    if len(fields) != 2:
        return False
    try:
        int(fields[0]), int(fields[1])
    except ValueError:
        return False
    return True


def read_vector_file(path) -> tuple[int, dict[str, np.ndarray]]:
    """Parse a pretrained vector file into (dim, token -> vector).

    On duplicate tokens the first line wins. Raises FormatError (naming the
    line) on dimension disagreements or unparseable components.
    """
    dim = None
    vectors: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            fields = line.split()
            if not fields:
                continue
            if line_no == 1 and _looks_like_header(fields):
                continue
            token, raw = fields[0], fields[1:]
            if not raw:
                raise FormatError("token with no vector components",
                                  path=path, line=line_no)
            try:
                vec = np.array([float(r) for r in raw], dtype=np.float64)
            except ValueError:
                raise FormatError("non-numeric vector component",
                                  path=path, line=line_no) from None
            if dim is None:
                dim = len(vec)
            elif len(vec) != dim:
                raise FormatError(
                    f"vector has {len(vec)} components, expected {dim}",
                    path=path, line=line_no)
            vectors.setdefault(token, vec)
    if dim is None:
        raise FormatError("no vectors found", path=path)
    return dim, vectors


def assemble_table(dim: int, vectors: dict[str, np.ndarray], vocabulary: Vocabulary,
                   seed: int, trainable: bool = True,
                   dtype=DEFAULT_DTYPE) -> EmbeddingTable:
    """Build the table for a vocabulary from pre-parsed vectors.

    Rows are filled in index order; the unknown token and every token the
    file lacks are sampled fresh, so the result is a pure function of
    (vectors, vocabulary, seed).
    """
    rng = derive(seed, "embedding-init")
    matrix = np.empty((len(vocabulary), dim), dtype=dtype)
    for i, token in enumerate(vocabulary.tokens):
        vec = None if i == 0 else vectors.get(vocabulary.normalize(token))
        if vec is None:
            matrix[i] = rng.uniform(-INIT_RANGE, INIT_RANGE, dim)
        else:
            matrix[i] = vec
    return EmbeddingTable(matrix, trainable=trainable)


def load_pretrained(path, vocabulary: Vocabulary, seed: int,
                    trainable: bool = True, dtype=DEFAULT_DTYPE) -> EmbeddingTable:
    """Read a vector file and assemble the table for this vocabulary."""
    dim, vectors = read_vector_file(path)
    return assemble_table(dim, vectors, vocabulary, seed,
                          trainable=trainable, dtype=dtype)


def random_table(vocabulary: Vocabulary, dim: int, seed: int,
                 trainable: bool = True, dtype=DEFAULT_DTYPE) -> EmbeddingTable:
    """All rows sampled from the same uniform range used for missing tokens
    (for runs without any pretrained file)."""
    if dim < 1:
        raise ValidationError(f"embedding dim must be positive, got {dim}")
    return assemble_table(dim, {}, vocabulary, seed, trainable=trainable, dtype=dtype)


def lookup(table: EmbeddingTable, vocabulary: Vocabulary, token: str) -> Tensor:
    """Column vector for a token (unknown row when out of vocabulary)."""
    if table.size != len(vocabulary):
        raise ValidationError(
            f"table has {table.size} rows but vocabulary has {len(vocabulary)} tokens")
    return Tensor(table.matrix[vocabulary.index_of(token)].reshape(-1, 1))


def target_vector(table: EmbeddingTable, vocabulary: Vocabulary,
                  target_tokens) -> Tensor:
    """Arithmetic mean of the target words' vectors.

    Rows are summed in sorted-index order, which makes the result exactly
    invariant to the order of the tokens (floating-point addition is not
    associative, so summing in input order would not be).
    """
    tokens = list(target_tokens)
    if not tokens:
        raise ValidationError("target must contain at least one token")
    indices = sorted(vocabulary.index_of(t) for t in tokens)
    total = np.zeros(table.dim, dtype=table.dtype)
    for i in indices:
        total += table.matrix[i]
    return Tensor((total / len(indices)).reshape(-1, 1))
