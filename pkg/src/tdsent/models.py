"""The classifiers: span-blind LSTM, the target-split variants, and the
attention variant.

All four share the same skeleton: embed tokens, run one or two LSTM
branches, reduce to a feature vector, apply the softmax layer. They differ
in what the branches see.

- "lstm" runs a single LSTM over the whole sentence and classifies from the
  final hidden state, ignoring the target span entirely.
- "td-lstm" runs a left branch over preceding-context + target and a right
  branch backwards over target + following-context (so both branches finish
  on the target), then combines the two final hidden states.
- "tc-lstm" is the same topology but every input is the concatenation of
  the word vector with the mean vector of the target words.
- "att-td-lstm" keeps all hidden states of both branches and replaces the
  final-state readout with per-branch soft attention: each state is scored
  by a small feedforward scorer (v . tanh(w h + b)), scores are softmaxed
  over positions, and the branch output is the weighted average of its
  states. Kept for comparison; on the benchmark task it underperforms the
  plain variants.

Forward passes never mutate parameters. Checkpoints use a single-file
binary container written deterministically (same params, same bytes), see
save_params.
"""

import json
from dataclasses import dataclass, replace

import numpy as np

from .cells import LstmCellParams
from .corpus import Instance, SplitInstance, split
from .embeddings import EmbeddingTable, Vocabulary
from .errors import (
    CheckpointError,
    DimensionError,
    ValidationError,
    VariantMismatchError,
)
from .mathcore import Tensor
from .mathcore.autodiff import Tape, Var
from .mathcore.rng import derive
from .mathcore.tensor import softmax_column

VARIANTS = ("lstm", "td-lstm", "tc-lstm", "att-td-lstm")
COMBINE_MODES = ("concat", "sum", "mean")
INIT_RANGE = 0.003

EMBEDDINGS_NAME = "embeddings"
SOFTMAX_W = "softmax.w"
SOFTMAX_B = "softmax.b"

_GATE_FIELDS = ("w_i", "b_i", "w_f", "b_f", "w_o", "b_o", "w_c", "b_c")
_ATTENTION_FIELDS = ("w", "b", "v")


@dataclass(frozen=True)
class SoftmaxParams:
    """Affine map from the feature vector to class scores."""

    w: Tensor  # (C, f)
    b: Tensor  # (C, 1)

    def __post_init__(self):
        if self.b.cols != 1 or self.w.rows != self.b.rows:
            raise DimensionError(
                f"softmax shapes disagree: w {self.w.shape}, b {self.b.shape}")


@dataclass(frozen=True)
class AttentionParams:
    """Feedforward scorer for one branch: score(h) = v . tanh(w h + b)."""

    w: Tensor  # (a, d)
    b: Tensor  # (a, 1)
    v: Tensor  # (1, a)

    def __post_init__(self):
        a = self.w.rows
        if self.b.shape != (a, 1) or self.v.shape != (1, a):
            raise DimensionError(
                f"attention shapes disagree: w {self.w.shape}, "
                f"b {self.b.shape}, v {self.v.shape}")


@dataclass(frozen=True)
class Prediction:
    """Class distribution for one example."""

    probabilities: Tensor  # (C, 1), sums to 1
    predicted_class: int   # argmax, lowest index on ties
    logits: Tensor         # (C, 1) pre-softmax scores


def _cell_names(variant: str) -> tuple[str, ...]:
    return ("cell",) if variant == "lstm" else ("left", "right")


def _input_width(variant: str, embedding_dim: int) -> int:
    return 2 * embedding_dim if variant == "tc-lstm" else embedding_dim


def _feature_length(variant: str, hidden_size: int, combine: str) -> int:
    if variant == "lstm":
        return hidden_size
    if variant == "att-td-lstm":
        return 2 * hidden_size  # attention branch outputs are always concatenated
    return 2 * hidden_size if combine == "concat" else hidden_size


def parameter_layout(variant: str, hidden_size: int, num_classes: int,
                     embedding_dim: int, combine: str) -> list[tuple[str, tuple[int, int]]]:
    """Ordered (name, shape) pairs for every non-embedding parameter.

    This single list drives init sampling order, checkpoint layout, and
    shape validation, so they cannot drift apart.
    """
    d = hidden_size
    k = _input_width(variant, embedding_dim)
    layout = []
    for cell in _cell_names(variant):
        for field in _GATE_FIELDS:
            shape = (d, d + k) if field.startswith("w") else (d, 1)
            layout.append((f"{cell}.{field}", shape))
    if variant == "att-td-lstm":
        for branch in ("att_left", "att_right"):
            layout.append((f"{branch}.w", (d, d)))
            layout.append((f"{branch}.b", (d, 1)))
            layout.append((f"{branch}.v", (1, d)))
    f = _feature_length(variant, d, combine)
    layout.append((SOFTMAX_W, (num_classes, f)))
    layout.append((SOFTMAX_B, (num_classes, 1)))
    return layout


@dataclass
class ModelParams:
    """Everything a forward pass needs, including the embedding table.

    Treat as immutable during inference; the training loop is the only
    writer (it replaces tensors functionally and updates embedding rows in
    place).
    """

    variant: str
    hidden_size: int
    num_classes: int
    combine: str
    cells: dict[str, LstmCellParams]
    softmax: SoftmaxParams
    attention: dict[str, AttentionParams] | None
    embeddings: EmbeddingTable
    vocabulary: Vocabulary

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValidationError(f"unknown variant {self.variant!r}")
        if self.combine not in COMBINE_MODES:
            raise ValidationError(f"unknown combine mode {self.combine!r}")
        if self.embeddings.size != len(self.vocabulary):
            raise ValidationError(
                f"embedding table has {self.embeddings.size} rows, vocabulary "
                f"has {len(self.vocabulary)} tokens")
        expected = dict(parameter_layout(
            self.variant, self.hidden_size, self.num_classes,
            self.embeddings.dim, self.combine))
        actual = self.named_parameters()
        if set(actual) != set(expected):
            raise ValidationError(
                f"parameter names {sorted(actual)} do not match the "
                f"{self.variant} layout {sorted(expected)}")
        for name, tensor in actual.items():
            if tensor.shape != expected[name]:
                raise DimensionError(
                    f"{name} has shape {tensor.shape}, expected {expected[name]}")

    @property
    def embedding_dim(self) -> int:
        return self.embeddings.dim

    @property
    def feature_length(self) -> int:
        return _feature_length(self.variant, self.hidden_size, self.combine)

    def named_parameters(self) -> dict[str, Tensor]:
        """Non-embedding parameters in layout order."""
        named = {}
        for cell_name in _cell_names(self.variant):
            for field, tensor in self.cells[cell_name].fields().items():
                named[f"{cell_name}.{field}"] = tensor
        if self.attention is not None:
            for branch in ("att_left", "att_right"):
                params = self.attention[branch]
                for field in _ATTENTION_FIELDS:
                    named[f"{branch}.{field}"] = getattr(params, field)
        named[SOFTMAX_W] = self.softmax.w
        named[SOFTMAX_B] = self.softmax.b
        return named

    def trainable_names(self) -> frozenset:
        names = set(self.named_parameters())
        if self.embeddings.trainable:
            names.add(EMBEDDINGS_NAME)
        return frozenset(names)

    def with_parameter(self, name: str, tensor: Tensor) -> "ModelParams":
        """Functionally replace one parameter (used by SGD and by the
        finite-difference checker)."""
        if name == EMBEDDINGS_NAME:
            table = EmbeddingTable(np.array(tensor.data),
                                   trainable=self.embeddings.trainable)
            return replace(self, embeddings=table)
        if name not in self.named_parameters():
            raise ValidationError(f"unknown parameter name {name!r}")
        prefix, field = name.rsplit(".", 1)
        if prefix == "softmax":
            return replace(self, softmax=replace(self.softmax, **{field: tensor}))
        if prefix in ("att_left", "att_right"):
            attention = dict(self.attention)
            attention[prefix] = replace(attention[prefix], **{field: tensor})
            return replace(self, attention=attention)
        if prefix in self.cells:
            cells = dict(self.cells)
            cells[prefix] = replace(cells[prefix], **{field: tensor})
            return replace(self, cells=cells)
        raise ValidationError(f"unknown parameter name {name!r}")


def init_params(variant: str, hidden_size: int, num_classes: int, seed: int,
                embeddings: EmbeddingTable, vocabulary: Vocabulary,
                combine: str = "concat") -> ModelParams:
    """Sample every parameter entry from U(-0.003, 0.003).

    Tensors are drawn in layout order from the stream (seed, "model-init"),
    so a seed pins down the full initialisation. Word vectors are not drawn
    here; they come with the table.
    """
    if variant not in VARIANTS:
        raise ValidationError(f"unknown variant {variant!r}")
    if hidden_size < 1:
        raise ValidationError(f"hidden size must be positive, got {hidden_size}")
    if num_classes < 2:
        raise ValidationError(f"need at least 2 classes, got {num_classes}")
    if combine not in COMBINE_MODES:
        raise ValidationError(f"unknown combine mode {combine!r}")
    dtype = embeddings.dtype
    rng = derive(seed, "model-init")
    drawn = {
        name: Tensor(rng.uniform(-INIT_RANGE, INIT_RANGE, shape).astype(dtype))
        for name, shape in parameter_layout(
            variant, hidden_size, num_classes, embeddings.dim, combine)
    }
    return _assemble(variant, hidden_size, num_classes, combine,
                     drawn, embeddings, vocabulary)


def _assemble(variant, hidden_size, num_classes, combine, tensors,
              embeddings, vocabulary) -> ModelParams:
    cells = {}
    for cell_name in _cell_names(variant):
        cells[cell_name] = LstmCellParams(
            **{field: tensors[f"{cell_name}.{field}"] for field in _GATE_FIELDS})
    attention = None
    if variant == "att-td-lstm":
        attention = {
            branch: AttentionParams(
                **{field: tensors[f"{branch}.{field}"] for field in _ATTENTION_FIELDS})
            for branch in ("att_left", "att_right")
        }
    softmax_params = SoftmaxParams(tensors[SOFTMAX_W], tensors[SOFTMAX_B])
    return ModelParams(
        variant=variant, hidden_size=hidden_size, num_classes=num_classes,
        combine=combine, cells=cells, softmax=softmax_params,
        attention=attention, embeddings=embeddings, vocabulary=vocabulary)


# -- forward passes -----------------------------------------------------


def _token_var(tape: Tape, params: ModelParams, token: str) -> Var:
    row = params.vocabulary.index_of(token)
    value = params.embeddings.matrix[row].reshape(-1, 1)
    if params.embeddings.trainable:
        return tape.embedding_row(row, value)
    return tape.leaf(value)


def _run_branch(tape: Tape, params: ModelParams, cell_name: str,
                inputs: list[Var]) -> list[Var]:
    """Fold the named cell over the inputs, returning all hidden Vars."""
    cell = params.cells[cell_name]
    d = cell.hidden_size
    dtype = params.embeddings.dtype
    h = tape.leaf(np.zeros((d, 1), dtype=dtype))
    c = tape.leaf(np.zeros((d, 1), dtype=dtype))
    hs = []
    for x in inputs:
        h, c = tape.lstm_cell(cell_name, *cell.arrays(), h, c, x)
        hs.append(h)
    return hs


def _combine(tape: Tape, params: ModelParams, left: Var, right: Var) -> Var:
    if params.combine == "concat":
        return tape.concat(left, right)
    total = tape.add(left, right)
    return total if params.combine == "sum" else tape.scale(total, 0.5)


def _logits(tape: Tape, params: ModelParams, feature: Var) -> Var:
    return tape.affine(SOFTMAX_W, params.softmax.w.data, feature,
                       SOFTMAX_B, params.softmax.b.data)


def _branch_token_seqs(x: SplitInstance):
    left = list(x.preceding + x.target)
    right = list(reversed(x.target + x.following))  # finishes on the target
    return left, right


def build_logits(params: ModelParams, example, tape: Tape) -> Var:
    """Record the forward graph for one example and return the logits Var.

    The example is an Instance for the span-blind variant and a
    SplitInstance for the target-aware ones (an Instance is split
    automatically).
    """
    if params.variant == "lstm":
        tokens = list(example.tokens)
        if not tokens:
            raise ValidationError("cannot classify an empty token sequence")
        inputs = [_token_var(tape, params, t) for t in tokens]
        final = _run_branch(tape, params, "cell", inputs)[-1]
        return _logits(tape, params, final)

    x = split(example) if isinstance(example, Instance) else example
    left_tokens, right_tokens = _branch_token_seqs(x)

    if params.variant == "tc-lstm":
        # One mean vector per example, shared by every step of both
        # branches. Summing in sorted-row order makes it bit-identical to
        # embeddings.target_vector.
        mean_vars = [_token_var(tape, params, t) for t in x.target]
        order = sorted(range(len(x.target)),
                       key=lambda i: params.vocabulary.index_of(x.target[i]))
        v_target = tape.mean([mean_vars[i] for i in order])
        left_inputs = [tape.concat(_token_var(tape, params, t), v_target)
                       for t in left_tokens]
        right_inputs = [tape.concat(_token_var(tape, params, t), v_target)
                        for t in right_tokens]
    else:
        left_inputs = [_token_var(tape, params, t) for t in left_tokens]
        right_inputs = [_token_var(tape, params, t) for t in right_tokens]

    left_hs = _run_branch(tape, params, "left", left_inputs)
    right_hs = _run_branch(tape, params, "right", right_inputs)

    if params.variant == "att-td-lstm":
        pooled = [
            _attend_branch(tape, params.attention[att_name], att_name, hs)
            for att_name, hs in (("att_left", left_hs), ("att_right", right_hs))
        ]
        feature = tape.concat(pooled[0], pooled[1])
    else:
        feature = _combine(tape, params, left_hs[-1], right_hs[-1])
    return _logits(tape, params, feature)


def _attend_branch(tape: Tape, att: AttentionParams, att_name: str,
                   hs: list[Var]) -> Var:
    scores = []
    for h in hs:
        hidden = tape.affine(f"{att_name}.w", att.w.data, h,
                             f"{att_name}.b", att.b.data)
        scores.append(tape.affine(f"{att_name}.v", att.v.data, tape.tanh(hidden)))
    return tape.attend(scores, hs)


def _prediction(logits_value: np.ndarray) -> Prediction:
    probs = softmax_column(logits_value)
    return Prediction(
        probabilities=Tensor(probs),
        predicted_class=int(np.argmax(probs)),  # argmax takes the lowest index on ties
        logits=Tensor(logits_value),
    )


def _require_variant(params: ModelParams, expected: str) -> None:
    if params.variant != expected:
        raise VariantMismatchError(
            f"parameters are for variant {params.variant!r}, "
            f"this forward pass is for {expected!r}")


def forward_lstm(params: ModelParams, example) -> Prediction:
    """Span-blind forward pass; the target span never enters."""
    _require_variant(params, "lstm")
    return _prediction(build_logits(params, example, Tape(record=False)).value)


def forward_td(params: ModelParams, example) -> Prediction:
    _require_variant(params, "td-lstm")
    return _prediction(build_logits(params, example, Tape(record=False)).value)


def forward_tc(params: ModelParams, example) -> Prediction:
    _require_variant(params, "tc-lstm")
    return _prediction(build_logits(params, example, Tape(record=False)).value)


def forward_att(params: ModelParams, example) -> Prediction:
    _require_variant(params, "att-td-lstm")
    return _prediction(build_logits(params, example, Tape(record=False)).value)


def predict(params: ModelParams, example) -> Prediction:
    """Variant-dispatching forward pass."""
    return _prediction(build_logits(params, example, Tape(record=False)).value)


# -- checkpoints ---------------------------------------------------------
#
# Single-file binary container, written deterministically:
#
#   magic line        b"tdsent-checkpoint\n"
#   header length     4-byte little-endian unsigned int
#   header            JSON (utf-8, sorted keys): format_version, variant,
#                     hidden_size, num_classes, combine, dtype,
#                     embedding_dim, vocabulary_size, embeddings_trainable,
#                     lowercase, tensors = [[name, rows, cols], ...]
#   vocabulary        8-byte LE length + "\n".join(tokens) utf-8
#   embedding matrix  vocabulary_size * embedding_dim values, row-major,
#                     little-endian, dtype as declared
#   tensors           raw values in header order, same encoding
#
# Identical parameters produce identical bytes, which is what makes the
# end-to-end determinism guarantee checkable at the file level.

MAGIC = b"tdsent-checkpoint\n"
FORMAT_VERSION = 1

_DTYPE_CODES = {"float64": "<f8", "float32": "<f4"}


def save_params(params: ModelParams, path) -> None:
    dtype_name = params.embeddings.dtype.name
    if dtype_name not in _DTYPE_CODES:
        raise ValidationError(f"cannot serialise dtype {dtype_name}")
    code = _DTYPE_CODES[dtype_name]
    named = params.named_parameters()
    header = {
        "format_version": FORMAT_VERSION,
        "variant": params.variant,
        "hidden_size": params.hidden_size,
        "num_classes": params.num_classes,
        "combine": params.combine,
        "dtype": dtype_name,
        "embedding_dim": params.embeddings.dim,
        "vocabulary_size": len(params.vocabulary),
        "embeddings_trainable": params.embeddings.trainable,
        "lowercase": params.vocabulary.lowercase,
        "tensors": [[name, t.rows, t.cols] for name, t in named.items()],
    }
    header_bytes = json.dumps(header, sort_keys=True,
                              separators=(",", ":")).encode("utf-8")
    vocab_bytes = "\n".join(params.vocabulary.tokens).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(len(header_bytes).to_bytes(4, "little"))
        fh.write(header_bytes)
        fh.write(len(vocab_bytes).to_bytes(8, "little"))
        fh.write(vocab_bytes)
        fh.write(np.ascontiguousarray(params.embeddings.matrix).astype(code).tobytes())
        for _, tensor in named.items():
            fh.write(tensor.data.astype(code).tobytes())


def _read_exact(fh, n: int, what: str) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise CheckpointError(f"truncated checkpoint while reading {what}")
    return buf


def load_params(path) -> ModelParams:
    """Load a checkpoint written by save_params, validating as it reads."""
    with open(path, "rb") as fh:
        if fh.read(len(MAGIC)) != MAGIC:
            raise CheckpointError(f"{path}: not a checkpoint (bad magic)")
        header_len = int.from_bytes(_read_exact(fh, 4, "header length"), "little")
        try:
            header = json.loads(_read_exact(fh, header_len, "header"))
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise CheckpointError(f"{path}: corrupt header ({exc})") from None
        if header.get("format_version") != FORMAT_VERSION:
            raise CheckpointError(
                f"{path}: format version {header.get('format_version')!r}, "
                f"this build reads {FORMAT_VERSION}")
        variant = header["variant"]
        if variant not in VARIANTS:
            raise CheckpointError(f"{path}: unknown variant {variant!r}")
        code = _DTYPE_CODES.get(header["dtype"])
        if code is None:
            raise CheckpointError(f"{path}: unknown dtype {header['dtype']!r}")
        dtype = np.dtype(code).newbyteorder("=")
        vocab_len = int.from_bytes(_read_exact(fh, 8, "vocabulary length"), "little")
        tokens = tuple(_read_exact(fh, vocab_len, "vocabulary").decode("utf-8").split("\n"))
        if len(tokens) != header["vocabulary_size"]:
            raise CheckpointError(
                f"{path}: vocabulary has {len(tokens)} tokens, header says "
                f"{header['vocabulary_size']}")
        vocabulary = Vocabulary(tokens, lowercase=header["lowercase"])
        v, e = header["vocabulary_size"], header["embedding_dim"]
        itemsize = np.dtype(code).itemsize
        matrix = np.frombuffer(
            _read_exact(fh, v * e * itemsize, "embedding matrix"), dtype=code
        ).astype(dtype).reshape(v, e)
        embeddings = EmbeddingTable(matrix, trainable=header["embeddings_trainable"])
        expected = parameter_layout(
            variant, header["hidden_size"], header["num_classes"], e,
            header["combine"])
        recorded = [(name, (rows, cols)) for name, rows, cols in header["tensors"]]
        if recorded != expected:
            raise CheckpointError(
                f"{path}: tensor layout does not match the {variant} layout")
        tensors = {}
        for name, (rows, cols) in expected:
            buf = _read_exact(fh, rows * cols * itemsize, name)
            tensors[name] = Tensor(
                np.frombuffer(buf, dtype=code).astype(dtype).reshape(rows, cols))
        if fh.read(1):
            raise CheckpointError(f"{path}: trailing bytes after the last tensor")
    return _assemble(variant, header["hidden_size"], header["num_classes"],
                     header["combine"], tensors, embeddings, vocabulary)
