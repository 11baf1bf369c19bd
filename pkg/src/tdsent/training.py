"""Plain SGD training with per-example updates.

The regime is deliberately simple: batch size 1, constant learning rate, no
momentum, no decay, no early stopping. The one stabilising device is
gradient clipping on the softmax layer (by default: if the joint L2 norm of
the softmax weight and bias gradients exceeds the threshold, both are
rescaled onto it). Examples are visited in a freshly shuffled order each
epoch, drawn from the stream (seed, "epoch-shuffle"), so a run is a pure
function of (data, config, initial parameters).
"""

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .corpus import Instance, split
from .errors import ConsistencyError, TrainingDiverged, ValidationError
from .evaluation import evaluate
from .mathcore import Tensor
from .mathcore.autodiff import Gradients, Tape
from .mathcore.rng import derive
from .models import (
    EMBEDDINGS_NAME,
    SOFTMAX_B,
    SOFTMAX_W,
    ModelParams,
    Prediction,
    build_logits,
    predict,
)

CLIP_MODES = ("norm-clip", "value-clip", "off")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int
    learning_rate: float = 0.01
    clip_threshold: float = 200.0
    clip_mode: str = "norm-clip"
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs}")
        if self.learning_rate <= 0:
            raise ValidationError(
                f"learning rate must be positive, got {self.learning_rate}")
        if self.clip_threshold <= 0:
            raise ValidationError(
                f"clip threshold must be positive, got {self.clip_threshold}")
        if self.clip_mode not in CLIP_MODES:
            raise ValidationError(
                f"clip mode must be one of {CLIP_MODES}, got {self.clip_mode!r}")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int               # 1-based
    mean_loss: float
    train_accuracy: float    # measured on the fly, pre-update per example
    test_accuracy: float | None
    test_macro_f1: float | None
    seconds: float           # wall clock for the update pass only

    def to_json(self) -> str:
        return json.dumps({
            "epoch": self.epoch,
            "mean_loss": self.mean_loss,
            "train_accuracy": self.train_accuracy,
            "test_accuracy": self.test_accuracy,
            "test_macro_f1": self.test_macro_f1,
            "seconds": self.seconds,
        }, sort_keys=True)


@dataclass
class TrainLog:
    """One record per epoch, serialisable as JSON lines."""

    records: list[EpochRecord] = field(default_factory=list)

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for record in self.records:
                fh.write(record.to_json() + "\n")

    @classmethod
    def load(cls, path) -> "TrainLog":
        records = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    records.append(EpochRecord(**json.loads(line)))
        return cls(records)


def cross_entropy(prediction: Prediction, gold_class: int) -> float:
    """Negative log-probability of the gold class.

    Computed from the stored logits with the fused log-softmax, so extreme
    scores cannot underflow through an intermediate probability of 0.
    """
    x = prediction.logits.data
    if not (0 <= gold_class < x.shape[0]):
        raise ValidationError(
            f"gold class {gold_class} outside 0..{x.shape[0] - 1}")
    m = float(np.max(x))
    return float(np.log(np.sum(np.exp(x - m))) - (x[gold_class, 0] - m))


def prepare(params: ModelParams, instance: Instance):
    """The example form the variant's forward pass consumes."""
    return instance if params.variant == "lstm" else split(instance)


def loss_and_gradients(params: ModelParams, example, gold_class: int):
    """Loss, gradients and prediction for one example.

    Gradient keys are exactly params.trainable_names(); parameters the
    example never touches map to zeros.
    """
    tape = Tape()
    for name, tensor in params.named_parameters().items():
        tape.declare_parameter(name, tensor.data)
    if params.embeddings.trainable:
        tape.declare_embeddings(params.embeddings.matrix.shape,
                                params.embeddings.dtype)
    logits = build_logits(params, example, tape)
    loss_var, probs = tape.softmax_cross_entropy(logits, gold_class)
    grads = tape.backward(loss_var)
    prediction = Prediction(
        probabilities=Tensor(probs),
        predicted_class=int(np.argmax(probs)),
        logits=Tensor(logits.value),
    )
    return float(loss_var.value[0, 0]), grads, prediction


def example_loss(params: ModelParams, example, gold_class: int) -> float:
    """Loss only, no recording (cheap path for finite differences)."""
    tape = Tape(record=False)
    logits = build_logits(params, example, tape)
    loss_var, _ = tape.softmax_cross_entropy(logits, gold_class)
    return float(loss_var.value[0, 0])


def _clipped_softmax_grads(grads: Gradients, config: TrainConfig):
    gw = grads.array(SOFTMAX_W)
    gb = grads.array(SOFTMAX_B)
    if config.clip_mode == "norm-clip":
        norm = math.sqrt(float(np.sum(gw * gw)) + float(np.sum(gb * gb)))
        if norm > config.clip_threshold:
            scale = config.clip_threshold / norm
            return gw * scale, gb * scale
    elif config.clip_mode == "value-clip":
        t = config.clip_threshold
        return np.clip(gw, -t, t), np.clip(gb, -t, t)
    return gw, gb


def sgd_step(params: ModelParams, grads: Gradients,
             config: TrainConfig) -> ModelParams:
    """One update: theta <- theta - lr * grad for every trainable parameter.

    Softmax-layer gradients are clipped first (see module docstring).
    Embedding rows are updated in place on the shared table; everything
    else is replaced functionally.
    """
    expected = params.trainable_names()
    if grads.names() != expected:
        missing = sorted(expected - grads.names())
        extra = sorted(grads.names() - expected)
        raise ConsistencyError(
            f"gradient keys do not match trainable parameters "
            f"(missing {missing}, unexpected {extra})")
    lr = config.learning_rate
    gw, gb = _clipped_softmax_grads(grads, config)
    updated = params
    for name, tensor in params.named_parameters().items():
        if name == SOFTMAX_W:
            g = gw
        elif name == SOFTMAX_B:
            g = gb
        else:
            g = grads.array(name)
        updated = updated.with_parameter(name, Tensor._wrap(tensor.data - lr * g))
    if params.embeddings.trainable:
        matrix = params.embeddings.matrix
        for row, vec in grads.embedding_rows.items():
            matrix[row] -= lr * vec
    return updated


def _test_metrics(params: ModelParams, prepared_test):
    if not prepared_test:
        return None, None
    predictions = [predict(params, ex).predicted_class for ex, _ in prepared_test]
    golds = [gold for _, gold in prepared_test]
    report = evaluate(predictions, golds, num_classes=params.num_classes)
    return report.accuracy, report.macro_f1


def train(params: ModelParams, train_set, test_set,
          config: TrainConfig) -> tuple[ModelParams, TrainLog]:
    """Run the full schedule, returning final parameters and the log.

    Per epoch the log records mean loss, on-the-fly training accuracy (each
    example scored just before its own update), test accuracy and macro-F1
    under the epoch-final parameters, and the wall-clock seconds of the
    update pass (the only field that is not deterministic). A non-finite
    loss aborts with TrainingDiverged naming the epoch and instance index.
    """
    train_set = list(train_set)
    if not train_set:
        raise ValidationError("training set is empty")
    prepared = [(prepare(params, inst), inst.gold_class) for inst in train_set]
    prepared_test = [(prepare(params, inst), inst.gold_class)
                     for inst in (test_set or [])]
    shuffle_rng = derive(config.seed, "epoch-shuffle")
    log = TrainLog()
    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(len(prepared))
        started = time.perf_counter()
        total_loss = 0.0
        correct = 0
        for index in order:
            example, gold = prepared[int(index)]
            loss, grads, prediction = loss_and_gradients(params, example, gold)
            if not math.isfinite(loss):
                raise TrainingDiverged(epoch, int(index), loss)
            params = sgd_step(params, grads, config)
            total_loss += loss
            correct += prediction.predicted_class == gold
        seconds = time.perf_counter() - started
        test_accuracy, test_macro_f1 = _test_metrics(params, prepared_test)
        log.records.append(EpochRecord(
            epoch=epoch,
            mean_loss=total_loss / len(prepared),
            train_accuracy=correct / len(prepared),
            test_accuracy=test_accuracy,
            test_macro_f1=test_macro_f1,
            seconds=seconds,
        ))
    return params, log
