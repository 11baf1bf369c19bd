"""Finite-difference verification of the analytic gradients.

For each trainable parameter this perturbs every entry by +/-eps (central
differences, 64-bit only) and compares the two gradients with the guarded
relative error |a - fd| / max(|a|, |fd|, floor), where |.| is the L2 norm
over the parameter's entries. A norm comparison is the meaningful one at
this eps: central differences carry an eps^2-order truncation term, so an
individual entry whose true derivative happens to cancel to ~1e-7 shows a
large entrywise quotient no matter how correct the analytic gradient is,
while the norm quotient stays tiny unless the gradient is actually wrong.
The floor covers parameters with exactly zero gradient. The check goes
through the public loss evaluation path rather than any shortcut.
"""

from dataclasses import dataclass

import numpy as np

from .corpus import SplitInstance
from .embeddings import EmbeddingTable, Vocabulary
from .errors import ValidationError
from .mathcore import Tensor
from .mathcore.rng import derive
from .models import EMBEDDINGS_NAME, ModelParams, init_params
from .training import example_loss, loss_and_gradients

EPSILON = 1e-5
TOLERANCE = 1e-4
FLOOR = 1e-8


@dataclass(frozen=True)
class ParameterCheck:
    name: str
    relative_error: float
    passed: bool


@dataclass(frozen=True)
class GradCheckReport:
    checks: tuple[ParameterCheck, ...]
    tolerance: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def worst(self) -> float:
        return max(c.relative_error for c in self.checks)

    def to_text(self) -> str:
        width = max(len(c.name) for c in self.checks) + 2
        lines = [f"{c.name:{width}}rel err {c.relative_error:.3e}  "
                 f"{'ok' if c.passed else 'FAIL'}" for c in self.checks]
        verdict = "passed" if self.passed else "FAILED"
        lines.append(f"gradient check {verdict} "
                     f"(worst {self.worst:.3e}, tolerance {self.tolerance:.0e})")
        return "\n".join(lines)


def relative_error(analytic: np.ndarray, numeric: np.ndarray,
                   floor: float = FLOOR) -> float:
    """Guarded relative error between two gradients of one parameter.

    Magnitudes are L2 norms over the flattened arrays; the floor keeps
    parameters whose gradient is exactly zero (both evaluations identical)
    from dividing by zero.
    """
    diff = float(np.linalg.norm((analytic - numeric).ravel()))
    denom = max(float(np.linalg.norm(analytic.ravel())),
                float(np.linalg.norm(numeric.ravel())), floor)
    return diff / denom


def finite_difference(params: ModelParams, example, gold_class: int,
                      name: str, eps: float = EPSILON) -> np.ndarray:
    """Central-difference gradient of the loss for one named parameter."""
    if name == EMBEDDINGS_NAME:
        base = params.embeddings.matrix
    else:
        base = params.named_parameters()[name].data
    if base.dtype != np.float64:
        raise ValidationError("finite differences require float64 parameters")
    grad = np.zeros_like(base)
    flat = base.ravel()
    for at in range(flat.size):
        bumped = flat.copy()
        bumped[at] = flat[at] + eps
        plus = example_loss(
            params.with_parameter(name, Tensor(bumped.reshape(base.shape))),
            example, gold_class)
        bumped[at] = flat[at] - eps
        minus = example_loss(
            params.with_parameter(name, Tensor(bumped.reshape(base.shape))),
            example, gold_class)
        grad.ravel()[at] = (plus - minus) / (2.0 * eps)
    return grad


def check_gradients(params: ModelParams, example, gold_class: int,
                    eps: float = EPSILON, tolerance: float = TOLERANCE,
                    corrupt: bool = False) -> GradCheckReport:
    """Compare the tape's gradients with finite differences for every
    trainable parameter.

    corrupt=True deliberately skews the analytic gradients before the
    comparison; it exists so tests can prove the check actually fails when
    gradients are wrong.
    """
    _, grads, _ = loss_and_gradients(params, example, gold_class)
    checks = []
    for name in sorted(params.trainable_names()):
        analytic = grads[name].data.copy()
        if corrupt:
            analytic += 1e-2
        numeric = finite_difference(params, example, gold_class, name, eps)
        err = relative_error(analytic, numeric)
        checks.append(ParameterCheck(name, err, err < tolerance))
    return GradCheckReport(tuple(checks), tolerance)


PARAM_SCALE = 0.4       # check-point scale; see below
ATTENTION_SCALE = 2.0   # scorer params need wider draws, see below


def random_case(variant: str, hidden_size: int, seed: int,
                sentence_length: int = 5,
                preceding: int | None = None,
                following: int | None = None):
    """A small random (params, example, gold) triple for checking.

    The vocabulary is a handful of synthetic tokens. Parameters and word
    vectors are drawn at O(0.1) scale rather than the tiny training init:
    at the training init some gate gradients are ~1e-7 and the loss
    difference across +/-eps drowns in 64-bit rounding noise, which says
    nothing about whether the analytic gradients are right. Gradient
    correctness is scale-independent, so the check runs where central
    differences are trustworthy.

    The attention scorer gets wider draws still. Its bias gradient is a
    sum of per-position terms whose softmax adjoints cancel exactly, so
    when the recurrent states barely differ the whole tensor lands around
    1e-7 and finite differences cannot resolve it; spreading the scores
    keeps the surviving contrast well above the noise.

    preceding/following override how many tokens sit on each side of the
    target (None picks randomly; the target gets the rest, at least one
    token).
    """
    if sentence_length < 1:
        raise ValidationError("need at least one token")
    rng = derive(seed, "gradcheck-case", variant, str(hidden_size))
    tokens = [f"tok{i}" for i in range(10)]
    vocabulary = Vocabulary.build([tokens])
    matrix = rng.uniform(-0.5, 0.5, (len(vocabulary), hidden_size))
    embeddings = EmbeddingTable(matrix, trainable=True)
    params = init_params(variant, hidden_size, 3, seed, embeddings, vocabulary)
    for name, tensor in params.named_parameters().items():
        scale = ATTENTION_SCALE if name.startswith("att") else PARAM_SCALE
        params = params.with_parameter(
            name, Tensor(rng.uniform(-scale, scale, tensor.shape)))

    if preceding is None:
        preceding = int(rng.integers(0, sentence_length))
    if following is None:
        following = int(rng.integers(0, sentence_length - preceding))
    target_len = sentence_length - preceding - following
    if target_len < 1:
        raise ValidationError(
            f"context sizes {preceding}+{following} leave no target in "
            f"{sentence_length} tokens")
    draw = lambda n: tuple(tokens[i] for i in rng.integers(0, len(tokens), n))
    example = SplitInstance(
        preceding=draw(preceding),
        target=draw(target_len),
        following=draw(following),
        label=int(rng.choice((-1, 0, 1))),
    )
    return params, example, example.gold_class
