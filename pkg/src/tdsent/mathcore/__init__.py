"""Numeric foundation: tensors, reverse-mode differentiation, seeded RNG.

numpy supplies the dense array arithmetic; everything model-specific (the
composite-layer adjoints, the fused losses) is implemented here by hand.
"""

from .autodiff import Gradients, Tape, Var
from .rng import derive
from .tensor import (
    DEFAULT_DTYPE,
    Tensor,
    add,
    matmul,
    mul,
    sigmoid,
    softmax,
    tanh,
)

__all__ = [
    "DEFAULT_DTYPE",
    "Gradients",
    "Tape",
    "Tensor",
    "Var",
    "add",
    "derive",
    "matmul",
    "mul",
    "sigmoid",
    "softmax",
    "tanh",
]
