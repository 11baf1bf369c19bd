"""Recurrent cells: plain tanh RNN step, LSTM step, and sequence folding.

Parameter containers are frozen dataclasses of Tensors, so cells can be
shared between threads and reused across forward passes. The LSTM forward
math lives in mathcore's tape (it is also a differentiation node); this
module wraps it behind value-level functions and validates shapes up front.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ValidationError
from .mathcore import Tensor
from .mathcore.autodiff import Tape

DIRECTIONS = ("forward", "reversed")


@dataclass(frozen=True)
class RnnCellParams:
    """tanh recurrence: new hidden = tanh(w @ [h; x] + b)."""

    w: Tensor  # (d, d + k)
    b: Tensor  # (d, 1)

    def __post_init__(self):
        d = self.b.rows
        if self.b.cols != 1:
            raise DimensionError(f"bias must be a column vector, got {self.b.shape}")
        if self.w.rows != d or self.w.cols <= d:
            raise DimensionError(
                f"weight shape {self.w.shape} inconsistent with bias length {d}"
            )

    @property
    def hidden_size(self) -> int:
        return self.b.rows

    @property
    def input_size(self) -> int:
        return self.w.cols - self.b.rows


@dataclass(frozen=True)
class LstmCellParams:
    """Input, forget, output gate and candidate transforms.

    Every weight is (d, d + k) and acts on the concatenation [h_prev; x];
    every bias is (d, 1).
    """

    w_i: Tensor
    b_i: Tensor
    w_f: Tensor
    b_f: Tensor
    w_o: Tensor
    b_o: Tensor
    w_c: Tensor
    b_c: Tensor

    def __post_init__(self):
        d = self.b_i.rows
        cols = self.w_i.cols
        if cols <= d:
            raise DimensionError(
                f"gate weight shape {self.w_i.shape} leaves no input columns"
            )
        for name in ("w_i", "w_f", "w_o", "w_c"):
            t = getattr(self, name)
            if t.shape != (d, cols):
                raise DimensionError(f"{name} has shape {t.shape}, expected {(d, cols)}")
        for name in ("b_i", "b_f", "b_o", "b_c"):
            t = getattr(self, name)
            if t.shape != (d, 1):
                raise DimensionError(f"{name} has shape {t.shape}, expected {(d, 1)}")

    @property
    def hidden_size(self) -> int:
        return self.b_i.rows

    @property
    def input_size(self) -> int:
        return self.w_i.cols - self.b_i.rows

    def fields(self) -> dict[str, Tensor]:
        return {
            "w_i": self.w_i, "b_i": self.b_i,
            "w_f": self.w_f, "b_f": self.b_f,
            "w_o": self.w_o, "b_o": self.b_o,
            "w_c": self.w_c, "b_c": self.b_c,
        }

    def arrays(self):
        """Gate arrays in the order mathcore's lstm_cell node expects."""
        return (
            self.w_i.data, self.b_i.data,
            self.w_f.data, self.b_f.data,
            self.w_o.data, self.b_o.data,
            self.w_c.data, self.b_c.data,
        )


@dataclass(frozen=True)
class LstmState:
    """Hidden and cell state after some number of steps."""

    h: Tensor  # (d, 1), every entry in (-1, 1)
    c: Tensor  # (d, 1)

    @classmethod
    def zero(cls, d: int, dtype=np.float64) -> "LstmState":
        return cls(Tensor.zeros(d, 1, dtype), Tensor.zeros(d, 1, dtype))


def _check_input(kind: str, params, x: Tensor) -> None:
    if x.cols != 1:
        raise DimensionError(f"{kind} input must be a column vector, got {x.shape}")
    if x.rows != params.input_size:
        raise DimensionError(
            f"{kind} input has {x.rows} rows, cell expects {params.input_size}"
        )


def rnn_step(params: RnnCellParams, h_prev: Tensor, x: Tensor) -> Tensor:
    """One step of the plain tanh recurrence."""
    _check_input("rnn", params, x)
    if h_prev.shape != (params.hidden_size, 1):
        raise DimensionError(
            f"hidden state has shape {h_prev.shape}, "
            f"expected {(params.hidden_size, 1)}"
        )
    z = np.concatenate([h_prev.data, x.data], axis=0)
    return Tensor._wrap(np.tanh(params.w.data @ z + params.b.data))


def lstm_step(params: LstmCellParams, state: LstmState, x: Tensor) -> LstmState:
    """One LSTM step. Delegates to the same code the tape differentiates,
    so value semantics and gradients can never drift apart."""
    _check_input("lstm", params, x)
    d = params.hidden_size
    if state.h.shape != (d, 1) or state.c.shape != (d, 1):
        raise DimensionError(
            f"state shapes {state.h.shape}/{state.c.shape}, expected {(d, 1)}"
        )
    tape = Tape(record=False)
    h, c = tape.lstm_cell(
        "cell", *params.arrays(),
        tape.leaf(state.h.data), tape.leaf(state.c.data), tape.leaf(x.data),
    )
    return LstmState(Tensor._wrap(h.value), Tensor._wrap(c.value))


def run_sequence(params: LstmCellParams, initial: LstmState,
                 inputs: list[Tensor], direction: str = "forward") -> list[LstmState]:
    """Fold lstm_step over the inputs, returning every state in traversal
    order. direction="reversed" walks the inputs from last to first (used by
    the right-to-left branch of the target-split models)."""
    if direction not in DIRECTIONS:
        raise ValidationError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
    ordered = list(inputs) if direction == "forward" else list(reversed(inputs))
    states = []
    state = initial
    for x in ordered:
        state = lstm_step(params, state, x)
        states.append(state)
    return states
