"""Dense 2-D tensors and the handful of operations the classifiers need.

A Tensor is an immutable 2-D array of reals (row-major, float64 by default,
float32 selectable for speed). Immutability means instances can be shared
freely, including across threads; every operation returns a new Tensor.
"""

import numpy as np

from ..errors import DimensionError

DEFAULT_DTYPE = np.float64
SUPPORTED_DTYPES = (np.float64, np.float32)


class Tensor:
    """Immutable matrix of shape (rows, cols).

    Construction accepts nested sequences or numpy arrays; 1-D input is
    treated as a column vector. The backing array is copied and marked
    read-only.
    """

    __slots__ = ("_data",)

    def __init__(self, values, dtype=None):
        arr = np.array(values, dtype=dtype if dtype is not None else None)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2:
            raise DimensionError(f"tensors are 2-D, got {arr.ndim}-D input")
        if arr.dtype not in SUPPORTED_DTYPES:
            arr = arr.astype(DEFAULT_DTYPE)
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        self._data = arr

    @classmethod
    def _wrap(cls, arr: np.ndarray) -> "Tensor":
        """Adopt a freshly computed array without copying (internal)."""
        t = object.__new__(cls)
        arr.setflags(write=False)
        t._data = arr
        return t

    @classmethod
    def zeros(cls, rows: int, cols: int, dtype=DEFAULT_DTYPE) -> "Tensor":
        return cls._wrap(np.zeros((rows, cols), dtype=dtype))

    @classmethod
    def column(cls, values, dtype=DEFAULT_DTYPE) -> "Tensor":
        return cls(np.asarray(values, dtype=dtype).reshape(-1, 1))

    @property
    def data(self) -> np.ndarray:
        """Read-only view of the backing array."""
        return self._data

    @property
    def rows(self) -> int:
        return self._data.shape[0]

    @property
    def cols(self) -> int:
        return self._data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self._data.shape

    @property
    def dtype(self):
        return self._data.dtype

    def item(self, r: int = 0, c: int = 0) -> float:
        return float(self._data[r, c])

    def tolist(self):
        return self._data.tolist()

    def __repr__(self):
        return f"Tensor(shape={self.shape}, dtype={self._data.dtype})"


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.cols != b.rows:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return Tensor._wrap(a.data @ b.data)


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise DimensionError(f"cannot add {a.shape} and {b.shape}")
    return Tensor._wrap(a.data + b.data)


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise (Hadamard) product."""
    if a.shape != b.shape:
        raise DimensionError(f"cannot multiply elementwise {a.shape} and {b.shape}")
    return Tensor._wrap(a.data * b.data)


def tanh(a: Tensor) -> Tensor:
    return Tensor._wrap(np.tanh(a.data))


def sigmoid(a: Tensor) -> Tensor:
    return Tensor._wrap(sigmoid_array(a.data))


def sigmoid_array(x: np.ndarray) -> np.ndarray:
    # tanh form: finite for any finite input, no overflow warnings from exp.
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def softmax(x: Tensor) -> Tensor:
    if x.cols != 1 or x.rows < 1:
        raise DimensionError(f"softmax expects a non-empty column vector, got {x.shape}")
    return Tensor._wrap(softmax_column(x.data))


def softmax_column(x: np.ndarray) -> np.ndarray:
    # max subtraction keeps exp in range for any finite logits
    shifted = x - np.max(x)
    e = np.exp(shifted)
    return e / np.sum(e)
