"""Reverse-mode differentiation over the fixed graphs the classifiers build.

The tape records one node per composite layer (affine map, LSTM cell step,
concatenation, mean, attention pooling, fused softmax cross-entropy) rather
than one node per scalar operation; each node keeps exactly the intermediate
values its hand-derived adjoint needs, so the tape stays short and backward
is a single reversed walk. Graphs here are DAGs built in execution order,
which makes the reversed record list a valid topological order for the
backward pass.

Values flowing through the tape are raw 2-D numpy arrays (column vectors for
activations). Parameters are not graph nodes: ops that consume a parameter
take (name, array) and accumulate that parameter's adjoint under the name.
Embedding rows are the exception, since they are inputs and trainable at the
same time; `embedding_row` records which row produced a value so backward
can accumulate per-row adjoints without materialising a gradient for the
whole table.
"""

import numpy as np

from ..errors import StateError
from .tensor import Tensor, sigmoid_array, softmax_column


class Var:
    """A value produced during the recorded forward computation."""

    __slots__ = ("value", "grad")

    def __init__(self, value: np.ndarray):
        self.value = value
        self.grad = None


def _accumulate(var: Var, contribution: np.ndarray) -> None:
    # copy on first write: contributions may alias arrays a later node reads
    if var.grad is None:
        var.grad = contribution.copy()
    else:
        var.grad += contribution


class Gradients:
    """Adjoints of one recorded computation, keyed by parameter name.

    Keys are exactly the trainable parameter names declared on the tape; a
    parameter the loss never touched maps to zeros. The embedding table, when
    declared trainable, appears under the name "embeddings": its adjoint is
    kept row-sparse internally (only looked-up rows are non-zero) and is
    materialised as a dense Tensor on demand.
    """

    EMBEDDINGS = "embeddings"

    def __init__(self, by_name, embedding_rows=None, embedding_shape=None,
                 embedding_dtype=None):
        self._by_name = dict(by_name)
        self.embedding_rows = embedding_rows
        self._embedding_shape = embedding_shape
        self._embedding_dtype = embedding_dtype

    def names(self) -> frozenset:
        names = set(self._by_name)
        if self.embedding_rows is not None:
            names.add(self.EMBEDDINGS)
        return frozenset(names)

    def __contains__(self, name) -> bool:
        return name in self.names()

    def __getitem__(self, name) -> Tensor:
        if name == self.EMBEDDINGS and self.embedding_rows is not None:
            dense = np.zeros(self._embedding_shape, dtype=self._embedding_dtype)
            for row, vec in self.embedding_rows.items():
                dense[row] = vec
            return Tensor._wrap(dense)
        return Tensor._wrap(self._by_name[name])

    def array(self, name) -> np.ndarray:
        """Raw dense array for a non-embedding parameter."""
        return self._by_name[name]


class Tape:
    """Records a forward computation and differentiates it once.

    With record=False the ops only compute values, which makes repeated loss
    evaluation (finite differences) about twice as fast.
    """

    def __init__(self, record: bool = True):
        self._nodes = []           # (outputs tuple, backward closure)
        self._param_grads = {}     # name -> accumulated ndarray
        self._declared = {}        # name -> template array, for zero fill
        self._emb_rows = None      # row index -> (d,) adjoint, if declared
        self._emb_shape = None
        self._emb_dtype = None
        self._record = record
        self._consumed = False

    # -- declarations -------------------------------------------------

    def declare_parameter(self, name: str, template: np.ndarray) -> None:
        """Ensure `name` appears in the result even if never touched."""
        self._declared[name] = template

    def declare_embeddings(self, shape, dtype) -> None:
        self._emb_rows = {}
        self._emb_shape = shape
        self._emb_dtype = dtype

    # -- gradient accumulation helpers ---------------------------------

    def _add_param_owned(self, name, fresh: np.ndarray) -> None:
        # caller hands over ownership of `fresh`
        if name in self._param_grads:
            self._param_grads[name] += fresh
        else:
            self._param_grads[name] = fresh

    # -- leaves ---------------------------------------------------------

    def leaf(self, value: np.ndarray) -> Var:
        return Var(value)

    def embedding_row(self, row: int, value: np.ndarray) -> Var:
        """Column-vector input remembered as coming from an embedding row."""
        out = Var(value.reshape(-1, 1))
        if self._record and self._emb_rows is not None:
            def bwd():
                g = out.grad[:, 0]
                if row in self._emb_rows:
                    self._emb_rows[row] += g
                else:
                    self._emb_rows[row] = g.copy()
            self._nodes.append(((out,), bwd))
        return out

    # -- composite layers -----------------------------------------------

    def affine(self, w_name: str, w: np.ndarray, x: Var,
               b_name: str | None = None, b: np.ndarray | None = None) -> Var:
        """w @ x (+ b). The bias is optional so this doubles as a plain
        linear map (used by the attention scorer's final dot product)."""
        value = w @ x.value
        if b is not None:
            value = value + b
        out = Var(value)
        if self._record:
            def bwd():
                g = out.grad
                self._add_param_owned(w_name, g @ x.value.T)
                if b_name is not None:
                    self._add_param_owned(b_name, g.copy())
                _accumulate(x, w.T @ g)
            self._nodes.append(((out,), bwd))
        return out

    def lstm_cell(self, prefix: str, w_i, b_i, w_f, b_f, w_o, b_o, w_c, b_c,
                  h_prev: Var, c_prev: Var, x: Var) -> tuple[Var, Var]:
        """One LSTM step as a single node.

        Gates read the concatenation [h_prev; x]; the new cell state blends
        the candidate (tanh) through the input gate with the previous cell
        state through the forget gate, and the hidden state is the output
        gate times tanh of the new cell state. Parameter adjoints are
        accumulated under "<prefix>.w_i", "<prefix>.b_i", and so on.
        """
        d = h_prev.value.shape[0]
        z = np.concatenate([h_prev.value, x.value], axis=0)
        i = sigmoid_array(w_i @ z + b_i)
        f = sigmoid_array(w_f @ z + b_f)
        o = sigmoid_array(w_o @ z + b_o)
        g_cand = np.tanh(w_c @ z + b_c)
        c_new = i * g_cand + f * c_prev.value
        tc = np.tanh(c_new)
        h_new = o * tc
        out_h, out_c = Var(h_new), Var(c_new)
        if self._record:
            c_prev_value = c_prev.value

            def bwd():
                dh = out_h.grad
                dc = out_c.grad.copy() if out_c.grad is not None else \
                    np.zeros_like(c_new)
                if dh is not None:
                    do = dh * tc
                    da_o = do * o * (1.0 - o)
                    dc += dh * o * (1.0 - tc * tc)
                else:
                    da_o = None
                da_i = (dc * g_cand) * i * (1.0 - i)
                da_f = (dc * c_prev_value) * f * (1.0 - f)
                da_c = (dc * i) * (1.0 - g_cand * g_cand)
                self._add_param_owned(f"{prefix}.w_i", da_i @ z.T)
                self._add_param_owned(f"{prefix}.b_i", da_i.copy())
                self._add_param_owned(f"{prefix}.w_f", da_f @ z.T)
                self._add_param_owned(f"{prefix}.b_f", da_f.copy())
                self._add_param_owned(f"{prefix}.w_c", da_c @ z.T)
                self._add_param_owned(f"{prefix}.b_c", da_c.copy())
                dz = w_i.T @ da_i + w_f.T @ da_f + w_c.T @ da_c
                if da_o is not None:
                    self._add_param_owned(f"{prefix}.w_o", da_o @ z.T)
                    self._add_param_owned(f"{prefix}.b_o", da_o.copy())
                    dz += w_o.T @ da_o
                _accumulate(h_prev, dz[:d])
                _accumulate(x, dz[d:])
                _accumulate(c_prev, dc * f)
            self._nodes.append(((out_h, out_c), bwd))
        return out_h, out_c

    def concat(self, a: Var, b: Var) -> Var:
        out = Var(np.concatenate([a.value, b.value], axis=0))
        if self._record:
            ra = a.value.shape[0]

            def bwd():
                g = out.grad
                _accumulate(a, g[:ra])
                _accumulate(b, g[ra:])
            self._nodes.append(((out,), bwd))
        return out

    def add(self, a: Var, b: Var) -> Var:
        out = Var(a.value + b.value)
        if self._record:
            def bwd():
                _accumulate(a, out.grad)
                _accumulate(b, out.grad)
            self._nodes.append(((out,), bwd))
        return out

    def scale(self, a: Var, k: float) -> Var:
        out = Var(a.value * k)
        if self._record:
            def bwd():
                _accumulate(a, out.grad * k)
            self._nodes.append(((out,), bwd))
        return out

    def tanh(self, a: Var) -> Var:
        out = Var(np.tanh(a.value))
        if self._record:
            def bwd():
                _accumulate(a, out.grad * (1.0 - out.value * out.value))
            self._nodes.append(((out,), bwd))
        return out

    def mean(self, items: list[Var]) -> Var:
        total = items[0].value.copy()
        for item in items[1:]:
            total += item.value
        out = Var(total / len(items))
        if self._record:
            def bwd():
                share = out.grad / len(items)
                for item in items:
                    _accumulate(item, share)
            self._nodes.append(((out,), bwd))
        return out

    def sum_entries(self, a: Var) -> Var:
        out = Var(np.array([[a.value.sum()]], dtype=a.value.dtype))
        if self._record:
            def bwd():
                _accumulate(a, np.full_like(a.value, out.grad[0, 0]))
            self._nodes.append(((out,), bwd))
        return out

    def attend(self, scores: list[Var], states: list[Var]) -> Var:
        """Softmax the scalar scores over positions, return the weighted
        average of the states."""
        s = np.array([score.value[0, 0] for score in scores])
        weights = softmax_column(s.reshape(-1, 1))[:, 0]
        pooled = weights[0] * states[0].value
        for w, state in zip(weights[1:], states[1:]):
            pooled = pooled + w * state.value
        out = Var(pooled)
        if self._record:
            def bwd():
                g = out.grad
                dw = np.array([(state.value[:, 0] @ g[:, 0]) for state in states])
                ds = weights * (dw - (weights @ dw))
                for t, (score, state) in enumerate(zip(scores, states)):
                    _accumulate(score, np.array([[ds[t]]]))
                    _accumulate(state, weights[t] * g)
            self._nodes.append(((out,), bwd))
        return out

    def softmax_cross_entropy(self, logits: Var, gold: int):
        """Fused log-softmax negative log-likelihood.

        Returns (loss Var of shape (1,1), probabilities array). Fusing keeps
        the loss finite for any finite logits, where -log(softmax(x)[gold])
        computed in two steps can underflow to log(0).
        """
        x = logits.value
        m = np.max(x)
        shifted = x - m
        e = np.exp(shifted)
        total = np.sum(e)
        probs = e / total
        loss = np.log(total) - shifted[gold, 0]
        out = Var(np.array([[loss]]))
        if self._record:
            def bwd():
                d = probs.copy()
                d[gold, 0] -= 1.0
                _accumulate(logits, d * out.grad[0, 0])
            self._nodes.append(((out,), bwd))
        return out, probs

    # -- backward --------------------------------------------------------

    def backward(self, loss: Var, seed: float = 1.0) -> Gradients:
        """Run adjoints for everything recorded, seeding d(loss) = seed.

        Raises StateError if no forward computation was recorded or if the
        tape was already consumed (adjoints accumulate, so a second walk
        would silently double every gradient).
        """
        if not self._nodes:
            raise StateError("backward called before any recorded forward pass")
        if self._consumed:
            raise StateError("tape already consumed by a previous backward call")
        self._consumed = True
        loss.grad = np.array([[seed]], dtype=loss.value.dtype)
        for outputs, bwd in reversed(self._nodes):
            if any(out.grad is not None for out in outputs):
                bwd()
        by_name = {}
        for name, template in self._declared.items():
            got = self._param_grads.get(name)
            by_name[name] = got if got is not None else np.zeros_like(template)
        for name, arr in self._param_grads.items():
            if name not in by_name:
                by_name[name] = arr
        return Gradients(
            by_name,
            embedding_rows=self._emb_rows,
            embedding_shape=self._emb_shape,
            embedding_dtype=self._emb_dtype,
        )
