"""Dense float64 tensors with taped reverse-mode differentiation.

The networks in this package are built from a small closed set of primitive
operations.  Each primitive computes its value eagerly with numpy and, when a
:class:`Tape` is active on its inputs, records a backward closure.  Calling
``Tape.gradient`` replays the closures in reverse to accumulate parameter
gradients.  Forward passes without a tape (sampling, local-energy batches)
pay no recording overhead.

All arithmetic is in 64-bit floats; model sizes here are tiny and the Monte
Carlo estimators downstream are variance-sensitive.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "GradientModeError",
    "Tape",
    "Tensor",
    "add",
    "concat_last",
    "group_norm",
    "layer_norm",
    "log",
    "masked_softmax",
    "matmul",
    "moveaxis",
    "mul",
    "reshape",
    "rotate_half",
    "scale",
    "softmax",
    "sub",
    "sum_axis",
    "swish",
    "take_along_last",
    "take_rows",
    "tanh",
]


class GradientModeError(RuntimeError):
    """Raised when gradients are requested from a non-differentiable pass."""


class Tensor:
    """A numpy array plus the tape (if any) it was recorded on."""

    __slots__ = ("data", "grad", "tape")

    def __init__(self, data, tape: "Tape | None" = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.tape = tape
        self.grad = np.zeros_like(self.data) if tape is not None else None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def __repr__(self) -> str:  # pragma: no cover
        mode = "recorded" if self.tape is not None else "plain"
        return f"Tensor(shape={self.data.shape}, {mode})"


class Tape:
    """Recording of one differentiable forward pass.

    Parameters are attached with :meth:`watch`; intermediate ops append
    backward closures.  A tape is single-use: run one forward pass, then call
    :meth:`gradient` once.
    """

    def __init__(self):
        self._ops: list = []
        self._watched: dict[str, Tensor] = {}
        self._used = False

    def watch(self, name: str, array: np.ndarray) -> Tensor:
        """Register a named parameter array as a differentiable leaf."""
        if name in self._watched:
            return self._watched[name]
        leaf = Tensor(array, tape=self)
        self._watched[name] = leaf
        return leaf

    def gradient(self, output: Tensor, seed: np.ndarray) -> dict[str, np.ndarray]:
        """Return d(sum(seed * output))/d(param) for every watched parameter.

        ``seed`` must match ``output``'s shape; it is the cotangent injected
        at the output, e.g. per-sample loss weights.
        """
        if output.tape is not self:
            raise GradientModeError(
                "output was not recorded on this tape; gradients are only "
                "available from a differentiable (parallel-mode) forward pass"
            )
        if self._used:
            raise GradientModeError("tape already consumed by a gradient call")
        self._used = True
        seed = np.asarray(seed, dtype=np.float64)
        if seed.shape != output.data.shape:
            raise ValueError(
                f"seed shape {seed.shape} does not match output shape {output.data.shape}"
            )
        output.grad += seed
        for op in reversed(self._ops):
            op()
        return {name: leaf.grad for name, leaf in self._watched.items()}


def _tape_of(*tensors: "Tensor | np.ndarray") -> Tape | None:
    tape = None
    for t in tensors:
        if isinstance(t, Tensor) and t.tape is not None:
            if tape is None:
                tape = t.tape
            elif tape is not t.tape:
                raise GradientModeError("cannot combine tensors from different tapes")
    return tape


def _data(x) -> np.ndarray:
    return x.data if isinstance(x, Tensor) else np.asarray(x, dtype=np.float64)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` (reverses numpy broadcasting)."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _binary(a, b, value, da, db) -> Tensor:
    tape = _tape_of(a, b)
    out = Tensor(value, tape)
    if tape is not None:
        def backward():
            if isinstance(a, Tensor) and a.tape is tape:
                a.grad += _unbroadcast(da(out.grad), a.data.shape)
            if isinstance(b, Tensor) and b.tape is tape:
                b.grad += _unbroadcast(db(out.grad), b.data.shape)
        tape._ops.append(backward)
    return out


def _unary(a, value, da) -> Tensor:
    tape = _tape_of(a)
    out = Tensor(value, tape)
    if tape is not None:
        def backward():
            a.grad += da(out.grad)
        tape._ops.append(backward)
    return out


# ---------------------------------------------------------------------------
# arithmetic


def add(a, b) -> Tensor:
    return _binary(a, b, _data(a) + _data(b), lambda g: g, lambda g: g)


def sub(a, b) -> Tensor:
    return _binary(a, b, _data(a) - _data(b), lambda g: g, lambda g: -g)


def mul(a, b) -> Tensor:
    xa, xb = _data(a), _data(b)
    return _binary(a, b, xa * xb, lambda g: g * xb, lambda g: g * xa)


def scale(a, c: float) -> Tensor:
    return _unary(a, _data(a) * c, lambda g: g * c)


def matmul(a, b, transpose_a: bool = False, transpose_b: bool = False) -> Tensor:
    """Batched matrix product; stacked leading axes must match or ``b`` is 2-D."""
    xa, xb = _data(a), _data(b)
    ta = xa.swapaxes(-1, -2) if transpose_a else xa
    tb = xb.swapaxes(-1, -2) if transpose_b else xb
    tape = _tape_of(a, b)
    out = Tensor(ta @ tb, tape)
    if tape is not None:
        def backward():
            g = out.grad
            if isinstance(a, Tensor) and a.tape is tape:
                ga = g @ tb.swapaxes(-1, -2)
                if transpose_a:
                    ga = ga.swapaxes(-1, -2)
                a.grad += _unbroadcast(ga, xa.shape)
            if isinstance(b, Tensor) and b.tape is tape:
                gb = ta.swapaxes(-1, -2) @ g
                if transpose_b:
                    gb = gb.swapaxes(-1, -2)
                b.grad += _unbroadcast(gb, xb.shape)
        tape._ops.append(backward)
    return out


# ---------------------------------------------------------------------------
# nonlinearities and normalization


def log(a) -> Tensor:
    x = _data(a)
    return _unary(a, np.log(x), lambda g: g / x)


def tanh(a) -> Tensor:
    y = np.tanh(_data(a))
    return _unary(a, y, lambda g: g * (1.0 - y * y))


def swish(a) -> Tensor:
    """x * sigmoid(x)."""
    x = _data(a)
    sig = 1.0 / (1.0 + np.exp(-x))
    return _unary(a, x * sig, lambda g: g * (sig * (1.0 + x * (1.0 - sig))))


def softmax(a) -> Tensor:
    x = _data(a)
    e = np.exp(x - x.max(axis=-1, keepdims=True))
    y = e / e.sum(axis=-1, keepdims=True)
    return _unary(a, y, lambda g: y * (g - (g * y).sum(axis=-1, keepdims=True)))


def masked_softmax(a, allowed: np.ndarray) -> Tensor:
    """Softmax over the last axis restricted to ``allowed`` entries.

    Disallowed entries come out exactly zero.  Every row must keep at least
    one allowed entry; an all-masked row indicates broken constraint
    bookkeeping upstream and raises.
    """
    x = _data(a)
    allowed = np.asarray(allowed, dtype=bool)
    if not allowed.any(axis=-1).all():
        raise ValueError("masked_softmax: a row has no allowed entries")
    shifted = np.where(allowed, x, -np.inf)
    e = np.exp(shifted - shifted.max(axis=-1, keepdims=True))
    y = e / e.sum(axis=-1, keepdims=True)
    return _unary(a, y, lambda g: y * (g - (g * y).sum(axis=-1, keepdims=True)))


_NORM_EPS = 1e-12


def layer_norm(a) -> Tensor:
    """Normalize the last axis to mean 0, variance 1 (no affine part)."""
    x = _data(a)
    mu = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + _NORM_EPS)
    y = (x - mu) * inv
    n = x.shape[-1]

    def backward(g):
        gm = g.mean(axis=-1, keepdims=True)
        gy = (g * y).mean(axis=-1, keepdims=True)
        return inv * (g - gm - y * gy)

    del n
    return _unary(a, y, backward)


def group_norm(a, n_groups: int) -> Tensor:
    """Layer norm applied independently to ``n_groups`` chunks of the last axis."""
    x = _data(a)
    channels = x.shape[-1]
    if channels % n_groups:
        raise ValueError(f"group count {n_groups} does not divide channels {channels}")
    grouped = reshape(a, x.shape[:-1] + (n_groups, channels // n_groups))
    return reshape(layer_norm(grouped), x.shape)


# ---------------------------------------------------------------------------
# shape and indexing


def reshape(a, shape) -> Tensor:
    x = _data(a)
    return _unary(a, x.reshape(shape), lambda g: g.reshape(x.shape))


def moveaxis(a, src: int, dst: int) -> Tensor:
    return _unary(
        a, np.moveaxis(_data(a), src, dst), lambda g: np.moveaxis(g, dst, src)
    )


def sum_axis(a, axis: int) -> Tensor:
    x = _data(a)
    return _unary(
        a, x.sum(axis=axis), lambda g: np.repeat(
            np.expand_dims(g, axis), x.shape[axis], axis=axis
        )
    )


def concat_last(parts: list) -> Tensor:
    datas = [_data(p) for p in parts]
    tape = _tape_of(*parts)
    out = Tensor(np.concatenate(datas, axis=-1), tape)
    if tape is not None:
        widths = [d.shape[-1] for d in datas]
        offsets = np.cumsum([0] + widths)

        def backward():
            for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
                if isinstance(p, Tensor) and p.tape is tape:
                    p.grad += out.grad[..., lo:hi]
        tape._ops.append(backward)
    return out


def take_rows(table, idx: np.ndarray) -> Tensor:
    """Row lookup ``table[idx]`` (embedding gather)."""
    idx = np.asarray(idx)
    x = _data(table)
    tape = _tape_of(table)
    out = Tensor(x[idx], tape)
    if tape is not None:
        def backward():
            np.add.at(table.grad, idx, out.grad)
        tape._ops.append(backward)
    return out


def take_along_last(a, idx: np.ndarray) -> Tensor:
    """Pick one entry per position along the last axis; drops that axis."""
    idx = np.asarray(idx)
    x = _data(a)
    picked = np.take_along_axis(x, idx[..., None], axis=-1)[..., 0]
    tape = _tape_of(a)
    out = Tensor(picked, tape)
    if tape is not None:
        def backward():
            buf = np.zeros_like(x)
            np.put_along_axis(buf, idx[..., None], out.grad[..., None], axis=-1)
            a.grad += buf
        tape._ops.append(backward)
    return out


def rotate_half(a) -> Tensor:
    """Map consecutive pairs (x0, x1) to (-x1, x0); the 90-degree pair rotation."""

    def fwd(x):
        y = np.empty_like(x)
        y[..., 0::2] = -x[..., 1::2]
        y[..., 1::2] = x[..., 0::2]
        return y

    def bwd(g):
        h = np.empty_like(g)
        h[..., 0::2] = g[..., 1::2]
        h[..., 1::2] = -g[..., 0::2]
        return h

    return _unary(a, fwd(_data(a)), bwd)
