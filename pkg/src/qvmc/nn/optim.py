"""Named parameter storage and the Adam update."""

from __future__ import annotations

import numpy as np

__all__ = ["NonFiniteGradientError", "ParameterStore", "adam_step"]

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


class NonFiniteGradientError(RuntimeError):
    """A gradient contained NaN/inf; the optimizer step was aborted."""


class ParameterStore:
    """Flat dict of named float64 parameter arrays plus Adam moments.

    Parameters are mutated only by :func:`adam_step`; forward passes read
    them through tape leaves, so sharing across evaluation threads is safe.
    """

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.step_count = 0

    def register(self, name: str, array: np.ndarray) -> None:
        if name in self.params:
            raise ValueError(f"duplicate parameter name {name!r}")
        array = np.asarray(array, dtype=np.float64)
        if not np.isfinite(array).all():
            raise ValueError(f"parameter {name!r} contains non-finite entries")
        self.params[name] = array
        self.m[name] = np.zeros_like(array)
        self.v[name] = np.zeros_like(array)

    def names(self) -> list[str]:
        return list(self.params)

    def n_parameters(self) -> int:
        return sum(p.size for p in self.params.values())

    def flat(self) -> np.ndarray:
        """Concatenated copy of all parameters, in registration order."""
        return np.concatenate([p.ravel() for p in self.params.values()])

    def load_flat(self, vec: np.ndarray) -> None:
        vec = np.asarray(vec, dtype=np.float64)
        if vec.size != self.n_parameters():
            raise ValueError("flat vector size does not match parameter count")
        offset = 0
        for name, p in self.params.items():
            self.params[name] = vec[offset:offset + p.size].reshape(p.shape).copy()
            offset += p.size

    def clone_arrays(self) -> dict[str, np.ndarray]:
        return {name: p.copy() for name, p in self.params.items()}


def adam_step(store: ParameterStore, grads: dict[str, np.ndarray], lr: float) -> None:
    """Apply one Adam update (beta1=0.9, beta2=0.999, eps=1e-8) in place.

    Missing gradient entries are treated as zero.  Any non-finite gradient
    aborts the whole step before touching parameters or moments.
    """
    for name, g in grads.items():
        if name not in store.params:
            raise KeyError(f"gradient for unknown parameter {name!r}")
        if g.shape != store.params[name].shape:
            raise ValueError(f"gradient shape mismatch for {name!r}")
        if not np.isfinite(g).all():
            bad = int(np.size(g) - np.isfinite(g).sum())
            raise NonFiniteGradientError(
                f"non-finite gradient for {name!r} ({bad} bad entries)"
            )
    store.step_count += 1
    t = store.step_count
    bc1 = 1.0 - ADAM_BETA1 ** t
    bc2 = 1.0 - ADAM_BETA2 ** t
    for name, p in store.params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(p)
        m = store.m[name]
        v = store.v[name]
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * g
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * g * g
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + ADAM_EPS)
