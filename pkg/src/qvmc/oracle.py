"""Ground-truth machinery for desk-scale verification.

Everything here trades scalability for independence: dense matrices built by
literal Kronecker products, fermionic operators assembled directly as
2^n x 2^n matrices, full-enumeration expectations, and finite differences.
These are the oracles the stochastic estimators and the Jordan-Wigner
pipeline are validated against.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from qvmc.encoding import configs_to_ints, enumerate_sector, ints_to_configs
from qvmc.hamiltonian import MolecularIntegrals, QubitHamiltonian

__all__ = [
    "DenseState",
    "LanczosError",
    "amplitude_fn_from_state",
    "dense_fermionic_hamiltonian",
    "dense_hamiltonian",
    "dense_pauli_kron",
    "exact_entropy",
    "exact_expectation",
    "fd_gradient",
    "ground_state",
    "lanczos_lowest",
]

DENSE_QUBIT_LIMIT = 12
ITERATIVE_QUBIT_LIMIT = 20
KRON_QUBIT_LIMIT = 6
_SECTOR_DENSE_CUTOFF = 2048

_PAULI_MATS = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


class LanczosError(RuntimeError):
    """Iterative eigensolve failed to converge."""


@dataclass
class DenseState:
    """Explicit state vector over all 2^n configurations."""

    n_qubits: int
    amplitudes: np.ndarray

    def amp_fn(self) -> Callable:
        """Adapt to the batched amplitude-function interface.

        Returns a callable mapping configurations (B, n) to
        (log_modulus, phase, support) arrays.
        """
        amps = self.amplitudes

        def amp(configs: np.ndarray):
            idx = configs_to_ints(configs).astype(np.int64)
            values = amps[idx]
            support = np.abs(values) > 1e-14
            logmod = np.full(len(idx), -np.inf)
            phase = np.zeros(len(idx))
            logmod[support] = np.log(np.abs(values[support]))
            phase[support] = np.angle(values[support])
            return logmod, phase, support

        return amp


def amplitude_fn_from_state(state: DenseState) -> Callable:
    return state.amp_fn()


# ---------------------------------------------------------------------------
# dense constructions


def dense_pauli_kron(h: QubitHamiltonian) -> np.ndarray:
    """Dense matrix via literal Kronecker products of each Pauli string.

    Deliberately naive: this is the independent oracle for the flip-mask
    term storage, so it must not share that code path.
    """
    n = h.n_qubits
    if n > KRON_QUBIT_LIMIT:
        raise ValueError(f"kron oracle limited to {KRON_QUBIT_LIMIT} qubits, got {n}")
    dim = 2 ** n
    out = np.zeros((dim, dim), dtype=np.complex128)
    out += h.identity_offset * np.eye(dim)
    for term in h.to_terms():
        if term.ops == "I" * n:
            if not h.identity_offset:
                out += term.coefficient * np.eye(dim)
            continue
        mat = np.eye(1, dtype=np.complex128)
        for op in term.ops:
            mat = np.kron(mat, _PAULI_MATS[op])
        out += term.coefficient * mat
    return out


def dense_hamiltonian(h: QubitHamiltonian) -> np.ndarray:
    """Dense matrix over the full 2^n space from the grouped flip terms."""
    n = h.n_qubits
    if n > DENSE_QUBIT_LIMIT:
        raise ValueError(f"dense construction limited to {DENSE_QUBIT_LIMIT} qubits")
    dim = 2 ** n
    all_ints = np.arange(dim, dtype=np.uint64)
    values = h.group_values(all_ints)
    out = np.zeros((dim, dim), dtype=np.complex128)
    out += h.identity_offset * np.eye(dim)
    cols = np.arange(dim)
    for g, flip in enumerate(h.flip_masks):
        rows = (all_ints ^ flip).astype(np.int64)
        out[rows, cols] += values[:, g]
    return out


def number_operator_dense(n_qubits: int) -> np.ndarray:
    """Diagonal total-occupancy operator on the full space."""
    idx = np.arange(2 ** n_qubits, dtype=np.uint64)
    return np.diag(np.bitwise_count(idx).astype(np.float64))


def dense_fermionic_hamiltonian(mi: MolecularIntegrals) -> np.ndarray:
    """Second-quantized Hamiltonian from explicit ladder-operator matrices.

    Builds a_q as Kronecker chains with their Z sign strings and multiplies
    integrals against operator products directly; no Pauli algebra touches
    this path, keeping it independent of the transformation pipeline.
    """
    n = 2 * mi.n_orbitals
    if n > KRON_QUBIT_LIMIT:
        raise ValueError(f"fermionic dense oracle limited to {KRON_QUBIT_LIMIT} qubits")
    sigma_minus = np.array([[0, 1], [0, 0]], dtype=np.complex128)
    z = _PAULI_MATS["Z"]
    eye = _PAULI_MATS["I"]

    lower = []
    for q in range(n):
        mat = np.eye(1, dtype=np.complex128)
        for pos in range(n):
            if pos < q:
                mat = np.kron(mat, z)
            elif pos == q:
                mat = np.kron(mat, sigma_minus)
            else:
                mat = np.kron(mat, eye)
        lower.append(mat)
    raise_ = [m.conj().T for m in lower]

    dim = 2 ** n
    out = np.zeros((dim, dim), dtype=np.complex128)
    out += mi.core_energy * np.eye(dim)
    for p in range(mi.n_orbitals):
        for q in range(mi.n_orbitals):
            if abs(mi.h1[p, q]) < 1e-14:
                continue
            for s in range(2):
                out += mi.h1[p, q] * (raise_[2 * p + s] @ lower[2 * q + s])
    for p in range(mi.n_orbitals):
        for q in range(mi.n_orbitals):
            for r in range(mi.n_orbitals):
                for s in range(mi.n_orbitals):
                    v = mi.h2[p, q, r, s]
                    if abs(v) < 1e-14:
                        continue
                    for sig in range(2):
                        for tau in range(2):
                            out += (0.5 * v) * (
                                raise_[2 * p + sig]
                                @ raise_[2 * r + tau]
                                @ lower[2 * s + tau]
                                @ lower[2 * q + sig]
                            )
    return out


# ---------------------------------------------------------------------------
# sector machinery


def _sector_basis(h: QubitHamiltonian, sector: tuple[int, int] | None) -> np.ndarray:
    if sector is None:
        return ints_to_configs(np.arange(2 ** h.n_qubits, dtype=np.uint64), h.n_qubits)
    n_up, n_down = sector
    return enumerate_sector(h.n_qubits, n_up, n_down)


def _sector_action(h: QubitHamiltonian, basis_ints: np.ndarray):
    """Precompute (target-index, value) per flip group over a basis.

    Values with no in-basis target must vanish for a sector-preserving
    Hamiltonian; anything above round-off raises.
    """
    values = h.group_values(basis_ints)
    if values.size and np.abs(values.imag).max() > 1e-9:
        raise ValueError("Hamiltonian has complex matrix elements; expected a real one")
    actions = []
    for g, flip in enumerate(h.flip_masks):
        targets = basis_ints ^ flip
        pos = np.searchsorted(basis_ints, targets)
        pos_clipped = np.minimum(pos, len(basis_ints) - 1)
        found = basis_ints[pos_clipped] == targets
        vals = values[:, g].real
        escaped = np.abs(vals[~found])
        if escaped.size and escaped.max() > 1e-9:
            raise ValueError("Hamiltonian does not preserve the requested sector")
        actions.append((pos_clipped[found].astype(np.int64),
                        np.nonzero(found)[0].astype(np.int64),
                        vals[found]))
    return actions


def _sector_dense(h: QubitHamiltonian, basis_ints: np.ndarray) -> np.ndarray:
    dim = len(basis_ints)
    out = np.zeros((dim, dim))
    out += h.identity_offset * np.eye(dim)
    for rows, cols, vals in _sector_action(h, basis_ints):
        out[rows, cols] += vals
    return out


def _sector_matvec(h: QubitHamiltonian, basis_ints: np.ndarray) -> Callable:
    actions = _sector_action(h, basis_ints)
    offset = h.identity_offset

    def matvec(v: np.ndarray) -> np.ndarray:
        w = offset * v
        for rows, cols, vals in actions:
            w[rows] += vals * v[cols]
        return w

    return matvec


def lanczos_lowest(
    matvec: Callable,
    dim: int,
    tol: float = 1e-10,
    max_iter: int = 5000,
    seed: int = 7,
) -> tuple[float, np.ndarray]:
    """Lowest eigenpair by Lanczos with full reorthogonalization.

    Stops when the lowest Ritz value changes by less than ``tol``; raises
    :class:`LanczosError` with the final residual if the cap is hit first.
    """
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    basis = [v]
    alphas: list[float] = []
    betas: list[float] = []
    previous = np.inf
    max_iter = min(max_iter, dim)
    for it in range(max_iter):
        w = matvec(basis[-1].copy())
        alpha = float(basis[-1] @ w)
        alphas.append(alpha)
        w -= alpha * basis[-1]
        if len(basis) > 1:
            w -= betas[-1] * basis[-2]
        for b in basis:  # full reorthogonalization
            w -= (b @ w) * b
        beta = float(np.linalg.norm(w))

        tri = np.diag(alphas)
        if betas:
            off = np.array(betas)
            tri += np.diag(off, 1) + np.diag(off, -1)
        evals, evecs = np.linalg.eigh(tri)
        lowest = float(evals[0])
        if abs(lowest - previous) < tol or beta < 1e-13 or it == dim - 1:
            vec = np.zeros(dim)
            for c, b in zip(evecs[:, 0], basis):
                vec += c * b
            vec /= np.linalg.norm(vec)
            return lowest, vec
        previous = lowest
        betas.append(beta)
        basis.append(w / beta)
    residual = abs(lowest - previous)
    raise LanczosError(
        f"no convergence after {max_iter} iterations (last change {residual:.3e})"
    )


def ground_state(
    h: QubitHamiltonian,
    sector: tuple[int, int] | None = None,
) -> tuple[float, DenseState]:
    """Lowest eigenvalue and eigenvector, optionally sector-restricted.

    Small problems go through a dense eigensolve; larger ones through
    Lanczos on the sector basis.  The returned state is embedded in the
    full 2^n space and normalized.
    """
    if h.n_qubits > ITERATIVE_QUBIT_LIMIT:
        raise ValueError(f"oracle limited to {ITERATIVE_QUBIT_LIMIT} qubits")
    if sector is None and h.n_qubits > DENSE_QUBIT_LIMIT:
        raise ValueError(
            f"full-space diagonalization limited to {DENSE_QUBIT_LIMIT} qubits; "
            "pass an electron-count sector"
        )
    basis = _sector_basis(h, sector)
    basis_ints = configs_to_ints(basis)
    dim = len(basis_ints)
    if dim <= _SECTOR_DENSE_CUTOFF:
        mat = _sector_dense(h, basis_ints)
        evals, evecs = np.linalg.eigh(mat)
        energy, vec = float(evals[0]), evecs[:, 0]
    else:
        energy, vec = lanczos_lowest(_sector_matvec(h, basis_ints), dim)
    full = np.zeros(2 ** h.n_qubits, dtype=np.complex128)
    full[basis_ints.astype(np.int64)] = vec
    return energy, DenseState(h.n_qubits, full)


# ---------------------------------------------------------------------------
# full-enumeration expectations


def _sector_amplitudes(h: QubitHamiltonian, amp: Callable):
    basis = enumerate_sector(h.n_qubits, h.n_up, h.n_down)
    logmod, phase, support = amp(basis)
    psi = np.zeros(len(basis), dtype=np.complex128)
    psi[support] = np.exp(logmod[support] + 1j * phase[support])
    return basis, psi


def exact_expectation(h: QubitHamiltonian, amp: Callable) -> float:
    """<psi|H|psi> / <psi|psi> by full enumeration of the electron sector."""
    if h.n_qubits > DENSE_QUBIT_LIMIT:
        raise ValueError(f"enumeration limited to {DENSE_QUBIT_LIMIT} qubits")
    basis, psi = _sector_amplitudes(h, amp)
    basis_ints = configs_to_ints(basis)
    h_psi = h.identity_offset * psi
    for rows, cols, vals in _sector_action(h, basis_ints):
        h_psi[rows] += vals * psi[cols]
    norm = float((psi.conj() * psi).real.sum())
    if norm <= 0.0:
        raise ValueError("amplitude function vanishes on the whole sector")
    return float((psi.conj() * h_psi).real.sum() / norm)


def exact_entropy(h_or_nqubits, amp: Callable, sector: tuple[int, int] | None = None) -> float:
    """Shannon entropy of |psi|^2 over the feasible sector (0*log 0 = 0)."""
    if isinstance(h_or_nqubits, QubitHamiltonian):
        n_qubits = h_or_nqubits.n_qubits
        sector = (h_or_nqubits.n_up, h_or_nqubits.n_down)
    else:
        n_qubits = int(h_or_nqubits)
        if sector is None:
            raise ValueError("sector required when no Hamiltonian is given")
    if n_qubits > DENSE_QUBIT_LIMIT:
        raise ValueError(f"enumeration limited to {DENSE_QUBIT_LIMIT} qubits")
    basis = enumerate_sector(n_qubits, *sector)
    logmod, _, support = amp(basis)
    p = np.zeros(len(basis))
    p[support] = np.exp(2.0 * logmod[support])
    p /= p.sum()
    nonzero = p > 0.0
    return float(-(p[nonzero] * np.log(p[nonzero])).sum())


def fd_gradient(f: Callable, x0: np.ndarray, h: float = 1e-4) -> np.ndarray:
    """Central finite differences of a scalar function, coordinate by coordinate."""
    x0 = np.asarray(x0, dtype=np.float64)
    grad = np.zeros_like(x0)
    flat = x0.ravel()
    gflat = grad.ravel()
    for i in range(flat.size):
        saved = flat[i]
        flat[i] = saved + h
        up = f(x0)
        flat[i] = saved - h
        down = f(x0)
        flat[i] = saved
        gflat[i] = (up - down) / (2.0 * h)
    return grad
