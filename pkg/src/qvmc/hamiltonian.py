"""Molecular qubit Hamiltonians in the bit-flip/sign-flip representation.

Pipeline: FCIDUMP integrals -> second-quantized fermionic operator ->
Jordan-Wigner Pauli strings -> terms grouped by their unique bit-flip mask.
Each Pauli string splits into a flip mask (X/Y positions) and a sign mask
(Y/Z positions); a term's action on a basis state |x> is then

    P |x> = i**y_count * (-1)**popcount(x & sign_mask) * |x XOR flip_mask>

which makes row retrieval and batched local-energy evaluation cheap.
Grouping by unique flip mask means one amplitude query serves every term in
the group.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from qvmc.encoding import configs_to_ints

__all__ = [
    "FcidumpError",
    "MolecularIntegrals",
    "PauliTerm",
    "QubitHamiltonian",
    "load_pauli_text",
    "parse_fcidump",
    "save_pauli_text",
    "second_quantize_jw",
]

COEFF_PRUNE = 1e-12
_I_POWERS = np.array([1, 1j, -1, -1j], dtype=np.complex128)


class FcidumpError(ValueError):
    """Malformed FCIDUMP content; carries the offending line number."""


@dataclass
class MolecularIntegrals:
    """One- and two-electron integrals over spatial orbitals.

    ``h2`` uses chemist notation (pq|rs) with full 8-fold permutational
    symmetry expanded.  Energies are in Hartree.
    """

    n_orbitals: int
    n_electrons: int
    core_energy: float
    h1: np.ndarray
    h2: np.ndarray
    ms2: int = 0

    def __post_init__(self):
        n = self.n_orbitals
        if self.h1.shape != (n, n) or self.h2.shape != (n, n, n, n):
            raise ValueError("integral array shapes do not match n_orbitals")
        if not 0 < self.n_electrons <= 2 * n:
            raise ValueError("electron count must lie in (0, 2*n_orbitals]")
        if (self.n_electrons + self.ms2) % 2:
            raise ValueError("NELEC and MS2 have inconsistent parity")

    @property
    def n_up(self) -> int:
        return (self.n_electrons + self.ms2) // 2

    @property
    def n_down(self) -> int:
        return (self.n_electrons - self.ms2) // 2

    def truncated(self, n_keep: int, n_electrons: int, ms2: int = 0) -> "MolecularIntegrals":
        """Restrict to the first ``n_keep`` orbitals (small test systems)."""
        if not 0 < n_keep <= self.n_orbitals:
            raise ValueError("invalid orbital count for truncation")
        return MolecularIntegrals(
            n_orbitals=n_keep,
            n_electrons=n_electrons,
            core_energy=self.core_energy,
            h1=self.h1[:n_keep, :n_keep].copy(),
            h2=self.h2[:n_keep, :n_keep, :n_keep, :n_keep].copy(),
            ms2=ms2,
        )


_HEADER_KEY = re.compile(r"([A-Za-z0-9_]+)\s*=\s*([^=]*?)(?=(?:[,\s][A-Za-z0-9_]+\s*=)|$)")


def parse_fcidump(path: str) -> MolecularIntegrals:
    """Read a Molpro-convention FCIDUMP file.

    Header: ``&FCI NORB=..,NELEC=..,MS2=..,`` terminated by ``&END`` (or
    ``/``).  Body lines: ``value i j k l`` with 1-based indices; ``0 0 0 0``
    is the core energy, ``i j 0 0`` a one-electron entry, and four nonzero
    indices a two-electron chemist-notation entry (pq|rs).
    """
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.readlines()

    header_parts: list[str] = []
    body_start = None
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not header_parts:
            if not stripped:
                continue
            if not stripped.upper().startswith("&FCI"):
                raise FcidumpError(f"line {lineno}: expected '&FCI' header")
            stripped = stripped[4:]
        closed = False
        for terminator in ("&END", "/"):
            if terminator in stripped.upper():
                cut = stripped.upper().index(terminator)
                stripped = stripped[:cut]
                closed = True
                break
        header_parts.append(stripped)
        if closed:
            body_start = lineno
            break
    if body_start is None:
        raise FcidumpError("unterminated FCIDUMP header (missing &END)")

    header = " ".join(header_parts)
    keys = {m.group(1).upper(): m.group(2).strip() for m in _HEADER_KEY.finditer(header)}
    try:
        n_orb = int(keys["NORB"].rstrip(","))
        n_elec = int(keys["NELEC"].rstrip(","))
    except (KeyError, ValueError) as exc:
        raise FcidumpError(f"header is missing a valid NORB/NELEC: {header!r}") from exc
    ms2 = 0
    if "MS2" in keys:
        try:
            ms2 = int(keys["MS2"].rstrip(","))
        except ValueError as exc:
            raise FcidumpError(f"invalid MS2 in header: {keys['MS2']!r}") from exc

    core = 0.0
    h1 = np.zeros((n_orb, n_orb))
    h2 = np.zeros((n_orb, n_orb, n_orb, n_orb))

    for lineno, line in enumerate(lines[body_start:], start=body_start + 1):
        stripped = line.strip()
        if not stripped:
            continue
        fields = stripped.split()
        if len(fields) != 5:
            raise FcidumpError(f"line {lineno}: expected 'value i j k l', got {stripped!r}")
        try:
            value = float(fields[0])
            i, j, k, l = (int(f) for f in fields[1:])
        except ValueError as exc:
            raise FcidumpError(f"line {lineno}: non-numeric field in {stripped!r}") from exc
        for idx in (i, j, k, l):
            if idx < 0 or idx > n_orb:
                raise FcidumpError(f"line {lineno}: orbital index {idx} out of range 1..{n_orb}")
        if i == j == k == l == 0:
            core = value
        elif k == 0 and l == 0:
            if i == 0 or j == 0:
                raise FcidumpError(f"line {lineno}: one-electron entry needs two indices")
            h1[i - 1, j - 1] = value
            h1[j - 1, i - 1] = value
        elif min(i, j, k, l) == 0:
            raise FcidumpError(f"line {lineno}: two-electron entry has a zero index")
        else:
            p, q, r, s = i - 1, j - 1, k - 1, l - 1
            for a, b in ((p, q), (q, p)):
                for c, d in ((r, s), (s, r)):
                    h2[a, b, c, d] = value
                    h2[c, d, a, b] = value

    return MolecularIntegrals(
        n_orbitals=n_orb, n_electrons=n_elec, core_energy=core, h1=h1, h2=h2, ms2=ms2
    )


# ---------------------------------------------------------------------------
# Pauli terms


@dataclass(frozen=True)
class PauliTerm:
    """A real-coefficient Pauli string such as ``-0.5 * ZIIX``."""

    coefficient: float
    ops: str

    def __post_init__(self):
        if set(self.ops) - set("IXYZ"):
            raise ValueError(f"invalid Pauli string {self.ops!r}")

    @property
    def n_qubits(self) -> int:
        return len(self.ops)

    def masks(self) -> tuple[int, int, int]:
        """(flip_mask, sign_mask, y_count) with qubit 0 as the top bit."""
        n = len(self.ops)
        flip = sign = 0
        for q, op in enumerate(self.ops):
            bit = 1 << (n - 1 - q)
            if op in "XY":
                flip |= bit
            if op in "YZ":
                sign |= bit
        return flip, sign, bin(flip & sign).count("1")

    @staticmethod
    def from_masks(coefficient: float, flip: int, sign: int, n_qubits: int) -> "PauliTerm":
        chars = []
        for q in range(n_qubits):
            bit = 1 << (n_qubits - 1 - q)
            f, s = bool(flip & bit), bool(sign & bit)
            chars.append("Y" if f and s else "X" if f else "Z" if s else "I")
        return PauliTerm(coefficient, "".join(chars))


# ---------------------------------------------------------------------------
# grouped flip-mask storage


@dataclass
class QubitHamiltonian:
    """Pauli-term Hamiltonian grouped by unique bit-flip mask.

    Term data is stored flat and ordered by group: ``term_prefactors`` holds
    ``coefficient * i**y_count`` so a group's matrix-element contribution at
    configuration x is ``sum(prefactor * (-1)**popcount(x & sign_mask))``.
    Immutable after construction; safe for concurrent reads.
    """

    n_qubits: int
    n_electrons: int
    identity_offset: float
    flip_masks: np.ndarray          # (M,) uint64, sorted, excludes pure identity
    group_starts: np.ndarray        # (M,) int64 offsets into the term arrays
    term_prefactors: np.ndarray     # (T,) complex128
    term_sign_masks: np.ndarray     # (T,) uint64
    ms2: int = 0
    _mask_index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._mask_index = {int(m): i for i, m in enumerate(self.flip_masks)}

    @property
    def n_up(self) -> int:
        return (self.n_electrons + self.ms2) // 2

    @property
    def n_down(self) -> int:
        return (self.n_electrons - self.ms2) // 2

    @property
    def n_terms(self) -> int:
        return len(self.term_prefactors) + (1 if self.identity_offset else 0)

    @property
    def n_flip_groups(self) -> int:
        return len(self.flip_masks)

    @staticmethod
    def from_terms(
        terms: list[PauliTerm],
        n_qubits: int,
        n_electrons: int,
        ms2: int = 0,
        core_energy: float = 0.0,
    ) -> "QubitHamiltonian":
        """Combine like terms, prune tiny coefficients, group by flip mask."""
        combined: dict[tuple[int, int], float] = {}
        offset = core_energy
        for term in terms:
            if term.n_qubits != n_qubits:
                raise ValueError("inconsistent Pauli string length")
            flip, sign, _ = term.masks()
            if flip == 0 and sign == 0:
                offset += term.coefficient
                continue
            key = (flip, sign)
            combined[key] = combined.get(key, 0.0) + term.coefficient
        entries = [
            (flip, sign, coeff)
            for (flip, sign), coeff in combined.items()
            if abs(coeff) >= COEFF_PRUNE
        ]
        entries.sort()
        flips, starts, prefactors, signs = [], [], [], []
        for flip, sign, coeff in entries:
            if not flips or flips[-1] != flip:
                flips.append(flip)
                starts.append(len(prefactors))
            y_count = bin(flip & sign).count("1")
            prefactors.append(coeff * _I_POWERS[y_count % 4])
            signs.append(sign)
        return QubitHamiltonian(
            n_qubits=n_qubits,
            n_electrons=n_electrons,
            identity_offset=offset,
            flip_masks=np.asarray(flips, dtype=np.uint64),
            group_starts=np.asarray(starts, dtype=np.int64),
            term_prefactors=np.asarray(prefactors, dtype=np.complex128),
            term_sign_masks=np.asarray(signs, dtype=np.uint64),
            ms2=ms2,
        )

    def to_terms(self) -> list[PauliTerm]:
        """Expand back to Pauli strings (identity offset included if nonzero)."""
        terms = []
        if self.identity_offset:
            terms.append(PauliTerm(self.identity_offset, "I" * self.n_qubits))
        bounds = np.append(self.group_starts, len(self.term_prefactors))
        for g, flip in enumerate(self.flip_masks):
            for t in range(bounds[g], bounds[g + 1]):
                sign = int(self.term_sign_masks[t])
                y = bin(int(flip) & sign).count("1")
                coeff = (self.term_prefactors[t] / _I_POWERS[y % 4]).real
                terms.append(PauliTerm.from_masks(coeff, int(flip), sign, self.n_qubits))
        return terms

    # -- evaluation ---------------------------------------------------------

    def group_values(self, x_ints: np.ndarray) -> np.ndarray:
        """Per-group matrix-element factors at each configuration.

        Returns complex (U, M): entry (u, g) equals <x_u XOR f_g| H |x_u>
        restricted to group g (identity offset not included).  Evaluation is
        chunked over configurations to bound the (rows x terms) scratch.
        """
        x_ints = np.atleast_1d(np.asarray(x_ints, dtype=np.uint64))
        n_terms = len(self.term_prefactors)
        if n_terms == 0:
            return np.zeros((len(x_ints), 0), dtype=np.complex128)
        out = np.empty((len(x_ints), len(self.flip_masks)), dtype=np.complex128)
        chunk = max(1, (1 << 22) // n_terms)
        for lo in range(0, len(x_ints), chunk):
            rows = x_ints[lo:lo + chunk, None] & self.term_sign_masks[None, :]
            signs = 1.0 - 2.0 * (np.bitwise_count(rows) & np.uint64(1)).astype(np.float64)
            vals = self.term_prefactors[None, :] * signs
            out[lo:lo + chunk] = np.add.reduceat(vals, self.group_starts, axis=1)
        return out

    def matrix_element(self, x: np.ndarray, y: np.ndarray) -> float:
        """<x| H |y>; zero unless x XOR y is a stored flip mask."""
        x = np.asarray(x).ravel()
        y = np.asarray(y).ravel()
        if x.size != self.n_qubits or y.size != self.n_qubits:
            raise ValueError("configuration length does not match qubit count")
        ix = int(configs_to_ints(x)[0])
        iy = int(configs_to_ints(y)[0])
        value = self.identity_offset if ix == iy else 0.0
        g = self._mask_index.get(ix ^ iy)
        if g is not None:
            lo = int(self.group_starts[g])
            hi = int(self.group_starts[g + 1]) if g + 1 < len(self.group_starts) else len(self.term_prefactors)
            parity = np.bitwise_count(np.uint64(ix) & self.term_sign_masks[lo:hi]) & 1
            value += (self.term_prefactors[lo:hi] * (1.0 - 2.0 * parity)).sum().real
        return float(value)

    def connected_configs(self, x: np.ndarray) -> list[tuple[np.ndarray, float]]:
        """All (x', <x XOR f|H|x>) pairs with non-negligible coefficient.

        One entry per unique flip mask, plus the diagonal entry carrying the
        identity offset.  Entries below 1e-14 in magnitude are dropped.
        """
        x = np.asarray(x).ravel().astype(np.uint8)
        if x.size != self.n_qubits:
            raise ValueError("configuration length does not match qubit count")
        ix = np.uint64(configs_to_ints(x)[0])
        values = self.group_values(np.array([ix]))[0].real
        out = []
        diagonal_seen = False
        for g, flip in enumerate(self.flip_masks):
            value = values[g]
            if int(flip) == 0:
                value += self.identity_offset
                diagonal_seen = True
            if abs(value) < 1e-14:
                continue
            flipped = _xor_config(x, int(flip), self.n_qubits)
            out.append((flipped, float(value)))
        if not diagonal_seen and abs(self.identity_offset) >= 1e-14:
            out.insert(0, (x.copy(), float(self.identity_offset)))
        return out


def _xor_config(x: np.ndarray, flip: int, n: int) -> np.ndarray:
    flipped = x.copy()
    for q in range(n):
        if flip & (1 << (n - 1 - q)):
            flipped[q] ^= 1
    return flipped


# ---------------------------------------------------------------------------
# Jordan-Wigner transformation

# A Pauli monomial is (x_mask, z_mask, coeff) representing coeff * X^x Z^z.
# Products pick up (-1)**popcount(z1 & x2) from commuting Z past X.


def _fermi_monomials(qubit: int, dagger: bool, n: int) -> list[tuple[int, int, complex]]:
    bit = 1 << (n - 1 - qubit)
    z_string = 0
    for q in range(qubit):
        z_string |= 1 << (n - 1 - q)
    sign = 0.5 if dagger else -0.5
    return [(bit, z_string, 0.5), (bit, z_string | bit, sign)]


def _multiply_into(
    acc: dict[tuple[int, int], complex],
    factors: list[list[tuple[int, int, complex]]],
    weight: float,
) -> None:
    partial = [(0, 0, complex(weight))]
    for factor in factors:
        nxt = []
        for x1, z1, c1 in partial:
            for x2, z2, c2 in factor:
                phase = -1.0 if (bin(z1 & x2).count("1") & 1) else 1.0
                nxt.append((x1 ^ x2, z1 ^ z2, c1 * c2 * phase))
        partial = nxt
    for x, z, c in partial:
        key = (x, z)
        acc[key] = acc.get(key, 0.0) + c


def second_quantize_jw(mi: MolecularIntegrals) -> QubitHamiltonian:
    """Build the qubit Hamiltonian for a set of molecular integrals.

    H = sum_{pq,s} h1[p,q] a+_{ps} a_{qs}
        + 1/2 sum_{pqrs,st} (pq|rs) a+_{ps} a+_{rt} a_{st} a_{qs}
        + core energy,

    with spatial orbital p mapped to qubits 2p (up) and 2p+1 (down) and each
    fermionic operator expanded through the Jordan-Wigner Z strings.  Like
    terms are combined and coefficients below 1e-12 pruned.
    """
    n_orb = mi.n_orbitals
    n = 2 * n_orb
    mono = {
        (q, dag): _fermi_monomials(q, dag, n) for q in range(n) for dag in (False, True)
    }
    acc: dict[tuple[int, int], complex] = {}

    for p in range(n_orb):
        for q in range(n_orb):
            hpq = mi.h1[p, q]
            if abs(hpq) < COEFF_PRUNE:
                continue
            for s in range(2):
                _multiply_into(acc, [mono[(2 * p + s, True)], mono[(2 * q + s, False)]], hpq)

    for p in range(n_orb):
        for q in range(n_orb):
            for r in range(n_orb):
                for s in range(n_orb):
                    v = mi.h2[p, q, r, s]
                    if abs(v) < COEFF_PRUNE:
                        continue
                    for sig in range(2):
                        for tau in range(2):
                            ops = [
                                mono[(2 * p + sig, True)],
                                mono[(2 * r + tau, True)],
                                mono[(2 * s + tau, False)],
                                mono[(2 * q + sig, False)],
                            ]
                            _multiply_into(acc, ops, 0.5 * v)

    offset = mi.core_energy
    entries = []
    for (x, z), c in acc.items():
        y_count = bin(x & z).count("1")
        coeff = c * (-1j) ** (y_count % 4)
        if abs(coeff.imag) > 1e-9 * max(1.0, abs(coeff.real)):
            raise ValueError("Jordan-Wigner output has a non-real Pauli coefficient")
        real = coeff.real
        if x == 0 and z == 0:
            offset += real
            continue
        if abs(real) >= COEFF_PRUNE:
            entries.append((x, z, real))

    entries.sort()
    flips, starts, prefactors, signs = [], [], [], []
    for x, z, coeff in entries:
        if not flips or flips[-1] != x:
            flips.append(x)
            starts.append(len(prefactors))
        y_count = bin(x & z).count("1")
        prefactors.append(coeff * _I_POWERS[y_count % 4])
        signs.append(z)
    return QubitHamiltonian(
        n_qubits=n,
        n_electrons=mi.n_electrons,
        identity_offset=offset,
        flip_masks=np.asarray(flips, dtype=np.uint64),
        group_starts=np.asarray(starts, dtype=np.int64),
        term_prefactors=np.asarray(prefactors, dtype=np.complex128),
        term_sign_masks=np.asarray(signs, dtype=np.uint64),
        ms2=mi.ms2,
    )


# ---------------------------------------------------------------------------
# text export/import


def save_pauli_text(h: QubitHamiltonian, path: str) -> None:
    """Write ``n_qubits n_electrons`` header plus ``coefficient<TAB>string`` lines."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{h.n_qubits} {h.n_electrons}\n")
        for term in h.to_terms():
            fh.write(f"{term.coefficient:.17g}\t{term.ops}\n")


def load_pauli_text(path: str) -> QubitHamiltonian:
    """Inverse of :func:`save_pauli_text`.

    The text format does not carry MS2; the spin sector is reconstructed as
    the minimal-polarization one (MS2 = n_electrons mod 2).
    """
    with open(path, "r", encoding="ascii") as fh:
        lines = [line.rstrip("\n") for line in fh if line.strip()]
    if not lines:
        raise ValueError(f"{path}: empty Pauli text file")
    head = lines[0].split()
    if len(head) != 2:
        raise ValueError(f"{path}: header must be 'n_qubits n_electrons'")
    n_qubits, n_electrons = int(head[0]), int(head[1])
    terms = []
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split("\t")
        if len(fields) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'coefficient<TAB>string'")
        terms.append(PauliTerm(float(fields[0]), fields[1].strip()))
    return QubitHamiltonian.from_terms(
        terms, n_qubits, n_electrons, ms2=n_electrons % 2
    )
