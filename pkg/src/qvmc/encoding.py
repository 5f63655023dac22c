"""Conversions between qubit spin strings and orbital token sequences.

Qubit layout interleaves spin channels: qubit ``2p`` holds the spin-up
occupancy of spatial orbital ``p`` and qubit ``2p+1`` the spin-down one, so
each adjacent qubit pair forms one 4-symbol orbital token
(0 empty, 1 down, 2 up, 3 doubly occupied).  Token sequences run over
orbitals in *reverse* index order: high orbitals, whose occupancies correlate
least with the rest, come first in the autoregressive factorization.

Integer encodings of configurations treat qubit 0 as the most significant
bit, matching the left-to-right reading of Pauli strings like ``"ZIIX"``.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "configs_to_ints",
    "decode_tokens",
    "encode_configs",
    "enumerate_sector",
    "feasible_token_mask",
    "ints_to_configs",
    "sector_counts",
    "token_charges",
]

TOKEN_UP = np.array([0, 0, 1, 1], dtype=np.int64)
TOKEN_DOWN = np.array([0, 1, 0, 1], dtype=np.int64)


def _check_even(n_qubits: int) -> int:
    if n_qubits % 2:
        raise ValueError(f"orbital pairing requires an even qubit count, got {n_qubits}")
    return n_qubits // 2


def encode_configs(configs: np.ndarray) -> np.ndarray:
    """Spin configurations (B, n) -> orbital token sequences (B, n/2)."""
    configs = np.atleast_2d(np.asarray(configs))
    n_orb = _check_even(configs.shape[-1])
    up = configs[:, 0::2]
    down = configs[:, 1::2]
    tokens = 2 * up.astype(np.int64) + down.astype(np.int64)
    return tokens[:, ::-1].copy()

def decode_tokens(tokens: np.ndarray) -> np.ndarray:
    """Orbital token sequences (B, n/2) -> spin configurations (B, n)."""
    tokens = np.atleast_2d(np.asarray(tokens))
    ordered = tokens[:, ::-1]
    b, n_orb = ordered.shape
    configs = np.zeros((b, 2 * n_orb), dtype=np.uint8)
    configs[:, 0::2] = (ordered >> 1) & 1
    configs[:, 1::2] = ordered & 1
    return configs


def token_charges(tokens: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-token (spin-up, spin-down) electron contributions."""
    tokens = np.asarray(tokens)
    return TOKEN_UP[tokens], TOKEN_DOWN[tokens]


def sector_counts(configs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-configuration (n_up, n_down) electron counts."""
    configs = np.atleast_2d(np.asarray(configs))
    return configs[:, 0::2].sum(axis=1), configs[:, 1::2].sum(axis=1)


def feasible_token_mask(
    used_up: np.ndarray,
    used_down: np.ndarray,
    remaining_orbitals: np.ndarray,
    n_up: int,
    n_down: int,
) -> np.ndarray:
    """Allowed next-token mask (..., 4) given prefix electron counts.

    A token is allowed iff adding its charges neither overshoots the target
    counts nor leaves more electrons outstanding than the remaining orbitals
    can hold (one per spin channel per orbital).
    """
    used_up = np.asarray(used_up)[..., None]
    used_down = np.asarray(used_down)[..., None]
    left = np.asarray(remaining_orbitals)[..., None]
    up_after = used_up + TOKEN_UP
    down_after = used_down + TOKEN_DOWN
    ok_up = (up_after <= n_up) & (n_up - up_after <= left)
    ok_down = (down_after <= n_down) & (n_down - down_after <= left)
    return ok_up & ok_down


def configs_to_ints(configs: np.ndarray) -> np.ndarray:
    """Pack spin configurations into integers (qubit 0 most significant)."""
    configs = np.atleast_2d(np.asarray(configs)).astype(np.uint64)
    n = configs.shape[-1]
    weights = (np.uint64(1) << np.arange(n - 1, -1, -1, dtype=np.uint64))
    return configs @ weights


def ints_to_configs(values: np.ndarray, n_qubits: int) -> np.ndarray:
    """Inverse of :func:`configs_to_ints`."""
    values = np.atleast_1d(np.asarray(values, dtype=np.uint64))
    shifts = np.arange(n_qubits - 1, -1, -1, dtype=np.uint64)
    return ((values[:, None] >> shifts) & np.uint64(1)).astype(np.uint8)


def enumerate_sector(n_qubits: int, n_up: int, n_down: int) -> np.ndarray:
    """All spin configurations with the given per-channel electron counts.

    Returned in ascending order of the packed integer encoding.
    """
    from itertools import combinations

    n_orb = _check_even(n_qubits)
    if not (0 <= n_up <= n_orb and 0 <= n_down <= n_orb):
        raise ValueError("electron counts exceed orbital capacity")
    ups = list(combinations(range(n_orb), n_up))
    downs = list(combinations(range(n_orb), n_down))
    configs = np.zeros((len(ups) * len(downs), n_qubits), dtype=np.uint8)
    row = 0
    for occ_up in ups:
        for occ_down in downs:
            for p in occ_up:
                configs[row, 2 * p] = 1
            for p in occ_down:
                configs[row, 2 * p + 1] = 1
            row += 1
    order = np.argsort(configs_to_ints(configs), kind="stable")
    return configs[order]
