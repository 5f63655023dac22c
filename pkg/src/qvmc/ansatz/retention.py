"""Retention: linearized attention with an exact recurrent dual form.

The parallel form computes (Q K^T o D) V over a whole sequence, where D is
the lower-triangular decay mask D[j, k] = gamma**(j - k).  The recurrent
form carries a per-head state S_t = gamma * S_(t-1) + K_t^T V_t and emits
Q_t S_t; both produce identical outputs, which the test suite pins to 1e-10.

Queries and keys receive a fixed pairwise rotation by position-proportional
angles (the xPos/rotary convention); keys rotate with the opposite sign so
query-key products depend only on relative positions.
"""

from __future__ import annotations

import numpy as np

from qvmc.nn import tensor as tt

__all__ = [
    "RetentionState",
    "decay_rates",
    "decay_mask",
    "parallel_retention",
    "recurrent_retention_step",
    "rotation_tables",
    "rotate",
]


def decay_rates(n_heads: int) -> np.ndarray:
    """Fixed per-head decay constants gamma_i = 1 - 2**(-5 - i)."""
    return 1.0 - 2.0 ** (-5.0 - np.arange(n_heads, dtype=np.float64))


def decay_mask(gammas: np.ndarray, n_seq: int) -> np.ndarray:
    """Stacked (H, L, L) lower-triangular decay masks."""
    gammas = np.atleast_1d(np.asarray(gammas, dtype=np.float64))
    if (gammas <= 0).any():
        raise ValueError("decay constants must be positive")
    j = np.arange(n_seq)
    delta = j[:, None] - j[None, :]
    with np.errstate(invalid="ignore"):
        d = np.where(delta >= 0, gammas[:, None, None] ** delta[None, :, :], 0.0)
    return d


def rotation_tables(n_seq: int, head_dim: int) -> tuple[np.ndarray, np.ndarray]:
    """(cos, sin) tables of shape (L, head_dim) for positions 0..L-1.

    Frequencies follow the rotary convention theta_k = 10000**(-2k/d); each
    frequency drives one (even, odd) coordinate pair.
    """
    if head_dim % 2:
        raise ValueError("head_dim must be even for pairwise rotation")
    freqs = 10000.0 ** (-2.0 * np.arange(head_dim // 2) / head_dim)
    angles = np.arange(n_seq)[:, None] * freqs[None, :]
    cos = np.repeat(np.cos(angles), 2, axis=1)
    sin = np.repeat(np.sin(angles), 2, axis=1)
    return cos, sin


def rotate(x, cos, sin):
    """Apply the pairwise position rotation to the last axis (taped op).

    Queries and keys rotate in the same direction: the real dot product of
    two rotated pair-vectors picks up the conjugate automatically, so
    query-key products depend only on the relative position.
    """
    return tt.add(tt.mul(x, cos), tt.mul(tt.rotate_half(x), sin))


def parallel_retention(q, k, v, d_mask: np.ndarray):
    """(Q K^T o D) V for per-head tensors (B, H, L, dk)/(B, H, L, dv)."""
    scores = tt.matmul(q, k, transpose_b=True)
    return tt.matmul(tt.mul(scores, d_mask), v)


class RetentionState:
    """Per-block recurrent memory: one (B, H, dk, dv) array per block.

    Values are copied on update, so holding a reference from an earlier
    position stays valid; branch-and-reuse sampling relies on this.
    """

    __slots__ = ("blocks", "position")

    def __init__(self, blocks: list[np.ndarray], position: int = 0):
        self.blocks = blocks
        self.position = position

    @staticmethod
    def zeros(batch, n_block, n_heads, d_k, d_v) -> "RetentionState":
        return RetentionState(
            [np.zeros((batch, n_heads, d_k, d_v)) for _ in range(n_block)], 0
        )

    def take(self, idx: np.ndarray) -> "RetentionState":
        """Select batch rows (children inherit their parent's state)."""
        return RetentionState([s[idx] for s in self.blocks], self.position)


def recurrent_retention_step(
    q_t: np.ndarray,
    k_t: np.ndarray,
    v_t: np.ndarray,
    state: np.ndarray,
    gammas: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """One recurrence step for a single block.

    Arguments are per-head slices at one position: q_t, k_t (B, H, dk),
    v_t (B, H, dv), state (B, H, dk, dv).  Returns (output (B, H, dv),
    new state); the input state is not mutated.
    """
    new_state = gammas[None, :, None, None] * state + k_t[..., :, None] * v_t[..., None, :]
    out = np.einsum("bhk,bhkv->bhv", q_t, new_state)
    return out, new_state
