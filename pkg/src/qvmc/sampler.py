"""Exact autoregressive sampling with unique-sample bookkeeping.

Sampling is breadth-first over orbital positions: a frontier of unique
prefixes carries integer draw counts, and at each position every prefix's
count is split multinomially among its four children using that prefix's
masked conditional.  The result is distributed exactly as independent draws
from |psi|^2 but costs one conditional evaluation per *unique* prefix, so
astronomically many draws stay cheap.  Retentive-network models reuse
copied recurrent states across the frontier; other architectures recompute
prefixes in parallel mode.

Randomness is counter-based: each frontier node derives its own generator
from (seed, position, prefix), making results deterministic and independent
of threading or frontier order.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from qvmc import encoding
from qvmc.ansatz.networks import Ansatz

__all__ = ["SampleSet", "SampleScheduleConfig", "prune_and_cap", "sample", "sample_count_at"]

RAMP_END_FRACTION = 0.9


@dataclass
class SampleSet:
    """Unique configurations with multiplicities from one sampling pass."""

    configs: np.ndarray        # (U, n_qubits) uint8, pairwise distinct
    counts: np.ndarray         # (U,) int64, all >= 1
    total_draws: int           # sum of counts
    rng_seed: int

    def __len__(self) -> int:
        return len(self.counts)

    def weights(self) -> np.ndarray:
        """Normalized multiplicities."""
        return self.counts / self.total_draws


@dataclass(frozen=True)
class SampleScheduleConfig:
    """Draw-count ramp and unique-sample handling knobs.

    The per-step draw count ramps geometrically from ``n_start`` to
    ``n_end`` over the first 90% of training and stays at ``n_end`` for the
    final 10%.  ``unique_cap`` bounds the unique configurations kept per
    step; ``prune_singletons`` drops count-1 prefixes at every sampling
    stage (cheap variance reduction that only makes sense when draws far
    outnumber the reachable states).
    """

    n_start: int = 1_000
    n_end: int = 1_000_000
    unique_cap: int = 8_000
    prune_singletons: bool = True

    def __post_init__(self):
        if self.n_start < 1 or self.n_end < self.n_start:
            raise ValueError("need 1 <= n_start <= n_end")
        if self.unique_cap < 1:
            raise ValueError("unique_cap must be positive")


def sample_count_at(cfg: SampleScheduleConfig, t: int, total_steps: int) -> int:
    """Scheduled draw count at step ``t`` of ``total_steps``."""
    if not 0 <= t <= total_steps:
        raise ValueError(f"step {t} outside [0, {total_steps}]")
    ramp_end = RAMP_END_FRACTION * total_steps
    if t >= ramp_end:
        return cfg.n_end
    frac = t / ramp_end
    return int(round(cfg.n_start * (cfg.n_end / cfg.n_start) ** frac))


def _node_rng(seed: int, position: int, prefix: np.ndarray) -> np.random.Generator:
    """Independent stream keyed by (seed, position, prefix tokens)."""
    key = 1
    for token in prefix:
        key = key * 4 + int(token)
    return np.random.default_rng(np.random.SeedSequence((seed, position, key)))


def sample(
    model: Ansatz,
    n_draws: int,
    seed: int,
    prune_singletons: bool = False,
) -> SampleSet:
    """Draw ``n_draws`` configurations from |psi|^2, deduplicated with counts.

    With ``prune_singletons`` the count-1 prefixes are dropped at each
    position (falling back to no pruning at a stage where that would empty
    the frontier).  Every returned configuration satisfies the electron
    constraints by construction.
    """
    if n_draws < 1:
        raise ValueError("n_draws must be at least 1")
    L = model.n_orbitals
    stepper = model.sampling_stepper()
    tokens = np.zeros((1, 0), dtype=np.int64)
    counts = np.array([n_draws], dtype=np.int64)
    used_up = np.zeros(1, dtype=np.int64)
    used_down = np.zeros(1, dtype=np.int64)
    carry = stepper.begin(1)
    warned = False

    for position in range(L):
        remaining = np.full(len(counts), L - 1 - position, dtype=np.int64)
        allowed = encoding.feasible_token_mask(
            used_up, used_down, remaining, model.n_up, model.n_down
        )
        probs, carry = stepper.step(carry, position, allowed)

        child_counts = np.zeros((len(counts), 4), dtype=np.int64)
        for i in range(len(counts)):
            rng = _node_rng(seed, position, tokens[i])
            p = probs[i] / probs[i].sum()
            child_counts[i] = rng.multinomial(counts[i], p)

        keep = child_counts > 0
        if prune_singletons:
            pruned = child_counts > 1
            if pruned.any():
                keep = pruned
            elif not warned:
                warnings.warn(
                    "singleton pruning would discard every sample at this "
                    "stage; keeping the unpruned frontier",
                    stacklevel=2,
                )
                warned = True

        parent_idx, child_token = np.nonzero(keep)
        counts = child_counts[parent_idx, child_token]
        tokens = np.concatenate(
            [tokens[parent_idx], child_token[:, None].astype(np.int64)], axis=1
        )
        up_add, down_add = encoding.token_charges(child_token)
        used_up = used_up[parent_idx] + up_add
        used_down = used_down[parent_idx] + down_add
        carry = stepper.select(carry, parent_idx)
        carry = stepper.extend(carry, child_token.astype(np.int64))

    configs = encoding.decode_tokens(tokens)
    order = np.argsort(encoding.configs_to_ints(configs), kind="stable")
    return SampleSet(
        configs=configs[order],
        counts=counts[order],
        total_draws=int(counts.sum()),
        rng_seed=seed,
    )


def prune_and_cap(sample_set: SampleSet, cfg: SampleScheduleConfig) -> SampleSet:
    """Drop count-1 configurations, then keep at most ``unique_cap`` of them.

    The cap keeps the largest counts, ties broken by configuration bit
    value for determinism.  Pruning everything falls back to the unpruned
    set with a warning (degenerate small-system case).
    """
    counts = sample_set.counts
    keep = counts > 1 if cfg.prune_singletons else np.ones(len(counts), dtype=bool)
    if cfg.prune_singletons and not keep.any():
        warnings.warn(
            "singleton pruning would discard every sample; keeping the set",
            stacklevel=2,
        )
        keep = np.ones(len(counts), dtype=bool)
    configs = sample_set.configs[keep]
    counts = counts[keep]
    if len(counts) > cfg.unique_cap:
        ints = encoding.configs_to_ints(configs)
        order = np.lexsort((ints, -counts))[: cfg.unique_cap]
        order.sort()
        configs = configs[order]
        counts = counts[order]
    return SampleSet(
        configs=configs,
        counts=counts,
        total_draws=int(counts.sum()),
        rng_seed=sample_set.rng_seed,
    )
