"""Learning-rate and entropy-coefficient schedules."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

__all__ = ["ScheduleConfig", "beta_at", "lr_at"]


@dataclass(frozen=True)
class ScheduleConfig:
    """Shared clock for the optimizer and the annealing coefficient.

    The learning rate warms up linearly from 0 to ``base_lr`` over
    ``warmup_frac`` of the run, then follows a cosine decay to ``min_lr``.
    The entropy coefficient stays at ``beta0`` until ``anneal_start_frac``,
    then decays polynomially, (1 - t'/T')**anneal_exponent, hitting exactly
    zero at the final step.
    """

    total_steps: int
    base_lr: float = 2.5e-3
    min_lr: float = 5e-8
    warmup_frac: float = 0.04
    anneal_exponent: float = 4.0
    anneal_start_frac: float = 0.04
    beta0: float = 1.0

    def __post_init__(self):
        if self.total_steps < 1:
            raise ValueError("total_steps must be positive")
        if self.min_lr > self.base_lr:
            raise ValueError("min_lr must not exceed base_lr")
        if not 0.0 <= self.warmup_frac <= 1.0:
            raise ValueError("warmup_frac must lie in [0, 1]")
        if not 0.0 <= self.anneal_start_frac < 1.0:
            raise ValueError("anneal_start_frac must lie in [0, 1)")
        if self.anneal_exponent <= 1.0:
            warnings.warn(
                "anneal_exponent <= 1 gives a sub-polynomial annealing schedule",
                stacklevel=2,
            )


def lr_at(cfg: ScheduleConfig, t: int) -> float:
    """Learning rate at step ``t`` (0 <= t <= total_steps)."""
    _check_step(cfg, t)
    t_warm = cfg.warmup_frac * cfg.total_steps
    if t < t_warm:
        return cfg.base_lr * t / t_warm
    span = cfg.total_steps - t_warm
    if span <= 0.0:
        return cfg.min_lr if t >= cfg.total_steps else cfg.base_lr
    frac = (t - t_warm) / span
    return cfg.min_lr + 0.5 * (cfg.base_lr - cfg.min_lr) * (1.0 + math.cos(math.pi * frac))


def beta_at(cfg: ScheduleConfig, t: int) -> float:
    """Entropy-regularization coefficient at step ``t``."""
    _check_step(cfg, t)
    t_start = cfg.anneal_start_frac * cfg.total_steps
    if t < t_start:
        return cfg.beta0
    span = cfg.total_steps - t_start
    frac = min((t - t_start) / span, 1.0)
    return cfg.beta0 * (1.0 - frac) ** cfg.anneal_exponent


def _check_step(cfg: ScheduleConfig, t: int) -> None:
    if not 0 <= t <= cfg.total_steps:
        raise ValueError(f"step {t} outside [0, {cfg.total_steps}]")
