"""Minimal taped tensor math, the Adam optimizer, and training schedules."""

from qvmc.nn import tensor
from qvmc.nn.optim import NonFiniteGradientError, ParameterStore, adam_step
from qvmc.nn.schedules import ScheduleConfig, beta_at, lr_at
from qvmc.nn.tensor import GradientModeError, Tape, Tensor

__all__ = [
    "GradientModeError",
    "NonFiniteGradientError",
    "ParameterStore",
    "ScheduleConfig",
    "Tape",
    "Tensor",
    "adam_step",
    "beta_at",
    "lr_at",
    "tensor",
]
