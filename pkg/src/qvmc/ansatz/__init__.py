"""Autoregressive wavefunction ansatze over orbital token sequences."""

from qvmc.ansatz.config import KINDS, START_TOKEN, VOCAB, AnsatzConfig
from qvmc.ansatz.networks import (
    Ansatz,
    LogAmplitudeBatch,
    MadeAnsatz,
    RetNetAnsatz,
    TransformerAnsatz,
    build_ansatz,
    load_checkpoint,
    save_checkpoint,
)
from qvmc.ansatz.retention import (
    RetentionState,
    decay_mask,
    decay_rates,
    parallel_retention,
    recurrent_retention_step,
    rotation_tables,
)

__all__ = [
    "Ansatz",
    "AnsatzConfig",
    "KINDS",
    "LogAmplitudeBatch",
    "MadeAnsatz",
    "RetNetAnsatz",
    "RetentionState",
    "START_TOKEN",
    "TransformerAnsatz",
    "VOCAB",
    "build_ansatz",
    "decay_mask",
    "decay_rates",
    "load_checkpoint",
    "parallel_retention",
    "recurrent_retention_step",
    "rotation_tables",
    "save_checkpoint",
]
