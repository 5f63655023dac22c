"""Ground-state search for molecular qubit Hamiltonians with autoregressive
neural wavefunctions, trained by variational Monte Carlo with entropy
annealing and verified against exact diagonalization at desk scale."""

from qvmc.ansatz import AnsatzConfig, build_ansatz, load_checkpoint, save_checkpoint
from qvmc.hamiltonian import (
    MolecularIntegrals,
    PauliTerm,
    QubitHamiltonian,
    load_pauli_text,
    parse_fcidump,
    save_pauli_text,
    second_quantize_jw,
)
from qvmc.nn import ScheduleConfig
from qvmc.oracle import ground_state
from qvmc.sampler import SampleScheduleConfig, SampleSet, prune_and_cap, sample
from qvmc.solver import GroundStateSolver
from qvmc.vmc import TrainConfig, TrainResult, train

__version__ = "0.1.0"

__all__ = [
    "AnsatzConfig",
    "GroundStateSolver",
    "MolecularIntegrals",
    "PauliTerm",
    "QubitHamiltonian",
    "SampleScheduleConfig",
    "SampleSet",
    "ScheduleConfig",
    "TrainConfig",
    "TrainResult",
    "build_ansatz",
    "ground_state",
    "load_checkpoint",
    "load_pauli_text",
    "parse_fcidump",
    "prune_and_cap",
    "sample",
    "save_checkpoint",
    "save_pauli_text",
    "second_quantize_jw",
    "train",
]


def fixture_path(name: str) -> str:
    """Absolute path of a bundled fixture file, e.g. ``fixture_path("h2.fcidump")``."""
    from pathlib import Path

    path = Path(__file__).parent / "fixtures" / name
    if not path.exists():
        raise FileNotFoundError(f"no bundled fixture named {name!r}")
    return str(path)
