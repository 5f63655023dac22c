"""Scikit-learn style front end for the ground-state search.

``GroundStateSolver`` is a standard estimator: constructor arguments are
stored verbatim, ``fit`` consumes a Hamiltonian (object or file path) and
exposes learned state through trailing-underscore attributes, and
``get_params``/``set_params``/``clone`` work as usual so the solver drops
into parameter sweeps and grid-search tooling.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from qvmc.ansatz.config import AnsatzConfig
from qvmc.hamiltonian import QubitHamiltonian, load_pauli_text, parse_fcidump, second_quantize_jw
from qvmc.nn import ScheduleConfig
from qvmc.sampler import SampleScheduleConfig, SampleSet
from qvmc.sampler import sample as draw_samples
from qvmc.vmc import TrainConfig, train

__all__ = ["GroundStateSolver", "as_qubit_hamiltonian"]


def as_qubit_hamiltonian(source) -> QubitHamiltonian:
    """Validate/coerce fit input: a QubitHamiltonian or a file path.

    Paths ending in ``.pauli`` load the text term format; anything else is
    parsed as FCIDUMP and transformed.
    """
    if isinstance(source, QubitHamiltonian):
        return source
    if isinstance(source, str):
        if source.endswith(".pauli"):
            return load_pauli_text(source)
        return second_quantize_jw(parse_fcidump(source))
    raise TypeError(
        "expected a QubitHamiltonian or a path to an FCIDUMP/.pauli file, "
        f"got {type(source).__name__}"
    )


class GroundStateSolver(BaseEstimator):
    """Variational Monte Carlo ground-state estimator.

    Parameters mirror the training configuration: ansatz architecture,
    optimization schedule, sampling schedule, and engine knobs.  After
    ``fit``, ``best_energy_`` holds the confidence-filtered lowest energy
    (Hartree), ``model_`` the trained wavefunction, and ``history_`` the
    per-step log records.

    Example
    -------
    >>> solver = GroundStateSolver(total_steps=2000, seed=7)
    >>> solver.fit("h2.fcidump").best_energy_  # doctest: +SKIP
    -1.1372...
    """

    def __init__(
        self,
        ansatz: str = "retnet",
        n_block: int = 1,
        d_model: int = 16,
        d_retn: int = 16,
        d_ff: int = 64,
        n_heads: int = 2,
        phase_hidden: tuple = (64, 64),
        total_steps: int = 2000,
        base_lr: float = 2.5e-3,
        min_lr: float = 5e-8,
        warmup_frac: float = 0.04,
        anneal_exponent: float = 4.0,
        anneal_start_frac: float = 0.04,
        vna: bool = True,
        n_start: int = 1000,
        n_end: int = 1_000_000,
        unique_cap: int = 8000,
        prune_singletons: bool = True,
        flip_batch_count: int = 8,
        baseline_interval: int = 10,
        workers: int = 1,
        checkpoint_every: int = 0,
        checkpoint_dir: str | None = None,
        seed: int = 0,
    ):
        self.ansatz = ansatz
        self.n_block = n_block
        self.d_model = d_model
        self.d_retn = d_retn
        self.d_ff = d_ff
        self.n_heads = n_heads
        self.phase_hidden = phase_hidden
        self.total_steps = total_steps
        self.base_lr = base_lr
        self.min_lr = min_lr
        self.warmup_frac = warmup_frac
        self.anneal_exponent = anneal_exponent
        self.anneal_start_frac = anneal_start_frac
        self.vna = vna
        self.n_start = n_start
        self.n_end = n_end
        self.unique_cap = unique_cap
        self.prune_singletons = prune_singletons
        self.flip_batch_count = flip_batch_count
        self.baseline_interval = baseline_interval
        self.workers = workers
        self.checkpoint_every = checkpoint_every
        self.checkpoint_dir = checkpoint_dir
        self.seed = seed

    # -- configuration assembly ----------------------------------------------

    def ansatz_config(self) -> AnsatzConfig:
        return AnsatzConfig(
            kind=self.ansatz,
            n_block=self.n_block,
            d_model=self.d_model,
            d_retn=self.d_retn,
            d_ff=self.d_ff,
            n_heads=self.n_heads,
            phase_hidden=tuple(self.phase_hidden),
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            schedule=ScheduleConfig(
                total_steps=self.total_steps,
                base_lr=self.base_lr,
                min_lr=self.min_lr,
                warmup_frac=self.warmup_frac,
                anneal_exponent=self.anneal_exponent,
                anneal_start_frac=self.anneal_start_frac,
            ),
            samples=SampleScheduleConfig(
                n_start=self.n_start,
                n_end=self.n_end,
                unique_cap=self.unique_cap,
                prune_singletons=self.prune_singletons,
            ),
            flip_batch_count=self.flip_batch_count,
            baseline_interval=self.baseline_interval,
            vna=self.vna,
            seed=self.seed,
            workers=self.workers,
            checkpoint_every=self.checkpoint_every,
            checkpoint_dir=self.checkpoint_dir,
        )

    # -- estimator API ---------------------------------------------------------

    def fit(self, X, y=None, log_fn=None) -> "GroundStateSolver":
        """Train the wavefunction on a Hamiltonian and record the best energy."""
        h = as_qubit_hamiltonian(X)
        result = train(h, self.ansatz_config(), self.train_config(), log_fn=log_fn)
        self.hamiltonian_ = h
        self.model_ = result.model
        self.best_energy_ = result.best.mean
        self.best_estimate_ = result.best
        self.final_estimate_ = result.final
        self.history_ = result.records
        self.aborted_ = result.aborted
        self.n_parameters_ = result.model.store.n_parameters()
        return self

    def score(self, X=None, y=None) -> float:
        """Negative best energy (sklearn convention: greater is better)."""
        self._check_fitted()
        return -self.best_energy_

    def sample(self, n_draws: int, seed: int | None = None) -> SampleSet:
        """Draw from the trained wavefunction's probability distribution."""
        self._check_fitted()
        return draw_samples(self.model_, n_draws, self.seed if seed is None else seed)

    def log_amplitude(self, configs: np.ndarray):
        """Complex log-amplitudes of arbitrary spin configurations."""
        self._check_fitted()
        return self.model_.log_amplitude(np.asarray(configs))

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise RuntimeError("solver is not fitted; call fit() first")
