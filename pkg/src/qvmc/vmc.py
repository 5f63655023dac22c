"""Variational Monte Carlo training engine.

One optimization step: draw unique samples with counts, evaluate every
connected amplitude (batched, deduplicated), form local energies, and push
the count-weighted log-derivative gradient - optionally regularized by an
annealed entropy term - through one differentiable parallel pass over the
unique samples.  Flipped-state amplitude queries never join the gradient
pass; they are plain inference (the recurrent path, for retentive models).

All estimators work on weighted unique samples: with weights proportional
to enumerated probabilities they reproduce the exact sector expectations,
which is how the test suite pins them down.
"""

from __future__ import annotations

import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from qvmc import encoding
from qvmc.ansatz.config import AnsatzConfig
from qvmc.ansatz.networks import Ansatz, build_ansatz, save_checkpoint
from qvmc.hamiltonian import QubitHamiltonian
from qvmc.nn import (
    NonFiniteGradientError,
    ScheduleConfig,
    Tape,
    adam_step,
    beta_at,
    lr_at,
)
from qvmc.sampler import SampleScheduleConfig, SampleSet, prune_and_cap, sample, sample_count_at

__all__ = [
    "AmplitudeTraces",
    "EnergyEstimate",
    "TrainConfig",
    "TrainResult",
    "baseline_refresh_due",
    "baseline_value",
    "best_energy_update",
    "energy_estimate",
    "local_energies",
    "local_energy",
    "record_amplitudes",
    "train",
    "vna_gradient",
]

CONFIDENCE_Z = 1.645  # one-sided 95%


@dataclass
class EnergyEstimate:
    """Count-weighted mean/variance of the real local energies."""

    mean: float
    variance: float
    n_eff: int
    step: int = 0

    def standard_error(self) -> float:
        return float(np.sqrt(max(self.variance, 0.0) / max(self.n_eff, 1)))

    def upper_confidence(self) -> float:
        return self.mean + CONFIDENCE_Z * self.standard_error()


# ---------------------------------------------------------------------------
# local energies


def _amplitude_batches(amp: Callable, configs: np.ndarray, n_batches: int, workers: int):
    """Evaluate an amplitude function over row batches, optionally threaded."""
    if len(configs) == 0:
        return np.empty(0), np.empty(0), np.empty(0, dtype=bool)
    n_batches = max(1, min(n_batches, len(configs)))
    chunks = np.array_split(configs, n_batches)
    if workers > 1 and n_batches > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(amp, chunks))
    else:
        results = [amp(chunk) for chunk in chunks]
    logmod = np.concatenate([r[0] for r in results])
    phase = np.concatenate([r[1] for r in results])
    support = np.concatenate([r[2] for r in results])
    return logmod, phase, support


def local_energies(
    h: QubitHamiltonian,
    configs: np.ndarray,
    amp: Callable,
    flip_batch_count: int = 8,
    workers: int = 1,
    denominators: tuple[np.ndarray, np.ndarray] | None = None,
) -> np.ndarray:
    """Complex local energies for a batch of sampled configurations.

    For each x: l(x) = sum over connected x' of <x|H|x'> * psi(x')/psi(x).
    Flipped configurations are deduplicated across the batch and evaluated
    in ``flip_batch_count`` amplitude batches.  ``denominators`` may supply
    (log_modulus, phase) of ``configs`` when already known, e.g. from the
    differentiable pass.
    """
    configs = np.atleast_2d(np.asarray(configs))
    n_cfg = len(configs)
    x_ints = encoding.configs_to_ints(configs)

    if denominators is None:
        own_lm, own_ph, own_support = _amplitude_batches(
            amp, configs, flip_batch_count, workers
        )
        if not own_support.all():
            raise ValueError("a sampled configuration has zero amplitude")
    else:
        own_lm, own_ph = denominators
        if not np.isfinite(own_lm).all():
            raise ValueError("a sampled configuration has zero amplitude")

    values = h.group_values(x_ints)  # (U, M)
    flips = h.flip_masks
    diagonal = np.full(n_cfg, h.identity_offset, dtype=np.complex128)
    off_groups = []
    for g, flip in enumerate(flips):
        if int(flip) == 0:
            diagonal += values[:, g]
        else:
            off_groups.append(g)

    locals_ = diagonal.copy()
    if off_groups:
        off = np.asarray(off_groups)
        targets = x_ints[:, None] ^ flips[off][None, :]          # (U, G)
        coeffs = values[:, off]                                   # (U, G)
        uniq, inverse = np.unique(targets.ravel(), return_inverse=True)
        uniq_configs = encoding.ints_to_configs(uniq, h.n_qubits)
        lm, ph, support = _amplitude_batches(amp, uniq_configs, flip_batch_count, workers)

        lm_t = lm[inverse].reshape(targets.shape)
        ph_t = ph[inverse].reshape(targets.shape)
        sup_t = support[inverse].reshape(targets.shape)
        ratio = np.zeros(targets.shape, dtype=np.complex128)
        ok = sup_t
        ratio[ok] = np.exp(
            (lm_t[ok] - own_lm[np.nonzero(ok)[0]])
            + 1j * (ph_t[ok] - own_ph[np.nonzero(ok)[0]])
        )
        locals_ += (coeffs * ratio).sum(axis=1)
    return locals_


def local_energy(
    h: QubitHamiltonian,
    x: np.ndarray,
    amp: Callable,
    flip_batch_count: int = 8,
) -> complex:
    """Local energy of a single configuration (batched internally)."""
    return complex(local_energies(h, np.atleast_2d(x), amp, flip_batch_count)[0])


# ---------------------------------------------------------------------------
# estimators


def energy_estimate(samples: SampleSet, locals_: np.ndarray, step: int = 0) -> EnergyEstimate:
    """Count-weighted mean and population variance of Re(local energies)."""
    if len(samples) == 0:
        raise ValueError("cannot estimate energy from an empty sample set")
    if len(locals_) != len(samples):
        raise ValueError("local energies are not aligned with the sample set")
    weights = samples.weights()
    real = np.real(locals_)
    mean = float(weights @ real)
    variance = float(weights @ (real - mean) ** 2)
    return EnergyEstimate(mean=mean, variance=variance, n_eff=samples.total_draws, step=step)


@dataclass
class AmplitudeTraces:
    """Differentiable forward passes over the unique samples of one step."""

    log_modulus: object     # taped tensor (U,)
    phase: object           # taped tensor (U,)
    mod_tape: Tape
    phase_tape: Tape


def record_amplitudes(model: Ansatz, configs: np.ndarray) -> AmplitudeTraces:
    """Run modulus and phase passes in recorded (parallel) mode."""
    tokens = encoding.encode_configs(configs)
    mod_tape = Tape()
    phase_tape = Tape()
    log_modulus = model.log_modulus(tokens, mod_tape)
    phase = model.phase(configs, phase_tape)
    return AmplitudeTraces(log_modulus, phase, mod_tape, phase_tape)


def vna_gradient(
    traces: AmplitudeTraces,
    samples: SampleSet,
    locals_: np.ndarray,
    beta: float,
    baseline: float,
) -> dict[str, np.ndarray]:
    """Entropy-regularized log-derivative gradient over unique samples.

    Per-sample seeds, with rho the normalized counts and m the log-moduli:
    the modulus path receives 2*rho*(Re(l) + beta*(1 + 2m) - baseline) and
    the phase path 2*rho*Im(l); together they realize the real part of the
    complex chain rule for the score-function estimator.  ``beta=0``
    reproduces the plain energy gradient bit-for-bit.
    """
    if beta < 0.0:
        raise ValueError("beta must be non-negative")
    rho = samples.weights()
    m = traces.log_modulus.data
    w_mod = 2.0 * rho * (np.real(locals_) + beta * (1.0 + 2.0 * m) - baseline)
    w_phase = 2.0 * rho * np.imag(locals_)
    if not (np.isfinite(w_mod).all() and np.isfinite(w_phase).all()):
        raise NonFiniteGradientError(
            "non-finite per-sample weight (local energies or log-moduli diverged)"
        )
    grads = traces.mod_tape.gradient(traces.log_modulus, w_mod)
    for name, g in traces.phase_tape.gradient(traces.phase, w_phase).items():
        if name in grads:
            grads[name] = grads[name] + g
        else:
            grads[name] = g
    return grads


def baseline_value(estimate_mean: float, beta: float, mean_log_sq: float) -> float:
    """Regularized loss used as the gradient baseline: E[l] + beta*E[log|psi|^2]."""
    return estimate_mean + beta * mean_log_sq


def baseline_refresh_due(step: int, interval: int, total_steps: int) -> bool:
    """Baselines refresh on their interval for the first 90% of training and
    every step in the final 10%; shifting the baseline adds no bias, only
    variance, so staleness is a pure speed/variance trade."""
    if interval < 1:
        raise ValueError("interval must be at least 1")
    return step % interval == 0 or step >= int(0.9 * total_steps)


def best_energy_update(best: EnergyEstimate | None, est: EnergyEstimate) -> EnergyEstimate:
    """Accept ``est`` as the new best only when the old best exceeds its
    one-sided 95% upper confidence bound; ties keep the old value."""
    if best is None or best.mean > est.upper_confidence():
        return est
    return best


# ---------------------------------------------------------------------------
# training loop


@dataclass
class TrainConfig:
    """Everything the optimization loop needs besides the Hamiltonian."""

    schedule: ScheduleConfig
    samples: SampleScheduleConfig = field(default_factory=SampleScheduleConfig)
    flip_batch_count: int = 8
    baseline_interval: int = 10
    vna: bool = True
    seed: int = 0
    workers: int = 1
    checkpoint_every: int = 0
    checkpoint_dir: str | None = None

    def __post_init__(self):
        if self.baseline_interval < 1:
            raise ValueError("baseline_interval must be at least 1")
        if self.flip_batch_count < 1:
            raise ValueError("flip_batch_count must be at least 1")


@dataclass
class TrainResult:
    model: Ansatz
    best: EnergyEstimate
    final: EnergyEstimate
    baseline: float
    records: list[dict]
    aborted: bool = False


def _step_seed(seed: int, step: int) -> int:
    return int(np.random.SeedSequence((seed, step)).generate_state(1)[0])


def train(
    h: QubitHamiltonian,
    ansatz_cfg: AnsatzConfig,
    cfg: TrainConfig,
    log_fn: Callable[[dict], None] | None = None,
) -> TrainResult:
    """Run the full optimization loop and return the trained model.

    Per step: scheduled draw count -> exact sampling with dedup/prune/cap ->
    batched local energies -> baseline refresh on its interval (every step in
    the final 10%) -> annealed gradient -> Adam update -> best-energy rule.
    A non-finite gradient aborts with the parameters of the last good step.
    """
    model = build_ansatz(ansatz_cfg, h.n_qubits, h.n_up, h.n_down, seed=cfg.seed)
    total = cfg.schedule.total_steps
    amp = model.amplitude_fn()
    best: EnergyEstimate | None = None
    baseline = 0.0
    records: list[dict] = []
    last_good = model.store.clone_arrays()
    aborted = False
    estimate = None

    for step in range(total):
        t0 = time.perf_counter()
        lr = lr_at(cfg.schedule, step)
        beta = beta_at(cfg.schedule, step) if cfg.vna else 0.0
        n_draws = sample_count_at(cfg.samples, step, total)

        sset = sample(
            model, n_draws, _step_seed(cfg.seed, step),
            prune_singletons=cfg.samples.prune_singletons,
        )
        sset = prune_and_cap(sset, cfg.samples)

        try:
            traces = record_amplitudes(model, sset.configs)
            locals_ = local_energies(
                h, sset.configs, amp,
                flip_batch_count=cfg.flip_batch_count,
                workers=cfg.workers,
                denominators=(traces.log_modulus.data, traces.phase.data),
            )
            estimate = energy_estimate(sset, locals_, step)
            if baseline_refresh_due(step, cfg.baseline_interval, total):
                mean_log_sq = float(sset.weights() @ (2.0 * traces.log_modulus.data))
                baseline = baseline_value(estimate.mean, beta, mean_log_sq)
            grads = vna_gradient(traces, sset, locals_, beta, baseline)
            adam_step(model.store, grads, lr)
        except NonFiniteGradientError as exc:
            warnings.warn(f"aborting at step {step}: {exc}", stacklevel=2)
            for name, arr in last_good.items():
                model.store.params[name][...] = arr
            aborted = True
            break

        last_good = model.store.clone_arrays()
        best = best_energy_update(best, estimate)
        record = {
            "step": step,
            "energy": estimate.mean,
            "variance": estimate.variance,
            "n_unique": len(sset),
            "total_draws": sset.total_draws,
            "beta": beta,
            "lr": lr,
            "best_energy": best.mean,
            "wall_ms": round(1000.0 * (time.perf_counter() - t0), 3),
        }
        records.append(record)
        if log_fn is not None:
            log_fn(record)
        if (
            cfg.checkpoint_every
            and cfg.checkpoint_dir
            and (step + 1) % cfg.checkpoint_every == 0
        ):
            save_checkpoint(model, f"{cfg.checkpoint_dir}/checkpoint_{step + 1:06d}.json")

    if best is None or estimate is None:
        raise RuntimeError("training aborted before completing a single step")
    return TrainResult(
        model=model,
        best=best,
        final=estimate,
        baseline=baseline,
        records=records,
        aborted=aborted,
    )
