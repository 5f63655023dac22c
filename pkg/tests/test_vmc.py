"""Estimators, gradients against enumeration/finite-difference oracles, and
the training loop's bookkeeping."""

import numpy as np
import pytest

from qvmc import encoding
from qvmc.ansatz import AnsatzConfig, build_ansatz
from qvmc.hamiltonian import PauliTerm, QubitHamiltonian
from qvmc.nn import ScheduleConfig
from qvmc.oracle import (
    dense_hamiltonian,
    exact_entropy,
    exact_expectation,
    fd_gradient,
    ground_state,
)
from qvmc.sampler import SampleScheduleConfig, SampleSet
from qvmc.vmc import (
    EnergyEstimate,
    TrainConfig,
    baseline_refresh_due,
    baseline_value,
    best_energy_update,
    energy_estimate,
    local_energies,
    local_energy,
    record_amplitudes,
    train,
    vna_gradient,
)


def _model(n_qubits, n_up, n_down, kind="retnet", seed=3, **kw):
    defaults = dict(kind=kind, n_block=1, d_model=8, d_retn=8, d_ff=12,
                    n_heads=2, phase_hidden=(6, 6))
    defaults.update(kw)
    return build_ansatz(AnsatzConfig(**defaults), n_qubits, n_up, n_down, seed=seed)


class _EnumerationSet(SampleSet):
    """Sample set whose weights are exact probabilities (not integer counts)."""


def _exact_weight_set(model, h):
    sector = encoding.enumerate_sector(h.n_qubits, h.n_up, h.n_down)
    amp = model.log_amplitude(sector)
    probs = np.exp(2.0 * amp.log_modulus)
    s = _EnumerationSet(configs=sector, counts=probs, total_draws=1, rng_seed=0)
    return s


# ---------------------------------------------------------------------------
# local energies


def test_identity_hamiltonian_local_energy():
    h = QubitHamiltonian.from_terms([PauliTerm(2.5, "IIII")], 4, 2, ms2=0)
    model = _model(4, 1, 1)
    x = encoding.enumerate_sector(4, 1, 1)[0]
    value = local_energy(h, x, model.amplitude_fn())
    assert value == pytest.approx(2.5)


def test_single_x_with_uniform_amplitudes():
    h = QubitHamiltonian.from_terms([PauliTerm(1.0, "X")], 1, 1, ms2=1)

    def amp(configs):
        n = len(configs)
        return (np.full(n, np.log(2 ** -0.5)), np.zeros(n), np.ones(n, dtype=bool))

    for bit in (0, 1):
        value = local_energy(h, np.array([bit], dtype=np.uint8), amp)
        assert value == pytest.approx(1.0)


def test_locals_match_dense_matvec(rng, lih3_hamiltonian):
    h = lih3_hamiltonian
    model = _model(h.n_qubits, h.n_up, h.n_down, seed=8)
    sector = encoding.enumerate_sector(h.n_qubits, h.n_up, h.n_down)
    amp = model.log_amplitude(sector)
    psi_sector = np.exp(amp.log_modulus + 1j * amp.phase)

    psi = np.zeros(2 ** h.n_qubits, dtype=np.complex128)
    psi[encoding.configs_to_ints(sector).astype(np.int64)] = psi_sector
    h_psi = dense_hamiltonian(h) @ psi

    locals_ = local_energies(h, sector, model.amplitude_fn())
    idx = encoding.configs_to_ints(sector).astype(np.int64)
    expected = h_psi[idx] / psi[idx]
    assert np.abs(locals_ - expected).max() < 1e-10


def test_flip_batch_count_is_result_invariant(lih3_hamiltonian):
    h = lih3_hamiltonian
    model = _model(h.n_qubits, h.n_up, h.n_down, seed=2)
    sector = encoding.enumerate_sector(h.n_qubits, h.n_up, h.n_down)
    a = local_energies(h, sector, model.amplitude_fn(), flip_batch_count=1)
    b = local_energies(h, sector, model.amplitude_fn(), flip_batch_count=8)
    c = local_energies(h, sector, model.amplitude_fn(), flip_batch_count=8, workers=4)
    assert np.abs(a - b).max() < 1e-14
    assert np.abs(a - c).max() < 1e-14


def test_zero_amplitude_sample_rejected():
    h = QubitHamiltonian.from_terms([PauliTerm(1.0, "ZI")], 2, 1, ms2=1)

    def amp(configs):
        n = len(configs)
        return (np.full(n, -np.inf), np.zeros(n), np.zeros(n, dtype=bool))

    with pytest.raises(ValueError):
        local_energy(h, np.array([0, 1], dtype=np.uint8), amp)


# ---------------------------------------------------------------------------
# energy estimate


def test_constant_locals():
    s = SampleSet(configs=np.zeros((3, 2), dtype=np.uint8),
                  counts=np.array([4, 5, 6]), total_draws=15, rng_seed=0)
    est = energy_estimate(s, np.full(3, 1.7 + 0j))
    assert est.mean == pytest.approx(1.7)
    assert est.variance == pytest.approx(0.0)


def test_weighted_mean_and_variance():
    s = SampleSet(configs=np.zeros((2, 2), dtype=np.uint8),
                  counts=np.array([3, 1]), total_draws=4, rng_seed=0)
    est = energy_estimate(s, np.array([-1.0, 3.0]))
    assert est.mean == pytest.approx(0.0)
    assert est.variance == pytest.approx(3.0)
    assert est.standard_error() == pytest.approx(np.sqrt(3.0 / 4.0))


def test_enumeration_weights_reproduce_exact_expectation(h2_hamiltonian):
    model = _model(4, 1, 1, seed=4)
    s = _exact_weight_set(model, h2_hamiltonian)
    locals_ = local_energies(h2_hamiltonian, s.configs, model.amplitude_fn())
    est_mean = float(s.weights() @ np.real(locals_))
    exact = exact_expectation(h2_hamiltonian, model.amplitude_fn())
    assert est_mean == pytest.approx(exact, abs=1e-10)


def test_empty_sample_set_rejected():
    s = SampleSet(configs=np.zeros((0, 2), dtype=np.uint8),
                  counts=np.zeros(0, dtype=np.int64), total_draws=0, rng_seed=0)
    with pytest.raises(ValueError):
        energy_estimate(s, np.zeros(0))


# ---------------------------------------------------------------------------
# gradient oracles


def _flatten(grads, order):
    return np.concatenate([grads[name].ravel() for name in order])


@pytest.mark.parametrize("kind", ["retnet", "transformer", "made"])
def test_energy_gradient_matches_finite_differences(kind, h2_hamiltonian):
    h = h2_hamiltonian
    model = _model(4, 1, 1, kind=kind, seed=6)
    order = model.store.names()

    s = _exact_weight_set(model, h)
    traces = record_amplitudes(model, s.configs)
    locals_ = local_energies(h, s.configs, model.amplitude_fn(),
                             denominators=(traces.log_modulus.data, traces.phase.data))
    exact_e = exact_expectation(h, model.amplitude_fn())
    grads = vna_gradient(traces, s, locals_, beta=0.0, baseline=exact_e)
    flat = _flatten(grads, order)

    def objective(vec):
        saved = model.store.clone_arrays()
        model.store.load_flat(vec)
        try:
            return exact_expectation(h, model.amplitude_fn())
        finally:
            for name, arr in saved.items():
                model.store.params[name][...] = arr

    fd = fd_gradient(objective, model.store.flat(), h=1e-4)
    scale = max(np.abs(fd).max(), 1e-9)
    assert np.abs(fd - flat).max() / scale < 1e-4


def test_entropy_gradient_matches_finite_differences(h2_hamiltonian):
    # zero Hamiltonian, beta=1: the update must be the gradient of the
    # negative sector entropy of |psi|^2
    h = h2_hamiltonian
    model = _model(4, 1, 1, seed=9)
    order = model.store.names()

    s = _exact_weight_set(model, h)
    traces = record_amplitudes(model, s.configs)
    locals_ = np.zeros(len(s.configs), dtype=np.complex128)
    mean_log_sq = float(s.weights() @ (2.0 * traces.log_modulus.data))
    b = baseline_value(0.0, 1.0, mean_log_sq)
    grads = vna_gradient(traces, s, locals_, beta=1.0, baseline=b)
    flat = _flatten(grads, order)

    def objective(vec):
        saved = model.store.clone_arrays()
        model.store.load_flat(vec)
        try:
            return -exact_entropy(h, model.amplitude_fn())
        finally:
            for name, arr in saved.items():
                model.store.params[name][...] = arr

    fd = fd_gradient(objective, model.store.flat(), h=1e-4)
    scale = max(np.abs(fd).max(), 1e-9)
    assert np.abs(fd - flat).max() / scale < 1e-4


def test_gradient_invariant_to_baseline_shift(h2_hamiltonian):
    h = h2_hamiltonian
    model = _model(4, 1, 1, seed=5)
    s = _exact_weight_set(model, h)

    flats = []
    for shift in (0.0, 100.0):
        traces = record_amplitudes(model, s.configs)
        locals_ = local_energies(h, s.configs, model.amplitude_fn(),
                                 denominators=(traces.log_modulus.data, traces.phase.data))
        grads = vna_gradient(traces, s, locals_, beta=0.0, baseline=1.3 + shift)
        flats.append(_flatten(grads, model.store.names()))
    assert np.abs(flats[0] - flats[1]).max() < 1e-10


def test_centered_weights_give_zero_gradient(h2_hamiltonian):
    model = _model(4, 1, 1, seed=7)
    s = _exact_weight_set(model, h2_hamiltonian)
    traces = record_amplitudes(model, s.configs)
    locals_ = np.full(len(s.configs), 0.75, dtype=np.complex128)
    grads = vna_gradient(traces, s, locals_, beta=0.0, baseline=0.75)
    assert max(np.abs(g).max() for g in grads.values()) == 0.0


def test_non_finite_weight_aborts(h2_hamiltonian):
    from qvmc.nn import NonFiniteGradientError

    model = _model(4, 1, 1, seed=7)
    s = _exact_weight_set(model, h2_hamiltonian)
    traces = record_amplitudes(model, s.configs)
    locals_ = np.full(len(s.configs), np.inf, dtype=np.complex128)
    with pytest.raises(NonFiniteGradientError):
        vna_gradient(traces, s, locals_, beta=0.0, baseline=0.0)


# ---------------------------------------------------------------------------
# baseline and best-energy rules


def test_baseline_refresh_schedule():
    assert baseline_refresh_due(0, 10, 1000)
    assert not baseline_refresh_due(5, 10, 1000)
    assert baseline_refresh_due(10, 10, 1000)
    # every step inside the final 10%
    assert all(baseline_refresh_due(t, 10, 1000) for t in range(900, 1000))
    assert all(baseline_refresh_due(t, 1, 1000) for t in range(50))


def test_best_energy_rule():
    best = EnergyEstimate(mean=-1.0, variance=0.0, n_eff=100)
    sharp_better = EnergyEstimate(mean=-1.2, variance=0.0, n_eff=100)
    assert best_energy_update(best, sharp_better) is sharp_better
    noisy_better = EnergyEstimate(mean=-1.2, variance=100.0, n_eff=100)
    assert best_energy_update(best, noisy_better) is best
    tie = EnergyEstimate(mean=-1.2, variance=0.0, n_eff=10)
    assert best_energy_update(sharp_better, tie) is sharp_better


def test_best_energy_monotone_under_noise(rng):
    best = None
    history = []
    for _ in range(300):
        est = EnergyEstimate(mean=-1.0 + rng.standard_normal() * 0.05,
                             variance=0.0025, n_eff=100)
        best = best_energy_update(best, est)
        history.append(best.mean)
    assert all(a >= b for a, b in zip(history, history[1:]))


# ---------------------------------------------------------------------------
# training loop


def _train_config(steps, **kw):
    defaults = dict(
        schedule=ScheduleConfig(total_steps=steps),
        samples=SampleScheduleConfig(n_start=500, n_end=5000, unique_cap=8000,
                                     prune_singletons=True),
        seed=0,
    )
    defaults.update(kw)
    return TrainConfig(**defaults)


def test_identity_hamiltonian_trains_flat():
    h = QubitHamiltonian.from_terms([PauliTerm(0.75, "IIII")], 4, 2, ms2=0)
    cfg = _train_config(8, vna=False, baseline_interval=1)
    result = train(h, AnsatzConfig(d_model=8, d_retn=8, d_ff=16, phase_hidden=(8, 8)), cfg)
    energies = [r["energy"] for r in result.records]
    assert energies == pytest.approx([0.75] * 8)
    # centered weights vanish (up to float epsilon in the weighted mean),
    # so parameters stay put apart from Adam-amplified round-off
    fresh = build_ansatz(AnsatzConfig(d_model=8, d_retn=8, d_ff=16, phase_hidden=(8, 8)),
                         4, 1, 1, seed=0)
    for name, arr in result.model.store.params.items():
        assert np.abs(arr - fresh.store.params[name]).max() < 1e-9


def test_training_is_deterministic(h2_hamiltonian):
    cfg = AnsatzConfig(d_model=8, d_retn=8, d_ff=16, phase_hidden=(8, 8))
    runs = []
    for _ in range(2):
        result = train(h2_hamiltonian, cfg, _train_config(25))
        runs.append(result)
    assert [r["energy"] for r in runs[0].records] == [r["energy"] for r in runs[1].records]
    for name in runs[0].model.store.params:
        assert np.array_equal(
            runs[0].model.store.params[name], runs[1].model.store.params[name]
        )


def test_worker_count_does_not_change_results(h2_hamiltonian):
    cfg = AnsatzConfig(d_model=8, d_retn=8, d_ff=16, phase_hidden=(8, 8))
    serial = train(h2_hamiltonian, cfg, _train_config(10, workers=1))
    threaded = train(h2_hamiltonian, cfg, _train_config(10, workers=4))
    assert [r["energy"] for r in serial.records] == [
        r["energy"] for r in threaded.records
    ]


def test_log_record_schema(h2_hamiltonian):
    cfg = AnsatzConfig(d_model=8, d_retn=8, d_ff=16, phase_hidden=(8, 8))
    result = train(h2_hamiltonian, cfg, _train_config(3))
    expected_keys = {"step", "energy", "variance", "n_unique", "total_draws",
                     "beta", "lr", "best_energy", "wall_ms"}
    for record in result.records:
        assert set(record) == expected_keys


def test_best_energy_never_below_variational_floor(h2_hamiltonian):
    e0, _ = ground_state(h2_hamiltonian, sector=(1, 1))
    cfg = AnsatzConfig(d_model=8, d_retn=8, d_ff=16, phase_hidden=(8, 8))
    result = train(h2_hamiltonian, cfg, _train_config(120))
    floor = e0 - 3.0 * result.best.standard_error() - 1e-9
    assert result.best.mean >= floor


def test_zero_variance_at_ground_state(h2_hamiltonian):
    energy, state = ground_state(h2_hamiltonian, sector=(1, 1))
    sector = encoding.enumerate_sector(4, 1, 1)
    amp = state.amp_fn()
    _, _, support = amp(sector)
    # the open-shell configs carry no ground-state weight (symmetry), so
    # only supported configurations enter the local-energy identity
    supported = sector[support]
    assert len(supported) >= 2
    locals_ = local_energies(h2_hamiltonian, supported, amp)
    spread = np.real(locals_).max() - np.real(locals_).min()
    assert spread <= 1e-9
    assert np.real(locals_).mean() == pytest.approx(energy, abs=1e-9)


def test_estimator_consistency_with_draw_count(lih_hamiltonian):
    model = _model(12, 2, 2, seed=31)
    from qvmc.sampler import sample

    exact = exact_expectation(lih_hamiltonian, model.amplitude_fn())
    errors = []
    for draws in (10 ** 3, 10 ** 6):
        s = sample(model, draws, seed=77)
        locals_ = local_energies(lih_hamiltonian, s.configs, model.amplitude_fn())
        est = energy_estimate(s, locals_)
        errors.append(abs(est.mean - exact))
    # ~1/sqrt(N): three orders of magnitude in draws buys ~sqrt(1000) ~ 30x
    assert errors[1] < errors[0] / 5.0
