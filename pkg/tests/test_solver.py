"""Estimator-API behavior of the sklearn-style front end."""

import numpy as np
import pytest
from sklearn.base import clone

from qvmc import fixture_path
from qvmc.solver import GroundStateSolver, as_qubit_hamiltonian


def _fast_solver(**kw):
    defaults = dict(
        d_model=8, d_retn=8, d_ff=16, phase_hidden=(8, 8),
        total_steps=40, n_start=200, n_end=2000, seed=1,
    )
    defaults.update(kw)
    return GroundStateSolver(**defaults)


def test_get_set_params_round_trip():
    solver = _fast_solver()
    params = solver.get_params()
    assert params["ansatz"] == "retnet"
    assert params["total_steps"] == 40
    solver.set_params(total_steps=77, ansatz="made")
    assert solver.total_steps == 77
    assert solver.ansatz == "made"


def test_clone_preserves_configuration():
    solver = _fast_solver(vna=False, seed=9)
    copy = clone(solver)
    assert copy.get_params() == solver.get_params()


def test_fit_exposes_learned_state(h2_hamiltonian):
    solver = _fast_solver().fit(h2_hamiltonian)
    assert hasattr(solver, "best_energy_")
    assert solver.best_energy_ < 0.0
    assert solver.n_parameters_ == solver.model_.store.n_parameters()
    assert len(solver.history_) == 40
    assert solver.score() == -solver.best_energy_


def test_fit_accepts_paths(tmp_path):
    solver = _fast_solver(total_steps=10).fit(fixture_path("h2.fcidump"))
    assert solver.hamiltonian_.n_qubits == 4
    from qvmc.hamiltonian import save_pauli_text

    pauli = tmp_path / "h2.pauli"
    save_pauli_text(solver.hamiltonian_, str(pauli))
    again = _fast_solver(total_steps=10).fit(str(pauli))
    assert again.hamiltonian_.n_qubits == 4


def test_unfitted_access_raises():
    solver = _fast_solver()
    with pytest.raises(RuntimeError):
        solver.score()
    with pytest.raises(RuntimeError):
        solver.sample(100)


def test_sample_and_log_amplitude_after_fit(h2_hamiltonian):
    solver = _fast_solver(total_steps=15).fit(h2_hamiltonian)
    draws = solver.sample(5000, seed=3)
    assert draws.total_draws == 5000
    amp = solver.log_amplitude(draws.configs)
    assert amp.support.all()
    assert np.isfinite(amp.log_modulus).all()


def test_input_validation():
    with pytest.raises(TypeError):
        as_qubit_hamiltonian(42)
    with pytest.raises(FileNotFoundError):
        as_qubit_hamiltonian("missing_file.fcidump")


def test_fit_is_seed_reproducible(h2_hamiltonian):
    a = _fast_solver(seed=5).fit(h2_hamiltonian)
    b = _fast_solver(seed=5).fit(h2_hamiltonian)
    assert a.best_energy_ == b.best_energy_
    assert [r["energy"] for r in a.history_] == [r["energy"] for r in b.history_]
