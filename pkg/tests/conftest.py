import numpy as np
import pytest

from qvmc import fixture_path, parse_fcidump, second_quantize_jw


@pytest.fixture(scope="session")
def h2_hamiltonian():
    return second_quantize_jw(parse_fcidump(fixture_path("h2.fcidump")))


@pytest.fixture(scope="session")
def lih_hamiltonian():
    return second_quantize_jw(parse_fcidump(fixture_path("lih.fcidump")))


@pytest.fixture(scope="session")
def lih3_hamiltonian():
    return second_quantize_jw(parse_fcidump(fixture_path("lih_trunc3.fcidump")))


@pytest.fixture(scope="session")
def h2o_hamiltonian():
    return second_quantize_jw(parse_fcidump(fixture_path("h2o.fcidump")))


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
