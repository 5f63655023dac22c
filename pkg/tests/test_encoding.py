"""Spin-string <-> orbital-token conversions and feasibility masks."""

import numpy as np
import pytest

from qvmc import encoding


def test_all_zeros_maps_to_zero_tokens():
    tokens = encoding.encode_configs(np.zeros((1, 4), dtype=np.uint8))
    assert np.array_equal(tokens, [[0, 0]])


def test_known_vector_and_round_trip():
    # qubits (q0..q3) = 1010: orbital 0 holds an up electron, orbital 1 too;
    # tokens are 2*up + down, listed in reverse orbital order
    config = np.array([[1, 0, 1, 0]], dtype=np.uint8)
    tokens = encoding.encode_configs(config)
    assert np.array_equal(tokens, [[2, 2]])
    assert np.array_equal(encoding.decode_tokens(tokens), config)


def test_round_trip_property(rng):
    configs = (rng.random((1000, 14)) > 0.5).astype(np.uint8)
    back = encoding.decode_tokens(encoding.encode_configs(configs))
    assert np.array_equal(back, configs)


def test_odd_qubit_count_rejected():
    with pytest.raises(ValueError):
        encoding.encode_configs(np.zeros((1, 5), dtype=np.uint8))


def test_ints_round_trip(rng):
    configs = (rng.random((200, 12)) > 0.5).astype(np.uint8)
    ints = encoding.configs_to_ints(configs)
    assert np.array_equal(encoding.ints_to_configs(ints, 12), configs)


def test_int_packing_is_big_endian_in_qubit_order():
    config = np.array([[1, 0, 0, 0]], dtype=np.uint8)  # qubit 0 set
    assert encoding.configs_to_ints(config)[0] == 8


def test_sector_enumeration_counts():
    sector = encoding.enumerate_sector(8, 2, 1)
    assert len(sector) == 6 * 4  # C(4,2) * C(4,1)
    ups, downs = encoding.sector_counts(sector)
    assert (ups == 2).all() and (downs == 1).all()
    ints = encoding.configs_to_ints(sector)
    assert (np.diff(ints.astype(np.int64)) > 0).all()


def test_feasible_token_mask_blocks_overfull_channel():
    # one up electron already placed of a single allowed: up tokens blocked
    mask = encoding.feasible_token_mask(
        np.array([1]), np.array([0]), np.array([3]), n_up=1, n_down=1
    )[0]
    assert not mask[2] and not mask[3]
    assert mask[0] and mask[1]


def test_feasible_token_mask_forces_filling_when_tight():
    # 2 orbitals left, 2 ups and 2 downs still to place: only token 3 fits
    mask = encoding.feasible_token_mask(
        np.array([0]), np.array([0]), np.array([1]), n_up=2, n_down=2
    )[0]
    assert np.array_equal(mask, [False, False, False, True])
