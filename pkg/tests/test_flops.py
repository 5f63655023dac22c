"""Cost-model formulas against independently coded references."""

import pytest

from qvmc.flops import ModelDims, crossover_seq_len, flops_per_token, param_count


def test_reference_dims():
    dims = ModelDims(n_block=1, d_model=16, d_retn=16, d_ff=64, n_seq=7)
    assert param_count(dims) == 3328
    assert flops_per_token(dims, "retnet_parallel") == 7104
    assert flops_per_token(dims, "retnet_recurrent") == 7936
    assert crossover_seq_len(dims) == 28.0


def test_param_count_linear_in_blocks():
    one = param_count(ModelDims(1, 16, 16, 64))
    two = param_count(ModelDims(2, 16, 16, 64))
    assert two == 2 * one


def test_degenerate_dims():
    assert param_count(ModelDims(1, 16, 0, 0)) == 0


def test_recurrent_count_ignores_sequence_length():
    a = flops_per_token(ModelDims(2, 8, 16, 32, n_seq=1), "retnet_recurrent")
    b = flops_per_token(ModelDims(2, 8, 16, 32, n_seq=999), "retnet_recurrent")
    assert a == b


def test_parallel_count_strictly_increasing_in_sequence_length():
    values = [
        flops_per_token(ModelDims(1, 8, 8, 16, n_seq=n), "retnet_parallel")
        for n in range(1, 10)
    ]
    assert all(b > a for a, b in zip(values, values[1:]))


def test_grid_against_independent_formulas(rng):
    # independently coded layer-by-layer counts
    for _ in range(100):
        nb = int(rng.integers(1, 5))
        dm = int(rng.integers(1, 65))
        dr = int(rng.integers(1, 65))
        ff = int(rng.integers(1, 129))
        ns = int(rng.integers(1, 33))
        dims = ModelDims(nb, dm, dr, ff, ns)

        qkv = 3 * nb * dm * dr
        proj = 2 * nb * dm * dr
        ffw = 2 * nb * dm * ff
        n_ref = qkv + proj + ffw
        assert param_count(dims) == n_ref
        assert flops_per_token(dims, "retnet_parallel") == 2 * n_ref + 4 * nb * ns * dr
        assert flops_per_token(dims, "retnet_recurrent") == 2 * n_ref + 5 * nb * dr * dr
        transformer_ref = 2 * (qkv + nb * dm * dr + ffw) + 4 * nb * ns * dr
        assert flops_per_token(dims, "transformer") == transformer_ref


def test_parallel_minus_transformer_gap(rng):
    for _ in range(50):
        dims = ModelDims(
            int(rng.integers(1, 4)), int(rng.integers(1, 64)),
            int(rng.integers(1, 64)), int(rng.integers(1, 128)),
            int(rng.integers(1, 32)),
        )
        gap = flops_per_token(dims, "retnet_parallel") - flops_per_token(dims, "transformer")
        assert gap == 2 * dims.n_block * dims.d_model * dims.d_retn


def test_crossover_is_consistent_with_counts(rng):
    for _ in range(200):
        dims = ModelDims(
            int(rng.integers(1, 4)), int(rng.integers(1, 48)),
            int(rng.integers(1, 48)), int(rng.integers(1, 96)),
            int(rng.integers(1, 128)),
        )
        recurrent = flops_per_token(dims, "retnet_recurrent")
        transformer = flops_per_token(dims, "transformer")
        if dims.n_seq > crossover_seq_len(dims):
            assert recurrent < transformer
        elif dims.n_seq < crossover_seq_len(dims):
            assert recurrent >= transformer


def test_crossover_matched_widths():
    for dm in (4, 8, 16, 32, 64):
        dims = ModelDims(1, dm, dm, 4 * dm)
        assert crossover_seq_len(dims) == 1.75 * dm


def test_unknown_form_rejected():
    with pytest.raises(ValueError):
        flops_per_token(ModelDims(1, 8, 8, 8), "rnn")
