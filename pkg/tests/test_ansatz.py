"""Architecture-level contracts: normalization, support, duality, causality."""

import numpy as np
import pytest

from qvmc import encoding
from qvmc.ansatz import (
    AnsatzConfig,
    build_ansatz,
    load_checkpoint,
    save_checkpoint,
)
from qvmc.nn import Tape
from qvmc.oracle import fd_gradient

KINDS = ("retnet", "transformer", "made")


def tiny_config(kind, **kw):
    defaults = dict(kind=kind, n_block=1, d_model=8, d_retn=8, d_ff=16,
                    n_heads=2, phase_hidden=(8, 8))
    defaults.update(kw)
    return AnsatzConfig(**defaults)


@pytest.mark.parametrize("kind", KINDS)
def test_conditionals_are_probability_rows(kind, rng):
    model = build_ansatz(tiny_config(kind), 8, 2, 1, seed=2)
    tokens = encoding.encode_configs(encoding.enumerate_sector(8, 2, 1))
    probs = model.conditionals(tokens).data
    assert (probs >= 0).all()
    assert np.abs(probs.sum(axis=-1) - 1.0).max() < 1e-12


@pytest.mark.parametrize("kind", KINDS)
def test_exhausted_channel_has_zero_probability(kind):
    model = build_ansatz(tiny_config(kind), 8, 1, 1, seed=0)
    sector = encoding.enumerate_sector(8, 1, 1)
    tokens = encoding.encode_configs(sector)
    probs = model.conditionals(tokens).data
    up_used = np.cumsum(encoding.token_charges(tokens)[0], axis=1)
    for b in range(len(tokens)):
        for j in range(1, tokens.shape[1]):
            if up_used[b, j - 1] >= 1:  # all spin-up electrons placed
                assert probs[b, j, 2] == 0.0
                assert probs[b, j, 3] == 0.0


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("n_qubits,n_up,n_down", [(8, 2, 2), (12, 3, 2)])
def test_normalization_and_support(kind, n_qubits, n_up, n_down):
    model = build_ansatz(tiny_config(kind), n_qubits, n_up, n_down, seed=7)
    everything = encoding.ints_to_configs(
        np.arange(2 ** n_qubits, dtype=np.uint64), n_qubits
    )
    amp = model.log_amplitude(everything)
    sector = encoding.enumerate_sector(n_qubits, n_up, n_down)
    assert amp.support.sum() == len(sector)
    assert not np.isfinite(amp.log_modulus[~amp.support]).any()
    total = np.exp(2.0 * amp.log_modulus[amp.support]).sum()
    assert total == pytest.approx(1.0, abs=1e-10)


def test_retnet_parallel_recurrent_conditionals_agree(rng):
    for seed in range(3):
        model = build_ansatz(
            tiny_config("retnet", n_block=2, d_model=12, d_retn=12, n_heads=3,
                        d_ff=20),
            10, 2, 3, seed=seed,
        )
        sector = encoding.enumerate_sector(10, 2, 3)
        pick = sector[rng.integers(0, len(sector), size=12)]
        tokens = encoding.encode_configs(pick)
        par = model.conditionals(tokens).data
        rec = model.conditionals_recurrent(tokens)
        assert np.abs(par - rec).max() < 1e-10


@pytest.mark.parametrize("kind", KINDS)
def test_autoregressive_causality(kind):
    model = build_ansatz(tiny_config(kind), 12, 2, 2, seed=4)
    base = encoding.enumerate_sector(12, 2, 2)[17][None, :]
    tokens = encoding.encode_configs(base)
    probs = model.conditionals(tokens).data[0]
    L = tokens.shape[1]
    for j in range(L):
        mutated = tokens.copy()
        mutated[0, j] = (mutated[0, j] + 1) % 4
        out = model._trunk_logits(mutated, None).data[0]
        ref = model._trunk_logits(tokens, None).data[0]
        # logits at and before j are untouched; only later positions move
        assert np.abs(out[: j + 1] - ref[: j + 1]).max() < 1e-14


@pytest.mark.parametrize("kind", KINDS)
def test_log_amplitude_infeasible_sentinel(kind):
    model = build_ansatz(tiny_config(kind), 8, 2, 1, seed=1)
    bad = np.zeros((1, 8), dtype=np.uint8)  # zero electrons, wrong sector
    amp = model.log_amplitude(bad)
    assert not amp.support[0]
    assert amp.log_modulus[0] == -np.inf
    assert amp.phase[0] == 0.0


def test_uniform_conditionals_at_zero_parameters():
    # half-filled two-orbital system: the first position admits all four
    # tokens, so zeroed parameters make its conditional exactly uniform and
    # the second position is fully determined; one free 1/4 factor remains
    model = build_ansatz(tiny_config("retnet"), 4, 1, 1, seed=0)
    for name in model.store.params:
        model.store.params[name][:] = 0.0
    config = np.array([[1, 1, 0, 0]], dtype=np.uint8)
    probs = model.conditionals(encoding.encode_configs(config)).data[0]
    assert probs[0] == pytest.approx([0.25, 0.25, 0.25, 0.25])
    amp = model.log_amplitude(config)
    assert amp.log_modulus[0] == pytest.approx(0.5 * np.log(0.25))
    assert amp.phase[0] == 0.0


@pytest.mark.parametrize("kind", KINDS)
def test_phase_range_and_zero_weights(kind, rng):
    model = build_ansatz(tiny_config(kind), 8, 2, 2, seed=9)
    configs = (rng.random((40, 8)) > 0.5).astype(np.uint8)
    phases = model.phase(configs).data
    assert (np.abs(phases) < np.pi).all()
    for name in model.store.params:
        if name.startswith("phase"):
            model.store.params[name][:] = 0.0
    assert (model.phase(configs).data == 0.0).all()


def test_trunk_parameter_count_formula():
    for n_block, d_model, d_retn, d_ff, heads in [
        (1, 16, 16, 64, 2), (2, 8, 8, 32, 2), (3, 12, 24, 48, 4)
    ]:
        cfg = tiny_config("retnet", n_block=n_block, d_model=d_model,
                          d_retn=d_retn, d_ff=d_ff, n_heads=heads)
        model = build_ansatz(cfg, 8, 1, 1, seed=0)
        expected = 2 * n_block * d_model * (2.5 * d_retn + d_ff)
        assert model.trunk_parameter_count() == expected


@pytest.mark.parametrize("kind", KINDS)
def test_modulus_gradients_match_finite_differences(kind, rng):
    model = build_ansatz(tiny_config(kind, d_ff=12, phase_hidden=(6, 6)),
                         6, 2, 1, seed=3)
    sector = encoding.enumerate_sector(6, 2, 1)
    tokens = encoding.encode_configs(sector[:4])
    weights = rng.standard_normal(4)

    tape = Tape()
    grads = tape.gradient(model.log_modulus(tokens, tape), weights)

    def scalar():
        return float(model.log_modulus(tokens).data @ weights)

    worst = 0.0
    for name, arr in model.store.params.items():
        fd = fd_gradient(lambda _: scalar(), arr)
        scale = max(np.abs(fd).max(), 1e-8)
        worst = max(worst, np.abs(fd - grads[name]).max() / scale)
    assert worst < 1e-4


def test_phase_gradients_match_finite_differences(rng):
    model = build_ansatz(tiny_config("retnet", phase_hidden=(6, 6)), 6, 1, 1, seed=5)
    configs = encoding.enumerate_sector(6, 1, 1)[:5]
    weights = rng.standard_normal(5)
    tape = Tape()
    grads = tape.gradient(model.phase(configs, tape), weights)

    def scalar():
        return float(model.phase(configs).data @ weights)

    for name in [n for n in model.store.params if n.startswith("phase")]:
        fd = fd_gradient(lambda _: scalar(), model.store.params[name])
        scale = max(np.abs(fd).max(), 1e-8)
        assert np.abs(fd - grads[name]).max() / scale < 1e-4


def test_infeasible_tokens_rejected_from_modulus_pass():
    model = build_ansatz(tiny_config("retnet"), 8, 1, 1, seed=0)
    bad = encoding.encode_configs(np.ones((1, 8), dtype=np.uint8))  # 4+4 electrons
    with pytest.raises(ValueError):
        model.log_modulus(bad)


def test_checkpoint_round_trip(tmp_path):
    model = build_ansatz(tiny_config("retnet"), 8, 2, 2, seed=12)
    path = tmp_path / "model.json"
    save_checkpoint(model, str(path))
    loaded = load_checkpoint(str(path))
    assert loaded.cfg == model.cfg
    assert loaded.n_qubits == model.n_qubits
    for name, arr in model.store.params.items():
        assert np.array_equal(loaded.store.params[name], arr)
    configs = encoding.enumerate_sector(8, 2, 2)[:6]
    before = model.log_amplitude(configs)
    after = loaded.log_amplitude(configs)
    assert np.array_equal(before.log_modulus, after.log_modulus)
    assert np.array_equal(before.phase, after.phase)


def test_checkpoint_validates_shapes(tmp_path):
    import json

    model = build_ansatz(tiny_config("made"), 8, 2, 2, seed=1)
    path = tmp_path / "model.json"
    save_checkpoint(model, str(path))
    payload = json.loads(path.read_text())
    payload["params"]["made.b1"]["shape"] = [3]
    payload["params"]["made.b1"]["data"] = [0.0, 0.0, 0.0]
    path.write_text(json.dumps(payload))
    with pytest.raises(ValueError):
        load_checkpoint(str(path))


def test_config_validation():
    with pytest.raises(ValueError):
        AnsatzConfig(kind="rnn")
    with pytest.raises(ValueError):
        AnsatzConfig(n_heads=3, d_retn=16)
    with pytest.raises(ValueError):
        build_ansatz(tiny_config("retnet"), 7, 1, 1)
    with pytest.raises(ValueError):
        build_ansatz(tiny_config("retnet"), 8, 5, 1)
