"""Autoregressive wavefunction models.

Each model maps a spin configuration to a complex log-amplitude

    log(amp) = 0.5 * sum_j log p(token_j | tokens_<j)  +  i * phase(x),

where the conditionals come from a modulus network over orbital tokens
(sampled in reverse orbital order, behind a prepended start token) and the
phase from a small feedforward network on the raw spin string.  Electron
feasibility masks sit inside every softmax, so only configurations with the
target per-channel electron counts carry probability; everything else maps
to an exact-zero amplitude sentinel.

Three interchangeable modulus architectures are provided: a retentive
network (parallel form for gradient passes, recurrent form for sampling and
amplitude queries), a decoder-style transformer, and a masked feedforward
density estimator.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from qvmc import encoding
from qvmc.ansatz.config import START_TOKEN, VOCAB, AnsatzConfig
from qvmc.ansatz.retention import (
    RetentionState,
    decay_mask,
    decay_rates,
    parallel_retention,
    recurrent_retention_step,
    rotate,
    rotation_tables,
)
from qvmc.nn import ParameterStore, Tape
from qvmc.nn import tensor as tt

__all__ = [
    "Ansatz",
    "LogAmplitudeBatch",
    "MadeAnsatz",
    "RetNetAnsatz",
    "TransformerAnsatz",
    "build_ansatz",
    "load_checkpoint",
    "save_checkpoint",
]

CHECKPOINT_FORMAT = "qvmc-checkpoint-1"


@dataclass
class LogAmplitudeBatch:
    """Complex log-amplitudes with an explicit support flag.

    ``log_modulus`` is -inf where ``support`` is False; those entries are a
    sentinel for exactly-zero amplitude and must never enter arithmetic.
    """

    log_modulus: np.ndarray
    phase: np.ndarray
    support: np.ndarray

    def __len__(self) -> int:
        return len(self.log_modulus)


def _xavier(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


class Ansatz:
    """Shared machinery: embeddings, output head, phase network, masks."""

    def __init__(self, cfg: AnsatzConfig, n_qubits: int, n_up: int, n_down: int, seed: int = 0):
        if n_qubits % 2:
            raise ValueError("qubit count must be even (orbital pairing)")
        self.cfg = cfg
        self.n_qubits = n_qubits
        self.n_orbitals = n_qubits // 2
        if not (0 <= n_up <= self.n_orbitals and 0 <= n_down <= self.n_orbitals):
            raise ValueError("electron counts exceed orbital capacity")
        self.n_up = n_up
        self.n_down = n_down
        self.store = ParameterStore()
        self._rng = np.random.default_rng(seed)
        self._register_parameters()

    # -- parameter setup ----------------------------------------------------

    def _register_parameters(self):
        raise NotImplementedError

    def _register_phase(self):
        h1, h2 = self.cfg.phase_hidden
        rng = self._rng
        self.store.register("phase.w0", _xavier(rng, self.n_qubits, h1))
        self.store.register("phase.b0", np.zeros(h1))
        self.store.register("phase.w1", _xavier(rng, h1, h2))
        self.store.register("phase.b1", np.zeros(h2))
        self.store.register("phase.w2", _xavier(rng, h2, 1))
        self.store.register("phase.b2", np.zeros(1))

    def _params(self, tape: Tape | None):
        if tape is None:
            return {name: tt.Tensor(arr) for name, arr in self.store.params.items()}
        return {name: tape.watch(name, arr) for name, arr in self.store.params.items()}

    # -- feasibility --------------------------------------------------------

    def sequence_masks(self, tokens: np.ndarray) -> np.ndarray:
        """Teacher-forced feasibility masks (B, L, 4) along a token batch."""
        up, down = encoding.token_charges(tokens)
        used_up = np.concatenate(
            [np.zeros((len(tokens), 1), dtype=np.int64), np.cumsum(up, axis=1)[:, :-1]], axis=1
        )
        used_down = np.concatenate(
            [np.zeros((len(tokens), 1), dtype=np.int64), np.cumsum(down, axis=1)[:, :-1]], axis=1
        )
        remaining = (self.n_orbitals - 1 - np.arange(self.n_orbitals))[None, :]
        return encoding.feasible_token_mask(
            used_up, used_down, remaining, self.n_up, self.n_down
        )

    def support(self, configs: np.ndarray) -> np.ndarray:
        ups, downs = encoding.sector_counts(configs)
        return (ups == self.n_up) & (downs == self.n_down)

    # -- modulus network ----------------------------------------------------

    def conditionals(self, tokens: np.ndarray, tape: Tape | None = None):
        """Masked next-token distributions (B, L, 4) for full sequences."""
        tokens = np.atleast_2d(np.asarray(tokens, dtype=np.int64))
        logits = self._trunk_logits(tokens, tape)
        return tt.masked_softmax(logits, self.sequence_masks(tokens))

    def _trunk_logits(self, tokens: np.ndarray, tape: Tape | None):
        raise NotImplementedError

    def log_modulus(self, tokens: np.ndarray, tape: Tape | None = None):
        """Half the summed log-conditionals, as a taped tensor (B,)."""
        tokens = np.atleast_2d(np.asarray(tokens, dtype=np.int64))
        probs = self.conditionals(tokens, tape)
        picked = tt.take_along_last(probs, tokens)
        if not (picked.data > 0.0).all():
            raise ValueError(
                "a selected conditional is exactly zero; only feasible "
                "configurations may enter a modulus pass"
            )
        return tt.scale(tt.sum_axis(tt.log(picked), 1), 0.5)

    # -- phase network ------------------------------------------------------

    def phase(self, configs: np.ndarray, tape: Tape | None = None):
        """Phase in (-pi, pi) from the raw spin string, as a taped tensor (B,)."""
        configs = np.atleast_2d(np.asarray(configs))
        p = self._params(tape)
        spins = 2.0 * configs.astype(np.float64) - 1.0
        h = tt.tanh(tt.add(tt.matmul(tt.Tensor(spins), p["phase.w0"]), p["phase.b0"]))
        h = tt.tanh(tt.add(tt.matmul(h, p["phase.w1"]), p["phase.b1"]))
        out = tt.add(tt.matmul(h, p["phase.w2"]), p["phase.b2"])
        return tt.scale(tt.tanh(tt.reshape(out, (len(configs),))), np.pi)

    # -- public amplitude interface ------------------------------------------

    def log_amplitude(self, configs: np.ndarray) -> LogAmplitudeBatch:
        """Batched complex log-amplitudes; infeasible rows get the zero sentinel."""
        configs = np.atleast_2d(np.asarray(configs))
        support = self.support(configs)
        logmod = np.full(len(configs), -np.inf)
        phase = np.zeros(len(configs))
        if support.any():
            feasible = configs[support]
            tokens = encoding.encode_configs(feasible)
            logmod[support] = self._log_modulus_inference(tokens)
            phase[support] = self.phase(feasible).data
        return LogAmplitudeBatch(logmod, phase, support)

    def amplitude_fn(self):
        """Adapt to the (configs) -> (log_modulus, phase, support) callable form."""
        def amp(configs: np.ndarray):
            batch = self.log_amplitude(configs)
            return batch.log_modulus, batch.phase, batch.support
        return amp

    def _log_modulus_inference(self, tokens: np.ndarray) -> np.ndarray:
        """Inference-mode log-modulus; overridden where a cheaper path exists."""
        return self.log_modulus(tokens).data

    # -- sampling interface ---------------------------------------------------

    def sampling_stepper(self):
        """Return an object with ``begin``, ``step`` and ``select`` for the
        breadth-first sampler.  Default recomputes prefixes in parallel mode."""
        return _PrefixStepper(self)

    def trunk_parameter_count(self) -> int:
        """Parameters inside the stacked blocks (embedding/head/phase excluded)."""
        return sum(
            arr.size for name, arr in self.store.params.items() if name.startswith("block")
        )


class _PrefixStepper:
    """Stateless stepper: re-runs the full parallel pass on each prefix.

    The trunk is causal, so logits at the current position ignore the
    padding tokens behind it; the caller's feasibility mask applies only to
    that position (the padded tail positions have no meaningful masks).
    """

    def __init__(self, model: Ansatz):
        self.model = model

    def begin(self, batch: int):
        return np.zeros((batch, 0), dtype=np.int64)

    def step(self, prefixes, position: int, allowed: np.ndarray) -> tuple[np.ndarray, object]:
        padded = np.zeros((len(prefixes), self.model.n_orbitals), dtype=np.int64)
        padded[:, :position] = prefixes
        logits = self.model._trunk_logits(padded, None).data[:, position, :]
        probs = tt.masked_softmax(tt.Tensor(logits), allowed).data
        return probs, prefixes

    def extend(self, prefixes, tokens: np.ndarray):
        return np.concatenate([prefixes, tokens[:, None]], axis=1)

    def select(self, prefixes, idx: np.ndarray):
        return prefixes[idx]


# ---------------------------------------------------------------------------
# RetNet


class RetNetAnsatz(Ansatz):
    """Retention-based modulus network with exact parallel/recurrent duality."""

    def _register_parameters(self):
        cfg, rng = self.cfg, self._rng
        L = self.n_orbitals
        self.store.register("embed", _xavier(rng, VOCAB + 1, cfg.d_model))
        self.store.register("pos", np.zeros((L, cfg.d_model)))
        for b in range(cfg.n_block):
            self.store.register(f"block{b}.wq", _xavier(rng, cfg.d_model, cfg.d_retn))
            self.store.register(f"block{b}.wk", _xavier(rng, cfg.d_model, cfg.d_retn))
            self.store.register(f"block{b}.wv", _xavier(rng, cfg.d_model, cfg.d_retn))
            self.store.register(f"block{b}.wg", _xavier(rng, cfg.d_model, cfg.d_retn))
            self.store.register(f"block{b}.wo", _xavier(rng, cfg.d_retn, cfg.d_model))
            self.store.register(f"block{b}.ff1", _xavier(rng, cfg.d_model, cfg.d_ff))
            self.store.register(f"block{b}.ff2", _xavier(rng, cfg.d_ff, cfg.d_model))
        self.store.register("head.w", _xavier(rng, cfg.d_model, VOCAB))
        self.store.register("head.b", np.zeros(VOCAB))
        self._register_phase()
        self.gammas = decay_rates(cfg.n_heads)
        self.d_masks = decay_mask(self.gammas, L)
        self.rot_cos, self.rot_sin = rotation_tables(L, cfg.head_dim)

    def _split_heads(self, x):
        cfg = self.cfg
        b, l = x.shape[0], x.shape[1]
        return tt.moveaxis(tt.reshape(x, (b, l, cfg.n_heads, cfg.head_dim)), 2, 1)

    def _trunk_logits(self, tokens: np.ndarray, tape: Tape | None):
        cfg = self.cfg
        p = self._params(tape)
        b, L = tokens.shape
        ids = np.concatenate(
            [np.full((b, 1), START_TOKEN, dtype=np.int64), tokens[:, :-1]], axis=1
        )
        x = tt.add(tt.take_rows(p["embed"], ids), tt.take_rows(p["pos"], np.arange(L)))
        for blk in range(cfg.n_block):
            h = tt.layer_norm(x)
            q = rotate(self._split_heads(tt.matmul(h, p[f"block{blk}.wq"])),
                       self.rot_cos, self.rot_sin)
            k = rotate(self._split_heads(tt.matmul(h, p[f"block{blk}.wk"])),
                       self.rot_cos, self.rot_sin)
            v = self._split_heads(tt.matmul(h, p[f"block{blk}.wv"]))
            ret = parallel_retention(q, k, v, self.d_masks)
            merged = tt.reshape(tt.moveaxis(ret, 1, 2), (b, L, cfg.d_retn))
            gated = tt.mul(tt.swish(tt.matmul(h, p[f"block{blk}.wg"])),
                           tt.group_norm(merged, cfg.n_heads))
            x = tt.add(x, tt.matmul(gated, p[f"block{blk}.wo"]))
            h2 = tt.layer_norm(x)
            ff = tt.matmul(tt.swish(tt.matmul(h2, p[f"block{blk}.ff1"])), p[f"block{blk}.ff2"])
            x = tt.add(x, ff)
        x = tt.layer_norm(x)
        return tt.add(tt.matmul(x, p["head.w"]), p["head.b"])

    # -- recurrent form -------------------------------------------------------

    def initial_state(self, batch: int) -> RetentionState:
        cfg = self.cfg
        return RetentionState.zeros(batch, cfg.n_block, cfg.n_heads, cfg.head_dim, cfg.head_dim)

    def recurrent_step(
        self, prev_tokens: np.ndarray, state: RetentionState
    ) -> tuple[np.ndarray, RetentionState]:
        """Advance one position; returns (logits (B, 4), new state).

        ``prev_tokens`` feeds the trunk at position ``state.position``; pass
        the start token at position 0.  Masks are not applied here: the
        caller owns prefix bookkeeping during sampling.
        """
        cfg = self.cfg
        t = state.position
        if t >= self.n_orbitals:
            raise ValueError("recurrent pass ran past the end of the sequence")
        params = self.store.params
        x = params["embed"][np.asarray(prev_tokens, dtype=np.int64)] + params["pos"][t]
        cos = self.rot_cos[t]
        sin = self.rot_sin[t]
        new_blocks = []
        for blk in range(cfg.n_block):
            h = tt.layer_norm(tt.Tensor(x)).data
            q = self._heads_np(h @ params[f"block{blk}.wq"])
            k = self._heads_np(h @ params[f"block{blk}.wk"])
            v = self._heads_np(h @ params[f"block{blk}.wv"])
            q = rotate(tt.Tensor(q), cos, sin).data
            k = rotate(tt.Tensor(k), cos, sin).data
            out, new_s = recurrent_retention_step(q, k, v, state.blocks[blk], self.gammas)
            new_blocks.append(new_s)
            merged = out.reshape(len(x), cfg.d_retn)
            gn = tt.group_norm(tt.Tensor(merged), cfg.n_heads).data
            gate = tt.swish(tt.Tensor(h @ params[f"block{blk}.wg"])).data
            x = x + (gate * gn) @ params[f"block{blk}.wo"]
            h2 = tt.layer_norm(tt.Tensor(x)).data
            x = x + tt.swish(tt.Tensor(h2 @ params[f"block{blk}.ff1"])).data @ params[f"block{blk}.ff2"]
        x = tt.layer_norm(tt.Tensor(x)).data
        logits = x @ params["head.w"] + params["head.b"]
        return logits, RetentionState(new_blocks, t + 1)

    def _heads_np(self, x: np.ndarray) -> np.ndarray:
        return x.reshape(len(x), self.cfg.n_heads, self.cfg.head_dim)

    def conditionals_recurrent(self, tokens: np.ndarray) -> np.ndarray:
        """Full-sequence conditionals through the recurrence (inference only)."""
        tokens = np.atleast_2d(np.asarray(tokens, dtype=np.int64))
        b, L = tokens.shape
        masks = self.sequence_masks(tokens)
        state = self.initial_state(b)
        probs = np.zeros((b, L, VOCAB))
        prev = np.full(b, START_TOKEN, dtype=np.int64)
        for pos in range(L):
            logits, state = self.recurrent_step(prev, state)
            probs[:, pos, :] = tt.masked_softmax(tt.Tensor(logits), masks[:, pos, :]).data
            prev = tokens[:, pos]
        return probs

    def _log_modulus_inference(self, tokens: np.ndarray) -> np.ndarray:
        probs = self.conditionals_recurrent(tokens)
        picked = np.take_along_axis(probs, tokens[..., None], axis=-1)[..., 0]
        return 0.5 * np.log(picked).sum(axis=1)

    def sampling_stepper(self):
        return _RecurrentStepper(self)


class _RecurrentStepper:
    """Stateful stepper that copies and reuses retention states per prefix."""

    def __init__(self, model: RetNetAnsatz):
        self.model = model

    def begin(self, batch: int):
        return (np.full(batch, START_TOKEN, dtype=np.int64), self.model.initial_state(batch))

    def step(self, carry, position: int, allowed: np.ndarray):
        prev, state = carry
        logits, new_state = self.model.recurrent_step(prev, state)
        probs = tt.masked_softmax(tt.Tensor(logits), allowed).data
        return probs, (prev, new_state)

    def extend(self, carry, tokens: np.ndarray):
        _, state = carry
        return (tokens, state)

    def select(self, carry, idx: np.ndarray):
        prev, state = carry
        return (prev[idx], state.take(idx))


# ---------------------------------------------------------------------------
# Transformer


class TransformerAnsatz(Ansatz):
    """Decoder-style attention modulus network (prefix recompute, no cache)."""

    def _register_parameters(self):
        cfg, rng = self.cfg, self._rng
        L = self.n_orbitals
        self.store.register("embed", _xavier(rng, VOCAB + 1, cfg.d_model))
        self.store.register("pos", np.zeros((L, cfg.d_model)))
        for b in range(cfg.n_block):
            self.store.register(f"block{b}.wq", _xavier(rng, cfg.d_model, cfg.d_retn))
            self.store.register(f"block{b}.wk", _xavier(rng, cfg.d_model, cfg.d_retn))
            self.store.register(f"block{b}.wv", _xavier(rng, cfg.d_model, cfg.d_retn))
            self.store.register(f"block{b}.wo", _xavier(rng, cfg.d_retn, cfg.d_model))
            self.store.register(f"block{b}.ff1", _xavier(rng, cfg.d_model, cfg.d_ff))
            self.store.register(f"block{b}.ff2", _xavier(rng, cfg.d_ff, cfg.d_model))
        self.store.register("head.w", _xavier(rng, cfg.d_model, VOCAB))
        self.store.register("head.b", np.zeros(VOCAB))
        self._register_phase()
        self.causal = np.tril(np.ones((L, L), dtype=bool))

    def _trunk_logits(self, tokens: np.ndarray, tape: Tape | None):
        cfg = self.cfg
        p = self._params(tape)
        b, L = tokens.shape
        ids = np.concatenate(
            [np.full((b, 1), START_TOKEN, dtype=np.int64), tokens[:, :-1]], axis=1
        )
        x = tt.add(tt.take_rows(p["embed"], ids), tt.take_rows(p["pos"], np.arange(L)))
        head_dim = cfg.head_dim
        for blk in range(cfg.n_block):
            h = tt.layer_norm(x)
            q = self._split_heads(tt.matmul(h, p[f"block{blk}.wq"]))
            k = self._split_heads(tt.matmul(h, p[f"block{blk}.wk"]))
            v = self._split_heads(tt.matmul(h, p[f"block{blk}.wv"]))
            scores = tt.scale(tt.matmul(q, k, transpose_b=True), 1.0 / np.sqrt(head_dim))
            attn = tt.masked_softmax(scores, self.causal)
            ctx = tt.reshape(tt.moveaxis(tt.matmul(attn, v), 1, 2), (b, L, cfg.d_retn))
            x = tt.add(x, tt.matmul(ctx, p[f"block{blk}.wo"]))
            h2 = tt.layer_norm(x)
            ff = tt.matmul(tt.swish(tt.matmul(h2, p[f"block{blk}.ff1"])), p[f"block{blk}.ff2"])
            x = tt.add(x, ff)
        x = tt.layer_norm(x)
        return tt.add(tt.matmul(x, p["head.w"]), p["head.b"])

    def _split_heads(self, x):
        cfg = self.cfg
        b, l = x.shape[0], x.shape[1]
        return tt.moveaxis(tt.reshape(x, (b, l, cfg.n_heads, cfg.head_dim)), 2, 1)


# ---------------------------------------------------------------------------
# Masked feedforward (MADE)


class MadeAnsatz(Ansatz):
    """Feedforward density estimator made autoregressive by binary weight masks.

    Inputs are the two occupancy bits of every orbital token; masks ensure
    the 4-way logits for position j depend only on tokens before j.  Both
    hidden layers have width ``d_ff``.
    """

    def _register_parameters(self):
        cfg, rng = self.cfg, self._rng
        L = self.n_orbitals
        width = cfg.d_ff
        self.store.register("made.w1", _xavier(rng, 2 * L, width))
        self.store.register("made.b1", np.zeros(width))
        self.store.register("made.w2", _xavier(rng, width, width))
        self.store.register("made.b2", np.zeros(width))
        self.store.register("made.w3", _xavier(rng, width, VOCAB * L))
        self.store.register("made.b3", np.zeros(VOCAB * L))
        self._register_phase()

        in_degree = np.repeat(np.arange(1, L + 1), 2)
        if L > 1:
            hidden_degree = (np.arange(width) % (L - 1)) + 1
        else:
            hidden_degree = np.ones(width, dtype=np.int64)
        out_degree = np.repeat(np.arange(1, L + 1), VOCAB)
        self.mask1 = (hidden_degree[None, :] >= in_degree[:, None]).astype(np.float64)
        self.mask2 = (hidden_degree[None, :] >= hidden_degree[:, None]).astype(np.float64)
        self.mask3 = (out_degree[None, :] > hidden_degree[:, None]).astype(np.float64)

    def _trunk_logits(self, tokens: np.ndarray, tape: Tape | None):
        p = self._params(tape)
        b, L = tokens.shape
        up, down = encoding.token_charges(tokens)
        bits = np.zeros((b, 2 * L))
        bits[:, 0::2] = up
        bits[:, 1::2] = down
        spins = tt.Tensor(2.0 * bits - 1.0)
        h = tt.swish(tt.add(tt.matmul(spins, tt.mul(p["made.w1"], self.mask1)), p["made.b1"]))
        h = tt.swish(tt.add(tt.matmul(h, tt.mul(p["made.w2"], self.mask2)), p["made.b2"]))
        flat = tt.add(tt.matmul(h, tt.mul(p["made.w3"], self.mask3)), p["made.b3"])
        return tt.reshape(flat, (b, L, VOCAB))


_KIND_CLASSES = {
    "retnet": RetNetAnsatz,
    "transformer": TransformerAnsatz,
    "made": MadeAnsatz,
}


def build_ansatz(
    cfg: AnsatzConfig, n_qubits: int, n_up: int, n_down: int, seed: int = 0
) -> Ansatz:
    return _KIND_CLASSES[cfg.kind](cfg, n_qubits, n_up, n_down, seed)


# ---------------------------------------------------------------------------
# checkpoints


def save_checkpoint(model: Ansatz, path: str) -> None:
    """Self-describing JSON container: config, sector, named parameter arrays."""
    payload = {
        "format": CHECKPOINT_FORMAT,
        "ansatz": model.cfg.to_dict(),
        "n_qubits": model.n_qubits,
        "n_up": model.n_up,
        "n_down": model.n_down,
        "params": {
            name: {"shape": list(arr.shape), "data": arr.ravel().tolist()}
            for name, arr in model.store.params.items()
        },
    }
    with open(path, "w", encoding="ascii") as fh:
        json.dump(payload, fh)


def load_checkpoint(path: str) -> Ansatz:
    with open(path, "r", encoding="ascii") as fh:
        payload = json.load(fh)
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not a recognized checkpoint file")
    cfg = AnsatzConfig.from_dict(payload["ansatz"])
    model = build_ansatz(
        cfg, int(payload["n_qubits"]), int(payload["n_up"]), int(payload["n_down"])
    )
    saved = payload["params"]
    if set(saved) != set(model.store.params):
        raise ValueError(f"{path}: parameter names do not match the architecture")
    for name, entry in saved.items():
        arr = np.asarray(entry["data"], dtype=np.float64).reshape(entry["shape"])
        if arr.shape != model.store.params[name].shape:
            raise ValueError(f"{path}: shape mismatch for parameter {name!r}")
        model.store.params[name][...] = arr
    return model
