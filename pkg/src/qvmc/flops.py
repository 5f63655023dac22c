"""Leading-order parameter and per-token FLOP estimates.

Counts cover the stacked blocks only (projections, retention/attention,
feedforward); nonlinearities, biases, normalizations, embeddings and output
heads are sub-leading and excluded.  The interesting output is the sequence
length past which the recurrent form beats a same-size transformer per
token: with the retention width tied to the model width that threshold is
exactly 1.75 * d_model.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["ModelDims", "crossover_seq_len", "flops_per_token", "param_count", "report"]

FORMS = ("retnet_parallel", "retnet_recurrent", "transformer")


@dataclass(frozen=True)
class ModelDims:
    n_block: int
    d_model: int
    d_retn: int
    d_ff: int
    n_seq: int = 1

    def __post_init__(self):
        for name in ("n_block", "d_model", "d_retn", "d_ff", "n_seq"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


def param_count(dims: ModelDims) -> int:
    """Trainable weights in the blocks: N = 2*n_block*d_model*(2.5*d_retn + d_ff)."""
    return round(2 * dims.n_block * dims.d_model * (2.5 * dims.d_retn + dims.d_ff))


def flops_per_token(dims: ModelDims, form: str) -> int:
    """Forward-pass FLOPs for one token through all blocks."""
    n = param_count(dims)
    if form == "retnet_parallel":
        return 2 * n + 4 * dims.n_block * dims.n_seq * dims.d_retn
    if form == "retnet_recurrent":
        return 2 * n + 5 * dims.n_block * dims.d_retn ** 2
    if form == "transformer":
        # one post-attention projection instead of retention's two
        return flops_per_token(dims, "retnet_parallel") - 2 * dims.n_block * dims.d_model * dims.d_retn
    raise ValueError(f"unknown form {form!r}; expected one of {FORMS}")


def crossover_seq_len(dims: ModelDims) -> float:
    """Sequence length above which recurrent inference beats the transformer.

    Solves 4*n_block*n_seq*d_retn > 5*n_block*d_retn^2 + 2*n_block*d_model*d_retn
    for n_seq; equals 1.75*d_model whenever d_retn = d_model.
    """
    if dims.d_retn == 0:
        raise ValueError("crossover undefined for zero retention width")
    return (5 * dims.d_retn ** 2 + 2 * dims.d_model * dims.d_retn) / (4 * dims.d_retn)


def report(dims: ModelDims) -> str:
    """Human-readable cost table for a given set of dimensions."""
    lines = [
        f"blocks={dims.n_block} d_model={dims.d_model} d_retn={dims.d_retn} "
        f"d_ff={dims.d_ff} n_seq={dims.n_seq}",
        f"parameters             : {param_count(dims)}",
    ]
    for form in FORMS:
        lines.append(f"{form:<23}: {flops_per_token(dims, form)} FLOPs/token")
    lines.append(f"recurrent beats transformer past n_seq > {crossover_seq_len(dims):g}")
    return "\n".join(lines)
