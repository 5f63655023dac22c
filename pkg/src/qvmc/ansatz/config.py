"""Architecture description shared by the autoregressive wavefunctions."""

from __future__ import annotations

from dataclasses import dataclass, field

VOCAB = 4            # orbital occupancy tokens: empty, down, up, doubly occupied
START_TOKEN = 4      # universal start symbol prepended to every sequence

KINDS = ("retnet", "transformer", "made")


@dataclass(frozen=True)
class AnsatzConfig:
    """Hyperparameters of one modulus network plus its phase head.

    ``d_retn`` is the width of the retention/attention path (split across
    ``n_heads``); ``d_ff`` the feedforward width, which doubles as the
    hidden width of the masked feedforward ("made") architecture.
    """

    kind: str = "retnet"
    n_block: int = 1
    d_model: int = 16
    d_retn: int = 16
    d_ff: int = 64
    n_heads: int = 2
    phase_hidden: tuple[int, ...] = field(default=(64, 64))

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown ansatz kind {self.kind!r}; expected one of {KINDS}")
        for name in ("n_block", "d_model", "d_retn", "d_ff", "n_heads"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.d_retn % self.n_heads:
            raise ValueError("n_heads must divide d_retn")
        if (self.d_retn // self.n_heads) % 2 and self.kind == "retnet":
            raise ValueError("per-head retention width must be even (rotary pairing)")
        if len(self.phase_hidden) != 2:
            raise ValueError("phase network uses exactly two hidden layers")

    @property
    def head_dim(self) -> int:
        return self.d_retn // self.n_heads

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n_block": self.n_block,
            "d_model": self.d_model,
            "d_retn": self.d_retn,
            "d_ff": self.d_ff,
            "n_heads": self.n_heads,
            "phase_hidden": list(self.phase_hidden),
        }

    @staticmethod
    def from_dict(data: dict) -> "AnsatzConfig":
        return AnsatzConfig(
            kind=data["kind"],
            n_block=int(data["n_block"]),
            d_model=int(data["d_model"]),
            d_retn=int(data["d_retn"]),
            d_ff=int(data["d_ff"]),
            n_heads=int(data["n_heads"]),
            phase_hidden=tuple(int(x) for x in data["phase_hidden"]),
        )
