"""Command-line entry point.

Subcommands: ``train`` (optimize a wavefunction against a Hamiltonian file),
``diag`` (exact sector ground energy), ``flops`` (cost-model table),
``sample`` (draw from a checkpoint), ``convert`` (FCIDUMP to Pauli text).
Batch workflow only; progress is observed through the JSONL training log.

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
import time
from pathlib import Path


from qvmc.ansatz.networks import load_checkpoint, save_checkpoint
from qvmc.flops import ModelDims, report
from qvmc.hamiltonian import save_pauli_text
from qvmc.oracle import ground_state
from qvmc.sampler import sample as draw_samples
from qvmc.solver import GroundStateSolver, as_qubit_hamiltonian

__all__ = ["main"]

USAGE_EXIT = 1
RUNTIME_EXIT = 2

_BOOL_KEYS = {"vna", "prune_singletons"}
_INT_KEYS = {
    "n_block", "d_model", "d_retn", "d_ff", "n_heads", "total_steps",
    "n_start", "n_end", "unique_cap", "flip_batch_count",
    "baseline_interval", "workers", "checkpoint_every", "seed",
}
_FLOAT_KEYS = {"base_lr", "min_lr", "warmup_frac", "anneal_exponent", "anneal_start_frac"}


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


def _convert_value(key: str, raw: str):
    if key in _BOOL_KEYS:
        lowered = raw.strip().lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean for {key!r}, got {raw!r}")
    if key in _INT_KEYS:
        return int(float(raw))
    if key in _FLOAT_KEYS:
        return float(raw)
    if key == "phase_hidden":
        return tuple(int(x) for x in raw.replace("(", "").replace(")", "").split(",") if x)
    return raw.strip()


def _load_run_config(path: str | None, overrides: list[str]):
    """Read the key-value run file plus ``section.key=value`` overrides."""
    parser = configparser.ConfigParser()
    if path is not None:
        if not Path(path).exists():
            raise FileNotFoundError(f"config file not found: {path}")
        parser.read(path)
    values: dict[str, dict[str, str]] = {s: dict(parser[s]) for s in parser.sections()}
    for item in overrides or []:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ValueError(f"override must look like section.key=value, got {item!r}")
        target, raw = item.split("=", 1)
        section, key = target.split(".", 1)
        values.setdefault(section, {})[key] = raw
    return values


def _solver_from_config(values: dict) -> tuple[GroundStateSolver, str, str]:
    ham_path = values.get("hamiltonian", {}).get("path")
    if not ham_path:
        raise ValueError("config is missing [hamiltonian] path")
    out_dir = values.get("output", {}).get("dir", "runs/latest")
    kwargs = {}
    for section, mapping in (("ansatz", values.get("ansatz", {})),
                             ("train", values.get("train", {})),
                             ("sampler", values.get("sampler", {}))):
        for key, raw in mapping.items():
            name = "ansatz" if (section == "ansatz" and key == "kind") else key
            kwargs[name] = _convert_value(name, raw)
    if "QVMC_WORKERS" in os.environ:
        kwargs["workers"] = int(os.environ["QVMC_WORKERS"])
    return GroundStateSolver(**kwargs), ham_path, out_dir


def cmd_train(args) -> int:
    values = _load_run_config(args.config, args.set)
    if args.ansatz:
        values.setdefault("ansatz", {})["kind"] = args.ansatz
    if args.steps:
        values.setdefault("train", {})["total_steps"] = str(args.steps)
    if args.seed is not None:
        values.setdefault("train", {})["seed"] = str(args.seed)
    if args.workers is not None:
        values.setdefault("train", {})["workers"] = str(args.workers)
    if args.no_vna:
        values.setdefault("train", {})["vna"] = "false"
    if args.output:
        values.setdefault("output", {})["dir"] = args.output

    solver, ham_path, out_dir = _solver_from_config(values)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if solver.checkpoint_every:
        solver.set_params(checkpoint_dir=str(out))

    h = as_qubit_hamiltonian(ham_path)
    started = time.time()
    with open(out / "train_log.jsonl", "w", encoding="ascii") as log:
        def write_record(record):
            log.write(json.dumps(record) + "\n")
        solver.fit(h, log_fn=write_record)
    wall = time.time() - started
    save_checkpoint(solver.model_, str(out / "checkpoint_final.json"))

    summary = {
        "hamiltonian": ham_path,
        "ansatz": solver.ansatz,
        "best_energy": solver.best_energy_,
        "final_energy": solver.final_estimate_.mean,
        "n_params": solver.n_parameters_,
        "n_qubits": h.n_qubits,
        "total_steps": solver.total_steps,
        "aborted": solver.aborted_,
        "wall_time_s": round(wall, 3),
    }
    if h.n_qubits <= 14 and not args.no_oracle:
        oracle_energy, _ = ground_state(h, sector=(h.n_up, h.n_down))
        summary["oracle_energy"] = oracle_energy
        summary["error_mha"] = 1000.0 * (solver.best_energy_ - oracle_energy)
    with open(out / "summary.json", "w", encoding="ascii") as fh:
        json.dump(summary, fh, indent=2)
    print(json.dumps(summary, indent=2))
    return 0


def cmd_diag(args) -> int:
    h = as_qubit_hamiltonian(args.hamiltonian)
    if args.sector:
        parts = args.sector.split(",")
        if len(parts) != 2:
            raise ValueError("--sector expects 'n_up,n_down'")
        sector = (int(parts[0]), int(parts[1]))
    else:
        sector = (h.n_up, h.n_down)
    energy, _ = ground_state(h, sector=sector)
    print(f"sector ({sector[0]} up, {sector[1]} down) ground energy: {energy:.10f} Ha")
    return 0


def cmd_flops(args) -> int:
    dims = ModelDims(
        n_block=args.n_block, d_model=args.d_model,
        d_retn=args.d_retn if args.d_retn else args.d_model,
        d_ff=args.d_ff, n_seq=args.n_seq,
    )
    print(report(dims))
    return 0


def cmd_sample(args) -> int:
    model = load_checkpoint(args.checkpoint)
    sample_set = draw_samples(model, args.draws, args.seed)
    lines = []
    for config, count in zip(sample_set.configs, sample_set.counts):
        lines.append("".join(str(int(b)) for b in config) + f" {count}")
    text = "\n".join(lines)
    if args.output:
        Path(args.output).write_text(text + "\n", encoding="ascii")
    else:
        print(text)
    return 0


def cmd_convert(args) -> int:
    h = as_qubit_hamiltonian(args.input)
    save_pauli_text(h, args.output)
    print(f"wrote {h.n_terms} terms ({h.n_qubits} qubits) to {args.output}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="qvmc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="optimize a wavefunction on a Hamiltonian")
    p.add_argument("--config", help="key-value run file (INI sections)")
    p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                   help="override a config entry (repeatable)")
    p.add_argument("--ansatz", choices=("retnet", "transformer", "made"))
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--no-vna", action="store_true",
                   help="disable entropy annealing (beta fixed at zero)")
    p.add_argument("--no-oracle", action="store_true",
                   help="skip the exact-diagonalization comparison in the summary")
    p.add_argument("--output", help="output directory (overrides [output] dir)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("diag", help="exact sector ground energy")
    p.add_argument("--hamiltonian", required=True)
    p.add_argument("--sector", help="'n_up,n_down' (defaults to the file's sector)")
    p.set_defaults(func=cmd_diag)

    p = sub.add_parser("flops", help="parameter/FLOP cost table")
    p.add_argument("--n-block", type=int, default=1)
    p.add_argument("--d-model", type=int, required=True)
    p.add_argument("--d-retn", type=int, default=0)
    p.add_argument("--d-ff", type=int, required=True)
    p.add_argument("--n-seq", type=int, default=1)
    p.set_defaults(func=cmd_flops)

    p = sub.add_parser("sample", help="draw configurations from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--draws", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", help="write 'bitstring count' lines here instead of stdout")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("convert", help="FCIDUMP -> Pauli text")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_convert)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, TypeError, FileNotFoundError) as exc:
        print(f"qvmc: error: {exc}", file=sys.stderr)
        return USAGE_EXIT if isinstance(exc, (FileNotFoundError,)) else RUNTIME_EXIT
    except Exception as exc:  # pragma: no cover - defensive
        print(f"qvmc: runtime failure: {exc}", file=sys.stderr)
        return RUNTIME_EXIT


if __name__ == "__main__":
    sys.exit(main())
