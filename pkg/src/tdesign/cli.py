"""Command-line experiment runner.

Every command writes ``<tag>.report.json`` and ``<tag>.table.<format>`` to the
output directory (``--out``, else ``$TDESIGN_OUT``, else ``./results``) and
exits with status 0 only when every target in the report passed.

Parameters can come from a JSON config file (``--config``); flags given on
the command line override it.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from .classical import KwiseRecord, KTerm, write_kterm_csv
from .errors import UsageError
from .experiments import UNITARIES, run
from .report import ExperimentConfig, emit_plotdata, emit_table

OUT_ENV = "TDESIGN_OUT"
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_ERROR = 3


def _add_unitary(p: argparse.ArgumentParser, sample_opts: bool = True) -> None:
    p.add_argument("--unitary", choices=UNITARIES)
    p.add_argument("--n", type=int)
    p.add_argument("--circuit", help="circuit file for --unitary circuit-file")
    if sample_opts:
        p.add_argument("--length", type=int, help="steps per sampled circuit")
        p.add_argument("--circuits", type=int, help="number of sampled circuits")
        p.add_argument("--model", choices=("local", "uniform"))


def _global_flags(p: argparse.ArgumentParser, prefix: str = "") -> None:
    p.add_argument("--seed", dest=prefix + "seed", type=int)
    p.add_argument("--out", dest=prefix + "out", help="output directory")
    p.add_argument("--format", dest=prefix + "format", choices=("csv", "json"))
    p.add_argument("--config", dest=prefix + "config", help="JSON config file; flags override its values")
    p.add_argument("--timestamp", dest=prefix + "timestamp", action="store_true", default=None,
                   help="record wall-clock time in provenance")


def build_parser() -> argparse.ArgumentParser:
    # Global flags are accepted before or after the command. The top-level copies
    # use separate names so subparser defaults cannot overwrite them.
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common)
    parser = argparse.ArgumentParser(prog="tdesign", description=__doc__.splitlines()[0])
    _global_flags(parser, prefix="top_")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("gap", parents=[common], help="second eigenvalue of a moment operator")
    p.add_argument("--t", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--model", choices=("local", "uniform"))
    p.add_argument("--boundary", choices=("open", "periodic"))
    p.add_argument("--method", choices=("dense", "deflated-power", "lanczos"))
    p.add_argument("--tol", type=float)
    p.add_argument("--decay-k", dest="decay_k", type=int, help="largest k in the decay plot data")

    p = sub.add_parser("xmatrix", parents=[common], help="spectrum of the three-qubit X matrix")
    p.add_argument("--t", type=int)

    p = sub.add_parser("dispersion", parents=[common], help="dispersiveness of a unitary or a circuit ensemble")
    _add_unitary(p)
    p.add_argument("--trials", type=int)

    p = sub.add_parser("checking", parents=[common], help="acceptance probability of the checking test")
    _add_unitary(p)
    p.add_argument("--trials", type=int)
    p.add_argument("--independent-trials", dest="independent_trials", type=int)
    p.add_argument("--mode", choices=("both", "independent", "u-correlated"))

    p = sub.add_parser("kwise", parents=[common], help="k-term probabilities of the sign string")
    _add_unitary(p)
    p.add_argument("--k", type=int, nargs="+")
    p.add_argument("--terms", type=int)
    p.add_argument("--samples", type=int)

    p = sub.add_parser("classical", parents=[common], help="classical distinguisher and sparse simulation")
    p.add_argument("task", choices=("distinguish", "sparse"), nargs="?")
    _add_unitary(p, sample_opts=False)
    p.add_argument("--eps", type=float)
    p.add_argument("--repetitions", type=int)
    p.add_argument("--constant", type=float)
    p.add_argument("--correlation-trials", dest="correlation_trials", type=int)
    p.add_argument("--block", type=int)
    p.add_argument("--keep", type=int)
    p.add_argument("--instances", type=int)
    p.add_argument("--accuracy", type=float)
    p.add_argument("--delta", type=float)

    p = sub.add_parser("haar-stats", parents=[common], help="Monte-Carlo Haar moments")
    p.add_argument("--d", type=int, nargs="+")
    p.add_argument("--t", type=int, nargs="+")
    p.add_argument("--samples", type=int)
    return parser


GLOBAL_KEYS = ("seed", "out", "format", "config", "timestamp", "command")


def _merge_globals(args: argparse.Namespace) -> argparse.Namespace:
    merged = argparse.Namespace(**{k: v for k, v in vars(args).items() if not k.startswith("top_")})
    for key in ("seed", "out", "format", "config", "timestamp"):
        if getattr(merged, key, None) is None:
            setattr(merged, key, getattr(args, "top_" + key, None))
    return merged


def make_config(args: argparse.Namespace) -> tuple[ExperimentConfig, dict]:
    """Merge config file and flags (flags win) into an ExperimentConfig plus output options."""
    args = _merge_globals(args)
    file_cfg: dict = {}
    if args.config:
        try:
            file_cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"config: cannot read {args.config}: {exc}") from exc
    params = dict(file_cfg.get("params", {}))
    params.update({k: v for k, v in file_cfg.items() if k not in GLOBAL_KEYS and k != "params"})
    params.update({k: v for k, v in vars(args).items() if k not in GLOBAL_KEYS and v is not None})
    command = args.command or file_cfg.get("command")
    if command is None:
        raise UsageError("command: no command given")
    seed = args.seed if args.seed is not None else file_cfg.get("seed", 0)
    opts = {
        "out": args.out or file_cfg.get("out") or os.environ.get(OUT_ENV) or "results",
        "format": args.format or file_cfg.get("format") or "csv",
        "timestamp": args.timestamp or bool(file_cfg.get("timestamp", False)),
    }
    return ExperimentConfig(command, params, int(seed), opts["out"]), opts


def _tag(cfg: ExperimentConfig) -> str:
    if cfg.command == "classical":
        return f"classical-{cfg.params.get('task')}"
    return cfg.command


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg, opts = make_config(args)
        report = run(cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, RuntimeError, MemoryError, NotImplementedError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if opts["timestamp"]:
        report.timestamp = datetime.now(timezone.utc).isoformat(timespec="seconds")

    out = Path(opts["out"])
    out.mkdir(parents=True, exist_ok=True)
    tag = _tag(cfg)
    written = [report.write(out / f"{tag}.report.json"), emit_table(report, out / f"{tag}.table.{opts['format']}", opts["format"])]
    if cfg.command == "gap":
        cert = report.records["certificate"]
        (out / "gap.certificate.json").write_text(json.dumps(cert, sort_keys=True) + "\n")
        written.append(emit_plotdata(report, "decay", out / "gap.decay.dat", kmax=cfg.params.get("decay_k") or 20))
    if "histogram" in report.records:
        written.append(emit_plotdata(report, "histogram", out / f"{tag}.histogram.dat"))
    if cfg.command == "kwise":
        rows = report.records["terms"]
        recs = [KwiseRecord(KTerm(tuple(r["positions"]), tuple(r["signs"])), r["estimate"], r["stderr"], r["bound"]) for r in rows]
        path = out / "kwise.terms.csv"
        header = "config: " + json.dumps(cfg.to_dict(), sort_keys=True)
        write_kterm_csv(recs, path, [r["unitary"] for r in rows], comment=header)
        written.append(path)

    for m in report.results:
        flag = {True: "PASS", False: "FAIL", None: "    "}[m.passed]
        target = "" if m.target is None else f"  target {m.relation} {m.target:.6g} (tol {m.tolerance:.3g})"
        print(f"[{flag}] {m.name}: {m.value:.10g}{target}")
    for path in written:
        print(f"wrote {path}")
    return 0 if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
