"""Command-line front end.

Subcommands: solve, classify, dd-solve, bounds, synth, reconstruct,
sample, bench-collision, bench-fourier.  All file interchange uses the
shared JSON schemas; sample emits CSV with 17 significant digits.  Errors
always print one structured JSON object to stderr with a stable code.
Exit codes: 0 ok, 1 invalid input or I/O, 2 unsolvable, 3 numerical
failure.  PRONYKIT_THREADS caps internal parallelism.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import bench
from .core import MomentSequence, SpikeSignal, prony_mapping
from .divided import solve_prony_dd
from .errors import PronykitError, ReconstructionError, Unsolvable
from .fourier import FourierData, PiecewiseModel, reconstruct, synthesize_fourier
from .solvability import classify
from .solve import solve_prony
from .stability import stability_bounds, validate_bounds


def _read_json(path: str) -> dict:
    if path == "-":
        return json.load(sys.stdin)
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _write_text(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
        return
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _write_json(path: str | None, obj) -> None:
    _write_text(path, json.dumps(obj, indent=2, sort_keys=False))


def _error_code(exc: Exception) -> str:
    name = type(exc).__name__
    out = []
    for i, ch in enumerate(name):
        if ch.isupper() and i and not name[i - 1].isupper():
            out.append("_")
        out.append(ch.lower())
    return "".join(out)


def _emit_error(exc: Exception, extra: dict | None = None) -> None:
    payload = {"error": _error_code(exc), "message": str(exc)}
    if extra:
        payload.update(extra)
    sys.stderr.write(json.dumps(payload) + "\n")


def _moment_residual(signal: SpikeSignal, mu: MomentSequence) -> float:
    recon = (
        prony_mapping(signal, len(mu)).values
        if signal.num_nodes
        else np.zeros(len(mu), dtype=complex)
    )
    scale = 1.0 + float(np.max(np.abs(mu.values)))
    return float(np.max(np.abs(recon - mu.values)) / scale)


def cmd_solve(args) -> int:
    mu = MomentSequence.from_json(_read_json(args.input))
    report = classify(mu, rank_tol=args.rank_tol)
    signal = solve_prony(mu, rank_tol=args.rank_tol, cluster_tol=args.cluster_tol)
    _write_json(
        args.output,
        {
            "signal": signal.to_json(),
            "residual": _moment_residual(signal, mu),
            "rank": report.rank,
            "report": report.to_json(),
        },
    )
    return 0


def cmd_classify(args) -> int:
    mu = MomentSequence.from_json(_read_json(args.input))
    _write_json(args.output, classify(mu, rank_tol=args.rank_tol).to_json())
    return 0


def cmd_dd_solve(args) -> int:
    mu = MomentSequence.from_json(_read_json(args.input))
    sol = solve_prony_dd(mu, rank_tol=args.rank_tol)
    _write_json(args.output, sol.to_json())
    return 0


def cmd_bounds(args) -> int:
    signal = SpikeSignal.from_json(_read_json(args.input))
    if args.validate_trials:
        if args.seed is None:
            raise ValueError("--seed is required for --validate-trials")
        report = validate_bounds(signal, args.epsilon, args.validate_trials, args.seed)
        _write_json(args.output, report.to_json())
    else:
        _write_json(args.output, stability_bounds(signal, args.epsilon).to_json())
    return 0


def cmd_synth(args) -> int:
    model = PiecewiseModel.from_json(_read_json(args.input))
    rng = None
    if args.noise_R is not None:
        if args.seed is None:
            raise ValueError("--seed is required with --noise-R")
        rng = np.random.default_rng(args.seed)
    data = synthesize_fourier(
        model, args.m_total, budget=args.M, noise_R=args.noise_R, rng=rng
    )
    _write_json(args.output, data.to_json())
    return 0


def cmd_reconstruct(args) -> int:
    data = FourierData.from_json(_read_json(args.input))
    result = reconstruct(
        data, d=args.d, K=args.K, J=args.J, A=args.A, B=args.B, R=args.R, mode=args.mode
    )
    _write_json(
        args.output,
        {
            "model": result.model.to_json(),
            "jumps": [est.to_json() for est in result.jump_estimates],
            "mode": result.mode,
            "M": result.M,
        },
    )
    return 0


def cmd_sample(args) -> int:
    model = PiecewiseModel.from_json(_read_json(args.input))
    x = np.linspace(args.x_min, args.x_max, args.num, endpoint=False)
    values = np.asarray(model.evaluate(x), dtype=float)
    reference = None
    if args.reference:
        ref_model = PiecewiseModel.from_json(_read_json(args.reference))
        reference = values - np.asarray(ref_model.evaluate(x), dtype=float)
    lines = ["x,value" + (",residual" if reference is not None else "")]
    for i in range(len(x)):
        row = f"{x[i]:.17g},{values[i]:.17g}"
        if reference is not None:
            row += f",{reference[i]:.17g}"
        lines.append(row)
    _write_text(args.output, "\n".join(lines) + "\n")
    return 0


def _emit_table(args, table) -> None:
    if args.format == "csv":
        _write_text(args.output, table.to_csv())
    else:
        _write_json(args.output, table.to_json())


def cmd_bench_collision(args) -> int:
    h_grid = [float(v) for v in args.h_grid.split(",")]
    table = bench.collision_sweep(h_grid)
    _emit_table(args, table)
    return 0


def cmd_bench_fourier(args) -> int:
    if args.seed is None:
        raise ValueError("--seed is required for bench-fourier")
    m_grid = [int(v) for v in args.M_grid.split(",")]
    table = bench.fourier_sweep(
        d=args.d,
        K=args.K,
        M_grid=m_grid,
        trials=args.trials,
        mode=args.mode,
        seed=args.seed,
        J=args.J,
        A=args.A,
        B=args.B,
        R=args.R,
    )
    _emit_table(args, table)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pronykit",
        description="Spike-train moment solvers and piecewise-smooth Fourier reconstruction.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, output=True):
        p.add_argument("--input", required=True, help="input JSON path, or - for stdin")
        if output:
            p.add_argument("--output", default=None, help="output path (default stdout)")
        p.add_argument(
            "--json-errors",
            action="store_true",
            help="structured JSON on stderr for errors (always on; flag kept for scripts)",
        )

    p = sub.add_parser("solve", help="recover a spike signal from moments")
    add_common(p)
    p.add_argument("--rank-tol", type=float, default=1e-10)
    p.add_argument("--cluster-tol", type=float, default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("classify", help="solvability report for a moment vector")
    add_common(p)
    p.add_argument("--rank-tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("dd-solve", help="solve in the finite-difference basis")
    add_common(p)
    p.add_argument("--rank-tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_dd_solve)

    p = sub.add_parser("bounds", help="stability bounds for a spike signal")
    add_common(p)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--validate-trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("synth", help="Fourier coefficients of a piecewise model")
    add_common(p)
    p.add_argument("--m-total", type=int, required=True)
    p.add_argument("--M", type=int, default=None, help="reconstruction budget (default m_total // 3)")
    p.add_argument("--noise-R", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("reconstruct", help="recover a piecewise model from Fourier data")
    add_common(p)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--J", type=float, required=True)
    p.add_argument("--A", type=float, default=None)
    p.add_argument("--B", type=float, default=None)
    p.add_argument("--R", type=float, default=None)
    p.add_argument("--mode", choices=["half", "full"], default="full")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("sample", help="sample a piecewise model to CSV")
    add_common(p)
    p.add_argument("--num", type=int, default=512)
    p.add_argument("--x-min", type=float, default=-np.pi)
    p.add_argument("--x-max", type=float, default=np.pi)
    p.add_argument("--reference", default=None, help="reference model JSON for a residual column")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("bench-collision", help="collision-family conditioning sweep")
    p.add_argument("--h-grid", required=True, help="comma-separated h values")
    p.add_argument("--output", default=None)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--json-errors", action="store_true")
    p.set_defaults(func=cmd_bench_collision)

    p = sub.add_parser("bench-fourier", help="reconstruction convergence sweep")
    p.add_argument("--M-grid", required=True, help="comma-separated budgets")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--mode", choices=["half", "full"], default="full")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--J", type=float, default=None)
    p.add_argument("--A", type=float, default=2.0)
    p.add_argument("--B", type=float, default=1.0)
    p.add_argument("--R", type=float, default=None, help="noise scale (default depends on d)")
    p.add_argument("--output", default=None)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--json-errors", action="store_true")
    p.set_defaults(func=cmd_bench_fourier)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Unsolvable as exc:
        extra = {"report": exc.report.to_json()} if exc.report is not None else None
        _emit_error(exc, extra)
        return 2
    except ReconstructionError as exc:
        _emit_error(exc, {"jump_index": exc.jump_index})
        return 3
    except (PronykitError, np.linalg.LinAlgError) as exc:
        _emit_error(exc)
        return 3
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        _emit_error(exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
