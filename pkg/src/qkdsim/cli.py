"""Command-line interface: analyze, simulate, sweep, capacity, accessible.

Human-readable output goes to stdout with 6 decimal places; machine output
(--out) is JSON (or CSV for sweep) with floats at 12 significant digits and
is byte-identical across runs for identical flags and seeds. Files are
written atomically. Exit codes: 0 success, 1 validation or parse failure
(the message names the failed invariant), 2 optimizer non-convergence
(partial report still emitted) or partial sweep failure, 3 dimension
budget exceeded (the message names the limiting dimension).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import tempfile
import time
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceeded, ValidationError
from .information import (
    ConditionReport,
    OptimizerConfig,
    accessible_information,
    c1,
    classical_advantage,
    holevo_capacity,
    holevo_chi,
    quantum_condition,
)
from .scenarios import ScenarioFormatError, load_scenario
from .simulation import (
    bob_decoder,
    eve_default_strategy,
    eve_optimize,
    repetition_codebook,
    sample_codebook,
    evaluate,
    sweep,
)

SWEEP_COLUMNS = ("scenario", "n", "seed", "coder", "eve", "p_agree", "bob_info", "eve_info", "flags")


@dataclass
class ReportRecord:
    """One simulation result row, reproducible from the record alone."""

    scenario: str
    n: int
    seed: int
    coder: str
    eve: str
    p_agree: float
    bob_info: float
    eve_info: float
    quantum_lhs: float | None
    quantum_rhs: float | None
    quantum_satisfied: bool | None
    flags: str
    config: OptimizerConfig
    wall_time_s: float

    def to_dict(self) -> dict:
        # Wall time is volatile and stays out of machine output so identical
        # flags and seeds give byte-identical files.
        return {
            "command": "simulate",
            "scenario": self.scenario,
            "n": self.n,
            "seed": self.seed,
            "coder": self.coder,
            "eve": self.eve,
            "p_agree": self.p_agree,
            "bob_info": self.bob_info,
            "eve_info": self.eve_info,
            "quantum_lhs": self.quantum_lhs,
            "quantum_rhs": self.quantum_rhs,
            "quantum_satisfied": self.quantum_satisfied,
            "flags": self.flags,
            "config": dataclasses.asdict(self.config),
        }


def _round12(obj):
    """Round every float in a JSON-like structure to 12 significant digits."""
    if isinstance(obj, float):
        return float(f"{obj:.12g}")
    if isinstance(obj, dict):
        return {k: _round12(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round12(v) for v in obj]
    if isinstance(obj, np.floating):
        return float(f"{float(obj):.12g}")
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump_json(payload: dict) -> str:
    return json.dumps(_round12(payload), indent=2, sort_keys=True) + "\n"


def _effects_as_pairs(povm) -> list:
    return [
        [[[float(z.real), float(z.imag)] for z in row] for row in effect]
        for effect in povm.effects
    ]


def _condition_dict(report: ConditionReport) -> dict:
    out = {
        "kind": report.kind,
        "lhs": report.lhs,
        "rhs": report.rhs,
        "satisfied": report.satisfied,
        "margin": report.margin,
        "converged": report.converged,
        "lhs_prior": None if report.lhs_prior is None else [float(p) for p in report.lhs_prior],
        "rhs_prior": None if report.rhs_prior is None else [float(p) for p in report.rhs_prior],
    }
    if report.rhs_povm is not None:
        out["rhs_povm"] = _effects_as_pairs(report.rhs_povm)
    return out


def _config_from_args(args) -> OptimizerConfig:
    return OptimizerConfig(
        grid_points=args.grid, restarts=args.restarts, tol=args.tol, seed=args.seed
    )


def _load(args):
    return load_scenario(args.scenario, params=args.params, overlap=args.overlap)


def _emit(args, payload: dict) -> None:
    if getattr(args, "out", None):
        _write_atomic(args.out, _dump_json(payload))


def cmd_analyze(args) -> int:
    scenario = _load(args)
    cfg = _config_from_args(args)
    t0 = time.perf_counter()
    quantum = quantum_condition(scenario.ensemble, scenario.theta, cfg)
    classical = None
    if scenario.classical_pair is not None:
        classical = classical_advantage(*scenario.classical_pair, cfg)
    elapsed = time.perf_counter() - t0
    print(f"scenario: {scenario.name}")
    print(
        f"quantum condition: lhs={_fmt(quantum.lhs)} rhs={_fmt(quantum.rhs)} "
        f"satisfied={str(quantum.satisfied).lower()}"
    )
    if classical is not None:
        print(
            f"classical condition: advantage={_fmt(classical.lhs)} "
            f"satisfied={str(classical.satisfied).lower()}"
        )
    converged = quantum.converged and (classical is None or classical.converged)
    if not converged:
        print("warning: optimizer did not converge; report is partial", file=sys.stderr)
    print(f"wall time: {elapsed:.2f} s")
    payload = {
        "command": "analyze",
        "scenario": scenario.name,
        "quantum": _condition_dict(quantum),
        "classical": None if classical is None else _condition_dict(classical),
        "config": dataclasses.asdict(cfg),
        "satisfied": quantum.satisfied,
    }
    _emit(args, payload)
    return 0 if converged else 2


def _make_codebook(scenario, coder: str, seed: int):
    if coder == "repetition":
        return repetition_codebook(scenario.key_count, scenario.n)
    if coder == "random":
        return sample_codebook(scenario.key_count, scenario.n, scenario.ensemble.size, seed)
    raise ValidationError("coder", f"unknown coder {coder!r}")


def cmd_simulate(args) -> int:
    scenario = _load(args).with_n(args.n)
    cfg = _config_from_args(args)
    t0 = time.perf_counter()
    codebook = _make_codebook(scenario, args.coder, args.seed)
    mb = bob_decoder(scenario, codebook)
    if args.eve == "default":
        me = eve_default_strategy(scenario, codebook)
    elif args.eve == "optimized":
        me = eve_optimize(scenario, codebook, cfg)
    else:
        raise ValidationError("eve", f"unknown adversary choice {args.eve!r}")
    report = evaluate(scenario, codebook, mb, me, metadata={"seed": args.seed})
    condition = quantum_condition(scenario.ensemble, scenario.theta, cfg)
    elapsed = time.perf_counter() - t0
    flags = "ok" if condition.converged else "non-converged"
    record = ReportRecord(
        scenario=scenario.name,
        n=scenario.n,
        seed=args.seed,
        coder=args.coder,
        eve=args.eve,
        p_agree=report.p_agree,
        bob_info=report.bob_info,
        eve_info=report.eve_info,
        quantum_lhs=condition.lhs,
        quantum_rhs=condition.rhs,
        quantum_satisfied=condition.satisfied,
        flags=flags,
        config=cfg,
        wall_time_s=elapsed,
    )
    print(f"scenario: {scenario.name} n={scenario.n} seed={args.seed} "
          f"coder={args.coder} eve={args.eve}")
    print(
        f"p_agree={_fmt(record.p_agree)} bob_info={_fmt(record.bob_info)} "
        f"eve_info={_fmt(record.eve_info)}"
    )
    print(
        f"quantum condition: lhs={_fmt(condition.lhs)} rhs={_fmt(condition.rhs)} "
        f"satisfied={str(condition.satisfied).lower()}"
    )
    print(f"flags: {flags}")
    print(f"wall time: {elapsed:.2f} s")
    _emit(args, record.to_dict())
    return 0


def _parse_int_range(text: str) -> list[int]:
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(part) for part in text.split(",") if part.strip() != ""]


def _sweep_rows(cells) -> list[dict]:
    rows = []
    for cell in cells:
        row = {
            "scenario": cell.scenario,
            "n": cell.n,
            "seed": cell.seed,
            "coder": cell.coder,
            "eve": cell.eve,
        }
        if cell.report is not None:
            row.update(
                p_agree=cell.report.p_agree,
                bob_info=cell.report.bob_info,
                eve_info=cell.report.eve_info,
                flags="ok",
            )
        else:
            row.update(p_agree=None, bob_info=None, eve_info=None, flags=f"error:{cell.error}")
        rows.append(row)
    return rows


def _rows_to_csv(rows: list[dict]) -> str:
    lines = [",".join(SWEEP_COLUMNS)]
    for row in rows:
        cells = []
        for col in SWEEP_COLUMNS:
            value = row[col]
            if value is None:
                cells.append("")
            elif isinstance(value, float):
                cells.append(f"{value:.12g}")
            else:
                cells.append(str(value))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def cmd_sweep(args) -> int:
    scenario = _load(args)
    cfg = _config_from_args(args)
    n_range = _parse_int_range(args.n_range)
    seeds = _parse_int_range(args.seeds)
    cells = sweep(scenario, n_range, seeds, cfg, coder=args.coder, eve=args.eve)
    rows = _sweep_rows(cells)
    failed = sum(1 for c in cells if c.error is not None)
    for row in rows:
        if row["flags"] == "ok":
            print(
                f"n={row['n']} seed={row['seed']} p_agree={_fmt(row['p_agree'])} "
                f"bob_info={_fmt(row['bob_info'])} eve_info={_fmt(row['eve_info'])}"
            )
        else:
            print(f"n={row['n']} seed={row['seed']} {row['flags']}")
    if args.out:
        if args.format == "csv":
            _write_atomic(args.out, _rows_to_csv(rows))
        else:
            payload = {
                "command": "sweep",
                "scenario": scenario.name,
                "rows": rows,
                "config": dataclasses.asdict(cfg),
            }
            _write_atomic(args.out, _dump_json(payload))
    return 2 if failed else 0


def cmd_capacity(args) -> int:
    scenario = _load(args)
    cfg = _config_from_args(args)
    ensemble = scenario.bob_ensemble()
    chi = holevo_chi(ensemble)
    cap = holevo_capacity(ensemble, cfg)
    print(f"scenario: {scenario.name}")
    print(f"chi at ensemble prior: {_fmt(chi)}")
    print(f"capacity: {_fmt(cap.value)} at prior {[round(float(p), 6) for p in cap.prior]}")
    payload = {
        "command": "capacity",
        "scenario": scenario.name,
        "chi": chi,
        "capacity": cap.value,
        "prior": [float(p) for p in cap.prior],
        "converged": cap.converged,
        "config": dataclasses.asdict(cfg),
    }
    _emit(args, payload)
    return 0 if cap.converged else 2


def cmd_accessible(args) -> int:
    scenario = _load(args)
    cfg = _config_from_args(args)
    ensemble = scenario.eve_ensemble()
    acc = accessible_information(ensemble, cfg)
    joint = c1(ensemble, cfg)
    print(f"scenario: {scenario.name}")
    print(f"accessible information at ensemble prior: {_fmt(acc.value)}")
    print(f"single-copy capacity: {_fmt(joint.value)} at prior "
          f"{[round(float(p), 6) for p in joint.prior]}")
    payload = {
        "command": "accessible",
        "scenario": scenario.name,
        "accessible_information": acc.value,
        "c1": joint.value,
        "prior": [float(p) for p in joint.prior],
        "converged": acc.converged and joint.converged,
        "config": dataclasses.asdict(cfg),
    }
    _emit(args, payload)
    return 0 if acc.converged and joint.converged else 2


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("scenario", help="builtin name or scenario file path")
    parser.add_argument(
        "params", nargs="*", type=float, help="builtin parameters (e.g. bsc-pair crossovers)"
    )
    parser.add_argument("--overlap", type=float, default=None, help="letter overlap s")
    parser.add_argument("--grid", type=int, default=2001, help="prior grid points")
    parser.add_argument("--restarts", type=int, default=8, help="optimizer restarts")
    parser.add_argument("--tol", type=float, default=1e-9, help="convergence tolerance")
    parser.add_argument("--seed", type=int, default=0, help="seed for codebooks and optimizers")
    parser.add_argument("--out", default=None, help="write machine-readable output here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qkdsim",
        description="Key-distribution feasibility analysis and exact finite-block simulation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="check the feasibility conditions")
    _add_common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="run the exact pipeline once")
    _add_common(p)
    p.add_argument("-n", type=int, default=1, help="block length")
    p.add_argument("--coder", choices=("random", "repetition"), default="repetition")
    p.add_argument("--eve", choices=("default", "optimized"), default="default")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="simulate over a grid of block lengths and seeds")
    _add_common(p)
    p.add_argument("--n-range", default="1..3", help="block lengths, e.g. 1..4 or 1,2,4")
    p.add_argument("--seeds", default="0", help="codebook seeds, e.g. 0..4 or 0,7")
    p.add_argument("--coder", choices=("random", "repetition"), default="repetition")
    p.add_argument("--eve", choices=("default", "optimized"), default="default")
    p.add_argument("--format", choices=("json", "csv"), default="csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("capacity", help="receiver-side collective capacity")
    _add_common(p)
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("accessible", help="adversary-side single-copy information")
    _add_common(p)
    p.set_defaults(func=cmd_accessible)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioFormatError as exc:
        print(f"error: scenario: {exc}", file=sys.stderr)
        return 1
    except BudgetExceeded as exc:
        print(f"error: budget: {exc}", file=sys.stderr)
        return 3
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
