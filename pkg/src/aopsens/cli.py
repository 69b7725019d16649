"""Command-line front end: ``aopsens {analyze,invariant,subtract,verify,generate}``.

Exit codes: 0 success, 1 verification failure, 2 input error, 3 applicability
error (an analysis that needs a strict operation was requested for a
nonstrict one).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from . import __version__
from .algebra import from_spec
from .errors import AopsensError, NotStrictError
from .invariant import (
    characterize, min_inequalities, nonembedded, tolerance_function, uniqueness,
)
from .problem import Problem, generate_paths, generate_spanning_trees, solve, validate
from .stability import analyze
from .subtraction import lower_sub, upper_sub
from .verify import MODULES, run_suite

log = logging.getLogger("aopsens")

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_APPLICABILITY = 0, 1, 2, 3

ROW_COLUMNS = (
    "element", "cost", "in_optimal", "c_minus", "c_plus",
    "lower_tol", "upper_tol", "ext_lower_tol", "method",
)


class InputError(Exception):
    pass


@dataclass
class CliConfig:
    command: str
    input_path: Optional[str] = None
    output_format: str = "table"
    seed: int = 0
    instances: int = 10
    op_override: Optional[dict] = None
    verify_invariance: bool = False
    intervals_only: bool = False
    only: Optional[str] = None
    mode: str = "paths"
    output: Optional[str] = None
    repro: Optional[str] = None
    w: Optional[float] = None
    v: Optional[float] = None
    side: str = "upper"


# -- formatting -------------------------------------------------------------------

def _num(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, bool):
        return "yes" if x else "no"
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.6g}"
    return str(x)


def render_table(rows: list, columns) -> str:
    """Fixed-width table; ``None`` cells print as ``-``."""
    cells = [[_num(r.get(c)) for c in columns] for r in rows]
    widths = [max([len(c)] + [len(row[i]) for row in cells]) for i, c in enumerate(columns)]
    line = lambda vals: "  ".join(v.rjust(w) for v, w in zip(vals, widths)).rstrip()
    out = [line(columns), line(["-" * w for w in widths])]
    out += [line(row) for row in cells]
    return "\n".join(out)


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def dump_json(obj) -> str:
    return json.dumps(_json_safe(obj), indent=2)


# -- input ------------------------------------------------------------------------

def _read_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def _parse_op(text: Optional[str]) -> Optional[dict]:
    if text is None:
        return None
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"--op is not valid JSON: {exc}") from exc
    from_spec(spec)  # validate early
    return spec


def load(cfg: CliConfig) -> Problem:
    data = _read_json(cfg.input_path)
    if not isinstance(data, dict):
        raise InputError("problem file must hold a JSON object")
    op = from_spec(cfg.op_override) if cfg.op_override else None
    p = Problem.from_dict(data, op)
    validate(p).raise_if_invalid()
    return p


# -- commands ---------------------------------------------------------------------

def _optimum_block(p: Problem) -> dict:
    opt = solve(p)
    return {
        "optimal_trajectories": list(opt.optimal_trajectories),
        "optimal_value": opt.optimal_value,
        "unique": opt.unique,
    }


def cmd_analyze(cfg: CliConfig) -> int:
    p = load(cfg)
    strict = p.operation.strict
    if not strict and not cfg.intervals_only:
        raise NotStrictError(
            f"{p.operation.name} is not strict, so tolerances are undefined; "
            "rerun with --intervals-only for the stability intervals"
        )
    head = _optimum_block(p)
    rows = [r.row() for r in analyze(p, tolerances=not cfg.intervals_only)]
    tf = None
    if strict and not cfg.intervals_only:
        rep = tolerance_function(p, verify=cfg.verify_invariance)
        tf = {x: rep.values[x] for x in p.ground_set}
    if cfg.output_format == "json":
        out = {"operation": p.operation.spec(), **head, "elements": rows}
        if tf is not None:
            out["tolerance_function"] = tf
        print(dump_json(out))
        return EXIT_OK
    trajs = ", ".join(f"S{i + 1}" for i in head["optimal_trajectories"])
    print(f"operation: {p.operation.name}")
    print(f"optimal trajectories: {trajs}")
    print(f"optimal value: {_num(head['optimal_value'])}")
    print()
    print(render_table(rows, ROW_COLUMNS))
    if tf is not None:
        print()
        print("tolerance function: (" + ", ".join(_num(tf[x]) for x in p.ground_set) + ")")
    return EXIT_OK


def invariant_payload(p: Problem, verify: bool = False) -> dict:
    rep = tolerance_function(p, verify=verify)
    characterize(p, rep)
    out = rep.to_dict(p.ground_set)
    out["unique"] = uniqueness(rep)
    out["nonembedded"] = nonembedded(p)
    out["min_inequalities"] = min_inequalities(p, rep).to_dict()
    return out


def cmd_invariant(cfg: CliConfig) -> int:
    p = load(cfg)
    out = invariant_payload(p, cfg.verify_invariance)
    if cfg.output_format == "json":
        print(dump_json(out))
        return EXIT_OK
    rows = [
        {"element": x, "cost": p.costs[x], "T": out["tolerance_function"][x],
         "T_ext": out["extended"][x]}
        for x in p.ground_set
    ]
    print(render_table(rows, ("element", "cost", "T", "T_ext")))
    print()
    print(f"unique optimum: {_num(out['unique'])}")
    print(f"union of optima: {', '.join(out['union_opt'])}")
    print(f"intersection of optima: {', '.join(out['intersection_opt']) or '-'}")
    print(f"nonembedded: {_num(out['nonembedded'])}")
    m = out["min_inequalities"]
    if m["applicable"]:
        print("min inequalities: " + ", ".join(f"{k}={_num(v)}" for k, v in m["checks"].items()))
    else:
        print(f"min inequalities: not applicable ({m['reason']})")
    return EXIT_OK


def cmd_subtract(cfg: CliConfig) -> int:
    if cfg.op_override is None or cfg.w is None or cfg.v is None:
        raise InputError("subtract needs --op, --w and --v")
    op = from_spec(cfg.op_override)
    fn = upper_sub if cfg.side == "upper" else lower_sub
    res = fn(op, cfg.w, cfg.v)
    if cfg.output_format == "json":
        print(dump_json({"operation": op.spec(), "side": cfg.side, "w": cfg.w, "v": cfg.v,
                         "value": res.value, "method": res.method.value,
                         "residual": res.residual}))
    else:
        print(f"{_num(res.value)}  ({res.method.value}, residual {res.residual:.3g})")
    return EXIT_OK


def cmd_verify(cfg: CliConfig) -> int:
    if cfg.instances < 1:
        raise InputError("--instances must be at least 1")
    results = run_suite(cfg.seed, cfg.instances, cfg.only)
    failed = [r for r in results if not r.ok]
    if cfg.output_format == "json":
        print(dump_json({"seed": cfg.seed, "instances": cfg.instances,
                         "results": [r.to_dict() for r in results]}))
    else:
        rows = [{"module": r.module, "property": r.name, "passed": r.passed,
                 "failed": r.failed} for r in results]
        print(render_table(rows, ("module", "property", "passed", "failed")))
        print()
        total = sum(r.passed for r in results), sum(r.failed for r in results)
        print(f"{total[0]} passed, {total[1]} failed")
    if failed:
        first = failed[0]
        path = Path(cfg.repro or f"aopsens-repro-seed{cfg.seed}.json")
        path.write_text(dump_json({"seed": cfg.seed, "instances": cfg.instances,
                                   **first.to_dict()}) + "\n")
        print(f"first failure: {first.module}/{first.name}; reproducer written to {path}",
              file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_generate(cfg: CliConfig) -> int:
    graph = _read_json(cfg.input_path)
    op = from_spec(cfg.op_override or {"kind": "plus"})
    gen = generate_paths if cfg.mode == "paths" else generate_spanning_trees
    p = gen(graph, op)
    text = dump_json(p.to_dict()) + "\n"
    if cfg.output:
        Path(cfg.output).write_text(text)
        print(f"wrote {len(p.trajectories)} trajectories to {cfg.output}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {
    "analyze": cmd_analyze,
    "invariant": cmd_invariant,
    "subtract": cmd_subtract,
    "verify": cmd_verify,
    "generate": cmd_generate,
}


# -- argument parsing ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aopsens",
        allow_abbrev=False,
        description="Sensitivity analysis of discrete optimization problems "
                    "with generalized (A-operation) objectives.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, with_input=True):
        if with_input:
            sp.add_argument("input", help="problem JSON file")
        sp.add_argument("--format", dest="output_format", choices=("table", "json"),
                        default="table")
        sp.add_argument("--op", help="operation spec JSON, overrides the file's operation")

    sp = sub.add_parser("analyze", help="stability intervals and tolerances per element")
    common(sp)
    sp.add_argument("--intervals-only", action="store_true",
                    help="only stability intervals (allowed for nonstrict operations)")
    sp.add_argument("--verify-invariance", action="store_true",
                    help="recompute the tolerance function from every optimum")

    sp = sub.add_parser("invariant", help="tolerance function and optimal-set structure")
    common(sp)
    sp.add_argument("--verify-invariance", action="store_true")

    sp = sub.add_parser("subtract", help="evaluate an upper or lower subtraction")
    common(sp, with_input=False)
    sp.add_argument("--w", type=float, required=True)
    sp.add_argument("--v", type=float, required=True)
    sp.add_argument("--side", choices=("upper", "lower"), default="upper")

    sp = sub.add_parser("verify", help="run the randomized property suite")
    sp.add_argument("--format", dest="output_format", choices=("table", "json"),
                    default="table")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--instances", type=int, default=10)
    sp.add_argument("--only", choices=MODULES)
    sp.add_argument("--repro", help="reproducer file written on failure")

    sp = sub.add_parser("generate", help="build a problem file from a small graph")
    sp.add_argument("input", help="graph JSON file")
    sp.add_argument("--mode", choices=("paths", "trees"), default="paths")
    sp.add_argument("--op", help="operation spec JSON (default plus)")
    sp.add_argument("-o", "--output", help="output file (default stdout)")
    return parser


def parse_config(argv=None) -> tuple:
    args = build_parser().parse_args(argv)
    cfg = CliConfig(command=args.command)
    for key, value in vars(args).items():
        if key == "input":
            cfg.input_path = value
        elif key == "op":
            cfg.op_override = _parse_op(value)
        elif hasattr(cfg, key):
            setattr(cfg, key, value)
    return cfg, args.verbose


def main(argv=None) -> int:
    try:
        cfg, verbose = parse_config(argv)
    except (InputError, AopsensError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:  # argparse usage errors
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[cfg.command](cfg)
    except NotStrictError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_APPLICABILITY
    except AssertionError as exc:  # consistency checks inside the analyses
        print(f"verification failure: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (InputError, AopsensError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
