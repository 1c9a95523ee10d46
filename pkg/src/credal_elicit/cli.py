"""Command-line front end.

Scenario files are JSON objects::

    {
      "outcomes": [0, 1],
      "credal": {"generators": [[1, 0], [0.5, 0.5]]}
                | {"bounds": {"lower": [...], "upper": [...]}},
      "loss": {"kind": "squared" | "absolute" | "pinball" | "entropic",
               "tau": 0.3, "gamma": 1.0},
      "domain": {"lo": -1, "hi": 2},
      "solver": {"theta_tol": 1e-9, "value_tol": 1e-10,
                 "flat_tol": 1e-12, "max_iters": 200}
    }

Exit status: 0 success, 1 verification checks failed, 2 input error,
3 solver error.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, replace
from typing import Any, Optional

import numpy as np

from . import __version__
from .bayes import bayes_pair, check_inclusion
from .core import (
    CredalError,
    CredalSet,
    Distribution,
    IntervalBounds,
    OutcomeSpace,
    bounds_to_generators,
)
from .lab import TrialConfig, run_suite
from .losses import LossSpec, RiskOverflowError
from .solver import PropertyDomain, SolverError, SolverParams, elicit

log = logging.getLogger("credal_elicit")

EXIT_OK, EXIT_CHECKS_FAILED, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2, 3


class ScenarioError(ValueError):
    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where


@dataclass(frozen=True)
class Scenario:
    space: OutcomeSpace
    credal: CredalSet
    loss: LossSpec
    domain: PropertyDomain
    solver: SolverParams
    raw: dict


def _require(obj: dict, key: str, where: str):
    if not isinstance(obj, dict):
        raise ScenarioError(where, "expected an object")
    if key not in obj:
        raise ScenarioError(f"{where}.{key}".lstrip("."), "missing field")
    return obj[key]


def _numbers(value, where: str) -> list[float]:
    if not isinstance(value, list) or not value:
        raise ScenarioError(where, "expected a non-empty list of numbers")
    out = []
    for i, v in enumerate(value):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ScenarioError(f"{where}[{i}]", f"expected a finite number, got {v!r}")
        out.append(float(v))
    return out


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ScenarioError(where, f"expected a finite number, got {value!r}")
    return float(value)


def _wrap(where: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (CredalError, ValueError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(where, str(exc)) from None


def parse_loss(obj, where="loss") -> LossSpec:
    kind = _require(obj, "kind", where)
    unknown = set(obj) - {"kind", "tau", "gamma"}
    if unknown:
        raise ScenarioError(where, f"unknown fields {sorted(unknown)}")
    tau = obj.get("tau")
    gamma = obj.get("gamma")
    if tau is not None:
        tau = _number(tau, f"{where}.tau")
    if gamma is not None:
        gamma = _number(gamma, f"{where}.gamma")
    return _wrap(where, LossSpec, kind, tau, gamma)


def parse_solver(obj, where="solver", base: Optional[SolverParams] = None) -> SolverParams:
    base = base or SolverParams()
    if obj is None:
        return base
    if not isinstance(obj, dict):
        raise ScenarioError(where, "expected an object")
    fields = {"theta_tol", "value_tol", "flat_tol", "max_iters"}
    unknown = set(obj) - fields
    if unknown:
        raise ScenarioError(where, f"unknown fields {sorted(unknown)}")
    kw = {}
    for k, v in obj.items():
        kw[k] = int(_number(v, f"{where}.{k}")) if k == "max_iters" else _number(v, f"{where}.{k}")
    return _wrap(where, replace, base, **kw)


def parse_scenario(raw: Any) -> Scenario:
    """Validate a decoded scenario object; errors name the offending field."""
    if not isinstance(raw, dict):
        raise ScenarioError("", "scenario must be a JSON object")
    unknown = set(raw) - {"outcomes", "credal", "loss", "domain", "solver", "name", "description"}
    if unknown:
        raise ScenarioError("", f"unknown top-level fields {sorted(unknown)}")
    pts = _numbers(_require(raw, "outcomes", ""), "outcomes")
    space = _wrap("outcomes", OutcomeSpace, pts)

    credal_raw = _require(raw, "credal", "")
    if not isinstance(credal_raw, dict) or len(set(credal_raw) & {"generators", "bounds"}) != 1:
        raise ScenarioError("credal", "expected exactly one of 'generators' or 'bounds'")
    if "generators" in credal_raw:
        gens_raw = credal_raw["generators"]
        if not isinstance(gens_raw, list) or not gens_raw:
            raise ScenarioError("credal.generators", "expected a non-empty list of weight vectors")
        gens = []
        for i, w in enumerate(gens_raw):
            where = f"credal.generators[{i}]"
            gens.append(_wrap(where, Distribution, space, _numbers(w, where)))
        credal = CredalSet(space, tuple(gens))
    else:
        b = credal_raw["bounds"]
        lower = _numbers(_require(b, "lower", "credal.bounds"), "credal.bounds.lower")
        upper = _numbers(_require(b, "upper", "credal.bounds"), "credal.bounds.upper")
        bounds = _wrap("credal.bounds", IntervalBounds, space, lower, upper)
        credal = _wrap("credal.bounds", bounds_to_generators, bounds)

    loss = parse_loss(_require(raw, "loss", ""))
    dom_raw = _require(raw, "domain", "")
    domain = _wrap("domain", PropertyDomain,
                   _number(_require(dom_raw, "lo", "domain"), "domain.lo"),
                   _number(_require(dom_raw, "hi", "domain"), "domain.hi"))
    solver = parse_solver(raw.get("solver"))
    return Scenario(space, credal, loss, domain, solver, raw)


def read_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioError(path, f"cannot read file: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(path, f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def load_scenario(path: str, tol: Optional[float] = None) -> Scenario:
    sc = parse_scenario(read_json(path))
    if tol is not None:
        sc = replace(sc, solver=_wrap("--tol", replace, sc.solver, theta_tol=tol))
    return sc


# -- commands ---------------------------------------------------------------

def run_elicit(sc: Scenario) -> dict:
    return elicit(sc.credal, sc.loss, sc.domain, sc.solver).to_dict()


def run_bayes(sc: Scenario) -> dict:
    pairs = [bayes_pair(sc.loss, g, sc.domain).to_dict() for g in sc.credal.generators]
    return {"bayes_pairs": pairs}


def run_worstcase(sc: Scenario) -> dict:
    rep = check_inclusion(sc.credal, sc.loss, sc.domain, sc.solver)
    return {"worst_case": rep.worst_case.to_dict(), "inclusion": rep.to_dict()}


COMMANDS = {"elicit": run_elicit, "bayes": run_bayes, "worstcase": run_worstcase}


def parse_config(raw: Any, seed: Optional[int] = None, tol: Optional[float] = None) -> TrialConfig:
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ScenarioError("", "config must be a JSON object")
    known = {"seed", "n_outcomes", "n_generators", "losses", "trials", "solver",
             "check_tol", "workers", "name", "description"}
    unknown = set(raw) - known
    if unknown:
        raise ScenarioError("", f"unknown config fields {sorted(unknown)}")
    kw: dict[str, Any] = {}
    for key in ("seed", "n_outcomes", "n_generators", "trials", "workers"):
        if key in raw:
            v = raw[key]
            if isinstance(v, bool) or not isinstance(v, int):
                raise ScenarioError(key, f"expected an integer, got {v!r}")
            kw[key] = v
    if "check_tol" in raw:
        kw["check_tol"] = _number(raw["check_tol"], "check_tol")
    if "losses" in raw:
        ls = raw["losses"]
        if not isinstance(ls, list) or not ls:
            raise ScenarioError("losses", "expected a non-empty list")
        kw["losses"] = tuple(parse_loss(l, f"losses[{i}]") for i, l in enumerate(ls))
    params = parse_solver(raw.get("solver"))
    if tol is not None:
        params = _wrap("--tol", replace, params, theta_tol=tol)
    kw["tolerances"] = params
    if seed is not None:
        kw["seed"] = seed
    return _wrap("config", lambda: TrialConfig(**kw))


def parse_range(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise ScenarioError("--range", "expected START:STOP:NUM")
    try:
        start, stop, num = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ScenarioError("--range", f"cannot parse {text!r}") from None
    if num < 1:
        raise ScenarioError("--range", "empty range")
    return np.linspace(start, stop, num)


def set_path(obj: dict, path: str, value: float) -> None:
    """Assign ``value`` at a dotted path such as ``credal.bounds.upper.1``."""
    keys = path.split(".")
    cur: Any = obj
    try:
        for k in keys[:-1]:
            cur = cur[int(k)] if isinstance(cur, list) else cur[k]
        last = keys[-1]
        if isinstance(cur, list):
            cur[int(last)] = value
        elif isinstance(cur, dict) and (last in cur or keys[0] in ("loss", "solver", "domain")):
            cur[last] = value
        else:
            raise KeyError(last)
    except (KeyError, IndexError, ValueError, TypeError):
        raise ScenarioError("--param", f"no such scenario field {path!r}") from None


def run_sweep(raw: dict, param: str, values: np.ndarray, tol: Optional[float]) -> dict:
    rows = []
    for v in values:
        variant = copy.deepcopy(raw)
        set_path(variant, param, float(v))
        sc = parse_scenario(variant)
        if tol is not None:
            sc = replace(sc, solver=_wrap("--tol", replace, sc.solver, theta_tol=tol))
        res = elicit(sc.credal, sc.loss, sc.domain, sc.solver)
        rows.append({"param": float(v), "argmin": res.argmin.to_list(), "value": res.value})
    return {"parameter": param, "rows": rows}


# -- output -----------------------------------------------------------------

def _g(x) -> str:
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def csv_rows(command: str, result: dict) -> tuple[list[str], list[list]]:
    if command == "elicit":
        return (["interval", "lo", "hi", "value"],
                [[i, a, b, result["value"]] for i, (a, b) in enumerate(result["argmin"])])
    if command == "bayes":
        rows = []
        for i, p in enumerate(result["bayes_pairs"]):
            for a, b in p["theta_set"]:
                rows.append([i, a, b, p["risk"], p["clamped"]])
        return ["generator", "theta_lo", "theta_hi", "risk", "clamped"], rows
    if command == "worstcase":
        wc, inc = result["worst_case"], result["inclusion"]
        return (["outcome_index", "p_star", "bayes_risk", "certificate_gap", "inclusion_holds"],
                [[i, p, wc["bayes_risk"], wc["certificate_gap"], inc["holds"]]
                 for i, p in enumerate(wc["distribution"])])
    if command == "verify":
        return (["check_name", "trials_run", "failures", "max_violation", "tolerance"],
                [[r["check_name"], r["trials_run"], len(r["failures"]), r["max_violation"],
                  r["tolerance"]] for r in result["checks"]])
    if command == "sweep":
        return (["param", "argmin_lo", "argmin_hi", "value"],
                [[r["param"], r["argmin"][0][0], r["argmin"][-1][1], r["value"]]
                 for r in result["rows"]])
    raise ValueError(command)


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2, allow_nan=True) + "\n"
    header, rows = csv_rows(report["command"], report["result"])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_g(x) for x in row])
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, help="override the minimizer tolerance theta_tol")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", help="write the report to this file instead of stdout")
    common.add_argument("--quiet", action="store_true", help="suppress diagnostics on stderr")

    p = argparse.ArgumentParser(prog="credal-elicit",
                                description="Gamma-maximin property elicitation over credal sets.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (("elicit", "minimize the upper risk"),
                        ("bayes", "Bayes pair of each generator"),
                        ("worstcase", "maximum Bayes-risk distribution and inclusion check")):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.add_argument("scenario")
    vp = sub.add_parser("verify", parents=[common], help="run the randomized property suite")
    vp.add_argument("config", nargs="?", help="harness config JSON (defaults built in)")
    vp.add_argument("--seed", type=int)
    swp = sub.add_parser("sweep", parents=[common], help="elicit across a parameter range")
    swp.add_argument("scenario")
    swp.add_argument("--param", required=True, help="dotted scenario path, e.g. credal.bounds.upper.1")
    swp.add_argument("--range", required=True, dest="range_", metavar="START:STOP:NUM")
    return p


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, matching the input-error status
        return int(exc.code or 0)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    start = time.perf_counter()
    status = EXIT_OK
    try:
        if args.command in COMMANDS:
            sc = load_scenario(args.scenario, args.tol)
            echo = sc.raw
            result = COMMANDS[args.command](sc)
        elif args.command == "verify":
            raw = read_json(args.config) if args.config else None
            cfg = parse_config(raw, args.seed, args.tol)
            echo = {"seed": cfg.seed, "n_outcomes": cfg.n_outcomes,
                    "n_generators": cfg.n_generators, "trials": cfg.trials,
                    "losses": [l.to_dict() for l in cfg.losses],
                    "check_tol": cfg.check_tol, "workers": cfg.workers,
                    "solver": vars_params(cfg.tolerances)}
            reports = run_suite(cfg)
            result = {"checks": [r.to_dict() for r in reports],
                      "all_passed": all(r.passed for r in reports)}
            for r in reports:
                log.info("%-28s trials=%-4d failures=%d max_violation=%.3g",
                         r.check_name, r.trials_run, len(r.failures), r.max_violation)
            if not result["all_passed"]:
                status = EXIT_CHECKS_FAILED
        else:
            raw = read_json(args.scenario)
            parse_scenario(raw)
            values = parse_range(args.range_)
            echo = raw
            result = run_sweep(raw, args.param, values, args.tol)
    except ScenarioError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SolverError, RiskOverflowError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    report = {
        "artifact": "credal-elicit",
        "version": __version__,
        "command": args.command,
        "scenario": echo,
        "result": result,
        "duration_s": time.perf_counter() - start,
    }
    text = render(report, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


def vars_params(p: SolverParams) -> dict:
    return {"theta_tol": p.theta_tol, "value_tol": p.value_tol,
            "flat_tol": p.flat_tol, "max_iters": p.max_iters}


if __name__ == "__main__":
    sys.exit(main())
