"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 invalid input,
3 inconsistent measured constants.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from typing import Any, Sequence

from . import observables as ob
from .core import (
    BarrierScenario,
    ConvergenceError,
    DomainError,
    DuctScenario,
    IllConditionedError,
    MeasurementInconsistency,
    Microstate,
    ObliqueScenario,
    UnitSystem,
    WellScenario,
    derive_wavenumbers,
    validate_microstate,
)
from .hj_engine import sample_trajectory
from .quantization import action_variable, level_of, symmetric_levels

EXIT_OK, EXIT_VERIFY, EXIT_INVALID, EXIT_INCONSISTENT = 0, 1, 2, 3
TOL_ENV = "QHJ_DEFAULT_TOL"
TRACE_HEADER = ("x", "t_minus_tau", "y_minus_y0", "p", "W")
SCENARIO_FLAGS = ("U", "Ex", "E", "ky", "q", "level", "hbar", "mass")


class UsageError(DomainError):
    pass


# -- number formatting -----------------------------------------------------------


def fmt(v: float) -> str:
    text = format(float(v), ".17g")
    if text.lstrip("-").isdigit():
        text += ".0"  # keep floats recognizable as floats
    return text


def dumps(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """JSON with every float written to 17 significant digits."""
    pad, inner = " " * (indent * _level), " " * (indent * (_level + 1))
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return json.dumps(obj)
    if isinstance(obj, float):
        return fmt(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [inner + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


# -- scenario ingestion ------------------------------------------------------------


def _number(data: dict, key: str, *aliases: str, default=None):
    for k in (key, *aliases):
        if k in data and data[k] is not None:
            v = data[k]
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise UsageError(f"scenario field {k!r} must be a number")
            return float(v)
    if default is None:
        raise UsageError(f"scenario field {key!r} is required")
    return default


def scenario_from_dict(data: dict):
    """Build a scenario from the JSON schema (``type`` in barrier/oblique/well/duct)."""
    if not isinstance(data, dict):
        raise UsageError("scenario must be a JSON object")
    kind = data.get("type")
    u = data.get("units") or {}
    if not isinstance(u, dict):
        raise UsageError("units must be an object")
    units = UnitSystem(_number(u, "hbar", default=1.0), _number(u, "mass", "m", default=1.0))
    if kind == "barrier":
        return BarrierScenario(_number(data, "U"), _number(data, "E_x", "Ex"), units)
    if kind == "oblique":
        return ObliqueScenario(_number(data, "U"), _number(data, "E"), _number(data, "k_y", "ky"), units)
    if kind in ("well", "duct"):
        n = _number(data, "n", "level", default=0.0)
        well = WellScenario(_number(data, "U"), _number(data, "q"), n, units)
        if kind == "well":
            return well
        return DuctScenario(well, _number(data, "k_y", "ky"))
    raise UsageError(f"scenario type must be one of barrier, oblique, well, duct (got {kind!r})")


def scenario_to_dict(scen) -> dict:
    units = {"hbar": scen.units.hbar, "mass": scen.units.mass}
    if isinstance(scen, BarrierScenario):
        return {"type": "barrier", "U": scen.U, "E_x": scen.E_x, "units": units}
    if isinstance(scen, ObliqueScenario):
        return {"type": "oblique", "U": scen.U, "E": scen.E, "k_y": scen.k_y, "units": units}
    if isinstance(scen, WellScenario):
        return {"type": "well", "U": scen.U, "q": scen.q, "n": scen.n, "units": units}
    return {"type": "duct", "U": scen.U, "q": scen.q, "n": scen.n, "k_y": scen.k_y, "units": units}


def _load_json(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc


def _inline_scenario(args):
    units = UnitSystem(args.hbar if args.hbar is not None else 1.0,
                       args.mass if args.mass is not None else 1.0)
    if args.q is not None:
        if args.U is None:
            raise UsageError("--U is required")
        well = WellScenario(args.U, args.q, args.level if args.level is not None else 0, units)
        return DuctScenario(well, args.ky) if args.ky is not None else well
    if args.E is not None or args.ky is not None:
        if args.U is None or args.E is None:
            raise UsageError("oblique incidence needs --U, --E and --ky")
        return ObliqueScenario(args.U, args.E, args.ky or 0.0, units)
    if args.U is None or args.Ex is None:
        raise UsageError("barrier scenario needs --U and --Ex (or --scenario FILE)")
    return BarrierScenario(args.U, args.Ex, units)


def resolve(args) -> tuple[Any, Microstate]:
    """Scenario and microstate from exactly one source; flags override file microstate."""
    inline = [f for f in SCENARIO_FLAGS if getattr(args, f, None) is not None]
    file_ms: dict = {}
    if getattr(args, "scenario", None):
        if inline:
            raise UsageError("give either --scenario or inline scenario flags, not both "
                             f"(got --scenario and --{inline[0]})")
        data = _load_json(args.scenario)
        scen = scenario_from_dict(data)
        file_ms = data.get("microstate") or {}
        if not isinstance(file_ms, dict):
            raise UsageError("microstate must be an object")
    else:
        scen = _inline_scenario(args)
    a = args.a if args.a is not None else _number(file_ms, "a", default=1.0)
    b = args.b if args.b is not None else _number(file_ms, "b", default=1.0)
    c = args.c if args.c is not None else _number(file_ms, "c", default=0.0)
    ms = Microstate(a, b, c)
    validate_microstate(ms)
    return scen, ms


def parse_grid(spec: str) -> list[float]:
    parts = spec.split(":")
    if len(parts) != 3:
        raise UsageError("--grid must be x_min:x_max:n")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise UsageError(f"--grid must be x_min:x_max:n ({exc})") from exc
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise UsageError("--grid bounds must be finite")
    if n < 1:
        raise UsageError("--grid needs at least one point")
    if n == 1:
        if lo != hi:
            raise UsageError("a one-point grid needs x_min == x_max")
        return [lo]
    if not lo < hi:
        raise UsageError("--grid needs x_min < x_max")
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n - 1)] + [hi]


def default_tol(args) -> float:
    if args.tol is not None:
        tol = args.tol
    else:
        raw = os.environ.get(TOL_ENV)
        try:
            tol = float(raw) if raw else ob.DEFAULT_CONSISTENCY_TOL
        except ValueError as exc:
            raise UsageError(f"{TOL_ENV} must be a number (got {raw!r})") from exc
    if not (math.isfinite(tol) and tol > 0):
        raise UsageError(f"tolerance must be finite and > 0 (got {tol!r})")
    return tol


# -- output ----------------------------------------------------------------------------


def emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _report(record: dict, fmt_name: str) -> str:
    if fmt_name == "json":
        return dumps(record) + "\n"
    lines = []

    def walk(prefix, obj):
        if isinstance(obj, dict):
            for k, v in obj.items():
                walk(f"{prefix}{k}." if isinstance(v, dict) else f"{prefix}{k}", v)
        elif isinstance(obj, (list, tuple)):
            lines.append(f"{prefix} = " + ", ".join(fmt(v) if isinstance(v, float) else str(v) for v in obj))
        elif isinstance(obj, float):
            lines.append(f"{prefix} = {fmt(obj)}")
        else:
            lines.append(f"{prefix} = {obj}")

    walk("", record)
    return "\n".join(lines) + "\n"


def trajectory_csv(points) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for p in points:
        w.writerow([fmt(getattr(p, name)) for name in TRACE_HEADER])
    return buf.getvalue()


# -- commands ----------------------------------------------------------------------------


def cmd_reflect(args) -> int:
    scen, ms = resolve(args)
    if not isinstance(scen, (BarrierScenario, ObliqueScenario)):
        raise UsageError("reflect needs a barrier or oblique scenario")
    k, kappa = derive_wavenumbers(scen)
    rec: dict = {"t_R": ob.reflection_time_barrier(scen, ms), "k_x": k, "kappa": kappa}
    if isinstance(scen, ObliqueScenario):
        rec["delta_y"] = ob.gh_displacement_barrier(scen, ms)
    rec["microstate"] = ms.as_dict()
    rec["scenario"] = scenario_to_dict(scen)
    emit(_report(rec, args.format or "text"), args.out)
    return EXIT_OK


def cmd_trace(args) -> int:
    if not args.grid:
        raise UsageError("trace needs --grid x_min:x_max:n")
    grid = parse_grid(args.grid)
    scen, ms = resolve(args)
    pts = sample_trajectory(grid, scen, ms)
    if (args.format or "csv") == "csv":
        emit(trajectory_csv(pts), args.out)
    else:
        rows = [{name: getattr(p, name) for name in TRACE_HEADER} for p in pts]
        emit(dumps({"scenario": scenario_to_dict(scen), "microstate": ms.as_dict(),
                    "points": rows}) + "\n", args.out)
    return EXIT_OK


def cmd_well(args) -> int:
    scen, ms = resolve(args)
    if isinstance(scen, DuctScenario):
        scen = scen.well
    if not isinstance(scen, WellScenario):
        raise UsageError("well needs a well scenario (--U and --q)")
    levels = symmetric_levels(scen.U, scen.q, scen.units)
    lvl = level_of(scen)
    t_plus, t_minus = ob.reflection_times_well(scen, ms)
    h = 2.0 * math.pi * scen.units.hbar
    rec = {
        "levels": [{"n": L.n, "E_x": L.E_x, "k_x": L.k_x, "kappa": L.kappa, "residual": L.residual}
                   for L in levels],
        "level": lvl.n,
        "t_plus_R": t_plus,
        "t_minus_R": t_minus,
        "t_libration": ob.libration_period(scen, ms),
        "J_over_h": action_variable(lvl, ms, scen) / h,
        "microstate": ms.as_dict(),
        "scenario": scenario_to_dict(scen),
    }
    if (args.format or "text") == "json":
        emit(dumps(rec) + "\n", args.out)
        return EXIT_OK
    lines = [f"{len(levels)} symmetric level(s)"]
    lines += [f"  n={L.n}  E_x = {fmt(L.E_x)}  residual = {fmt(L.residual)}" for L in levels]
    for key in ("level", "t_plus_R", "t_minus_R", "t_libration", "J_over_h"):
        v = rec[key]
        lines.append(f"{key} = {fmt(v) if isinstance(v, float) else v}")
    emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_duct(args) -> int:
    scen, ms = resolve(args)
    if not isinstance(scen, DuctScenario):
        raise UsageError("duct needs a duct scenario (--U, --q and --ky)")
    dy_plus, dy_minus = ob.gh_displacements_duct(scen, ms)
    rec = {
        "dy_plus_R": dy_plus,
        "dy_minus_R": dy_minus,
        "dy_libration": ob.libration_displacement(scen, ms),
        "motion_constants": ob.motion_constants(scen, ms).as_dict(),
        "microstate": ms.as_dict(),
        "scenario": scenario_to_dict(scen),
    }
    emit(_report(rec, args.format or "text"), args.out)
    return EXIT_OK


def cmd_invert(args) -> int:
    data = _load_json(args.constants)
    if not isinstance(data, dict):
        raise UsageError("constants file must hold a JSON object")
    consts = data.get("constants", data)
    if "scenario" in data and not getattr(args, "scenario", None) and not any(
            getattr(args, f, None) is not None for f in SCENARIO_FLAGS):
        scen = scenario_from_dict(data["scenario"])
    else:
        scen, _ = resolve(args)
    if not isinstance(scen, DuctScenario):
        raise UsageError("invert needs a duct scenario")
    try:
        mc = ob.MotionConstants.from_dict(consts)
    except (KeyError, TypeError) as exc:
        raise UsageError(f"constants record incomplete: {exc}") from exc
    tol = default_tol(args)
    rep = ob.overdetermination_check(mc, scen, tol)
    rec = {"recovered": rep.microstate.as_dict(), **{k: v for k, v in rep.as_dict().items()
                                                        if k != "microstate"}}
    emit(_report(rec, args.format or "text"), args.out)
    if not rep.passed:
        sys.stderr.write(f"overdetermination check failed: discrepancy {fmt(rep.discrepancy)} "
                         f"exceeds tolerance {fmt(tol)}\n")
        return EXIT_INCONSISTENT
    return EXIT_OK


def cmd_verify(args) -> int:
    from .oracle import DEFAULT_MICROSTATES, default_scenarios, run_verification

    scenarios = default_scenarios()
    microstates = list(DEFAULT_MICROSTATES)
    if getattr(args, "scenario", None) or any(getattr(args, f, None) is not None for f in SCENARIO_FLAGS):
        scen, ms = resolve(args)
        scenarios.append(scen)
        microstates.append(ms)
    variant = "printed" if args.inject_misprint else "continuation"
    results = run_verification(scenarios, microstates, tol_scale=args.tol_scale, theta_variant=variant)
    failed = [r for r in results if not r.passed]
    as_json = args.json or args.format == "json"
    if as_json:
        text = dumps({"passed": not failed, "n_checks": len(results), "n_failed": len(failed),
                      "checks": [r.as_dict() for r in results]}) + "\n"
    else:
        lines = [f"{'PASS' if r.passed else 'FAIL'}  {r.name}  discrepancy={r.discrepancy:.3e}  "
                 f"tol={r.tolerance:.1e}" + (f"  ({r.detail})" if r.detail else "") for r in results]
        lines.append(f"{len(results) - len(failed)}/{len(results)} checks passed")
        text = "\n".join(lines) + "\n"
    emit(text, args.out)
    return EXIT_VERIFY if failed else EXIT_OK


# -- parser --------------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, fmt_choices: Sequence[str] = ("text", "json")) -> None:
    g = p.add_argument_group("scenario")
    g.add_argument("--scenario", metavar="FILE", help="JSON scenario file (excludes inline flags)")
    g.add_argument("--U", type=float, help="barrier height / well depth")
    g.add_argument("--Ex", type=float, help="energy of the x motion (barrier)")
    g.add_argument("--E", type=float, help="total energy (oblique incidence)")
    g.add_argument("--ky", type=float, help="transverse wavenumber")
    g.add_argument("--q", type=float, help="well half width")
    g.add_argument("--level", type=int, help="symmetric level index n (default 0)")
    g.add_argument("--hbar", type=float)
    g.add_argument("--mass", type=float)
    m = p.add_argument_group("microstate")
    m.add_argument("--a", type=float)
    m.add_argument("--b", type=float)
    m.add_argument("--c", type=float)
    p.add_argument("--format", choices=fmt_choices)
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--tol", type=float, help=f"relative tolerance (default ${TOL_ENV} or 1e-6)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qhj", description="Trajectory-representation observables "
                                     "for step barriers and square wells.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("reflect", help="reflection time (and lateral shift) at a barrier")
    _common(p)
    p.set_defaults(func=cmd_reflect)
    p = sub.add_parser("trace", help="sample a trajectory on a grid")
    _common(p, ("csv", "json"))
    p.add_argument("--grid", metavar="XMIN:XMAX:N")
    p.set_defaults(func=cmd_trace)
    p = sub.add_parser("well", help="levels and libration observables of a square well")
    _common(p)
    p.set_defaults(func=cmd_well)
    p = sub.add_parser("duct", help="lateral shifts and constants of the motion in a duct")
    _common(p)
    p.set_defaults(func=cmd_duct)
    p = sub.add_parser("invert", help="recover (a, b, c) from measured constants")
    p.add_argument("constants", metavar="CONSTANTS_JSON")
    _common(p)
    p.set_defaults(func=cmd_invert)
    p = sub.add_parser("verify", help="run the numerical oracle suite")
    _common(p)
    p.add_argument("--json", action="store_true", help="machine-readable report")
    p.add_argument("--tol-scale", type=float, default=1.0, help="multiply every check tolerance")
    p.add_argument("--inject-misprint", action="store_true",
                   help=argparse.SUPPRESS)  # debug: use the misprinted well theta
    p.set_defaults(func=cmd_verify)
    return parser


def _join_negative_values(argv: Sequence[str]) -> list[str]:
    # argparse reads "--grid -2:0:5" as two options; glue such values on
    out: list[str] = []
    it = iter(argv)
    for tok in it:
        if tok in ("--grid", "--U", "--Ex", "--E", "--ky", "--q", "--a", "--b", "--c", "--tol"):
            nxt = next(it, None)
            if nxt is not None and nxt.startswith("-"):
                out.append(f"{tok}={nxt}")
                continue
            out.append(tok)
            if nxt is not None:
                out.append(nxt)
            continue
        out.append(tok)
    return out


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(_join_negative_values(sys.argv[1:] if argv is None else argv))
    try:
        return args.func(args)
    except MeasurementInconsistency as exc:
        sys.stderr.write(f"error: inconsistent measurements: {exc}\n")
        return EXIT_INCONSISTENT
    except (DomainError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    except (ConvergenceError, IllConditionedError, OverflowError) as exc:
        sys.stderr.write(f"error: numerical failure: {exc}\n")
        return EXIT_VERIFY


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
