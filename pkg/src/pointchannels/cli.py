"""Command line front end.

Subcommands take a JSON config describing the channel system and emit a
versioned JSON report on stdout; table side files (bands, gaps, kernels) are
written only when --out-dir is given. Exit codes: 0 ok, 2 config/parse
problem, 3 invalid boundary condition, 4 reduction demanded but impossible,
5 numeric failure (singular resolvent, no transfer form, coarse windows).
"""

import argparse
import csv
import json
import os
import sys
import time
import warnings

import numpy as np

from . import bc as bc_mod
from .errors import (
    DegenerateSubspace,
    NotConnecting,
    NotReducible,
    NotRegular,
    NotSelfAdjoint,
    NotSimultaneouslyDiagonalizable,
    OnEssentialSpectrum,
    ParseError,
    PointChannelsError,
    RankDeficient,
    ShapeMismatch,
    WindowTooCoarse,
)
from .reduction import ChannelSystem, InteractionPoint, continuity_class, is_reducible, reduce_system
from .resolvent import KreinSystem, find_bound_states, green_kernel
from .spectrum import (
    PeriodicSystem,
    floquet_min_absdet,
    gap_report,
    periodic_spectrum,
)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_INVALID_BC = 3
EXIT_NOT_REDUCIBLE = 4
EXIT_NUMERIC = 5

_INVALID_BC_ERRORS = (NotSelfAdjoint, RankDeficient, ShapeMismatch, DegenerateSubspace)
_NUMERIC_ERRORS = (
    NotRegular,
    NotSimultaneouslyDiagonalizable,
    WindowTooCoarse,
    OnEssentialSpectrum,
    NotConnecting,
)


def _load_config(path):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ParseError("cannot read config %r: %s" % (path, exc))
    except json.JSONDecodeError as exc:
        raise ParseError("config %r is not valid JSON: %s" % (path, exc))
    if not isinstance(cfg, dict):
        raise ParseError("config root must be a JSON object")
    return cfg


def _config_points(cfg, tol_scale):
    if "n" not in cfg or "points" not in cfg:
        raise ParseError("config needs 'n' and 'points'")
    n = int(cfg["n"])
    pts = []
    for i, entry in enumerate(cfg["points"]):
        if not isinstance(entry, dict) or "q" not in entry or "bc" not in entry:
            raise ParseError("points[%d] must be {'q': ..., 'bc': {...}}" % i)
        form = bc_mod.form_from_json(entry["bc"], n=n, tol_scale=tol_scale)
        pts.append(InteractionPoint(float(entry["q"]), form))
    return n, pts


def _report(task, cfg, results, warning_list, t0):
    return {
        "schema": "1",
        "task": task,
        "inputs": cfg,
        "results": results,
        "warnings": sorted(set(warning_list)),
        "wall_time_s": time.perf_counter() - t0,
    }


def _emit(report):
    print(json.dumps(report, indent=2, sort_keys=True))


def _write_csv(out_dir, name, header, rows):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, name), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def cmd_validate(args):
    t0 = time.perf_counter()
    cfg = _load_config(args.config)
    if "n" not in cfg or "points" not in cfg:
        raise ParseError("config needs 'n' and 'points'")
    n = int(cfg["n"])
    verdicts = []
    any_invalid = False
    caught = []
    with warnings.catch_warnings(record=True) as wrec:
        warnings.simplefilter("always")
        for i, entry in enumerate(cfg["points"]):
            if not isinstance(entry, dict) or "q" not in entry or "bc" not in entry:
                raise ParseError("points[%d] must be {'q': ..., 'bc': {...}}" % i)
            item = {"q": float(entry["q"])}
            try:
                form = bc_mod.form_from_json(entry["bc"], n=n, tol_scale=args.tol_scale)
            except _INVALID_BC_ERRORS as exc:
                any_invalid = True
                item["valid"] = False
                item["error"] = "%s: %s" % (type(exc).__name__, exc)
                verdicts.append(item)
                continue
            item["valid"] = True
            item["connecting"] = bc_mod.is_connecting(form)
            item["continuity"] = sorted(kind.value for kind in continuity_class(form))
            verdicts.append(item)
        caught = [str(w.message) for w in wrec]
    _emit(_report("validate", cfg, {"points": verdicts}, caught, t0))
    return EXIT_INVALID_BC if any_invalid else EXIT_OK


def cmd_convert(args):
    t0 = time.perf_counter()
    cfg = _load_config(args.config)
    target = cfg.get("task", {}).get("to", args.to)
    if target not in ("ab", "u", "lm", "transfer"):
        raise ParseError("convert target must be one of ab/u/lm/transfer")
    n, pts = _config_points(cfg, args.tol_scale)
    out = []
    with warnings.catch_warnings(record=True) as wrec:
        warnings.simplefilter("always")
        for p in pts:
            ab = p.bc.as_ab()
            if target == "ab":
                converted = ab
            elif target == "u":
                converted = bc_mod.ab_to_u(ab)
            elif target == "lm":
                converted = bc_mod.ab_to_lm(ab)
            else:
                converted = bc_mod.ab_to_transfer(ab)
            out.append({"q": p.q, "bc": bc_mod.form_to_json(converted)})
        caught = [str(w.message) for w in wrec]
    _emit(_report("convert", cfg, {"points": out, "to": target}, caught, t0))
    return EXIT_OK


def cmd_reduce(args):
    t0 = time.perf_counter()
    cfg = _load_config(args.config)
    n, pts = _config_points(cfg, args.tol_scale)
    system = ChannelSystem(n, pts)
    rng = np.random.default_rng(args.seed)
    with warnings.catch_warnings(record=True) as wrec:
        warnings.simplefilter("always")
        report = is_reducible(system)
        if not report:
            results = {"reducible": False, "witness": _witness_json(report.witness)}
            caught = [str(w.message) for w in wrec]
            _emit(_report("reduce", cfg, results, caught, t0))
            return EXIT_NOT_REDUCIBLE
        red = reduce_system(system, rng=rng)
        results = {"reducible": True}
        results.update(red.to_json_dict())
        caught = [str(w.message) for w in wrec]
    _emit(_report("reduce", cfg, results, caught, t0))
    return EXIT_OK


def _witness_json(witness):
    if witness is None:
        return None
    return {
        "kind": witness["kind"],
        "blocks": [[q, j, k] for q, j, k in witness["blocks"]],
        "residual": witness["residual"],
        "threshold": witness["threshold"],
    }


def cmd_spectrum(args):
    t0 = time.perf_counter()
    cfg = _load_config(args.config)
    n, pts = _config_points(cfg, args.tol_scale)
    if "period" not in cfg:
        raise ParseError("spectrum needs a 'period' in the config")
    if len(pts) != 1:
        raise ParseError("spectrum supports exactly one condition per period cell")
    task = cfg.get("task", {})
    e_max = args.emax if args.emax is not None else float(task.get("e_max", 100.0))
    system = PeriodicSystem(n, float(cfg["period"]), pts[0].bc)
    rng = np.random.default_rng(args.seed)

    with warnings.catch_warnings(record=True) as wrec:
        warnings.simplefilter("always")
        try:
            bands = periodic_spectrum(system, e_max, rng=rng)
        except NotReducible as exc:
            results = _floquet_fallback(system, e_max, task, exc)
            caught = [str(w.message) for w in wrec]
            _emit(_report("spectrum", cfg, results, caught, t0))
            return EXIT_OK
        gaps = gap_report(bands)
        caught = [str(w.message) for w in wrec]

    results = bands.to_json_dict()
    results["gaps"] = [[g.lo, g.hi, g.width] for g in gaps]
    if args.out_dir:
        _write_csv(
            args.out_dir,
            "bands.csv",
            ["band_index", "e_lo", "e_hi"],
            [[i, lo, hi] for i, (lo, hi) in enumerate(bands.bands)],
        )
        _write_csv(
            args.out_dir,
            "gaps.csv",
            ["gap_index", "e_lo", "e_hi", "width"],
            [[i, g.lo, g.hi, g.width] for i, g in enumerate(gaps)],
        )
    _emit(_report("spectrum", cfg, results, caught, t0))
    return EXIT_OK


def _floquet_fallback(system, e_max, task, exc):
    num = int(task.get("grid", 2001))
    energies = np.linspace(0.0, e_max, num)[1:]
    mins = floquet_min_absdet(system, energies)
    inside = mins < 1e-6
    intervals = []
    start = None
    for e, flag in zip(energies, inside):
        if flag and start is None:
            start = e
        elif not flag and start is not None:
            intervals.append([start, float(prev)])
            start = None
        prev = e
    if start is not None:
        intervals.append([start, float(energies[-1])])
    return {
        "notice": "condition is not reducible; Bloch determinant indicator used",
        "witness": _witness_json(exc.witness),
        "indicator_bands": intervals,
        "grid": [float(energies[0]), float(energies[-1]), len(energies)],
    }


def cmd_resolvent(args):
    t0 = time.perf_counter()
    cfg = _load_config(args.config)
    n, pts = _config_points(cfg, args.tol_scale)
    system = ChannelSystem(n, pts)
    task = cfg.get("task", {})
    results = {}
    caught = []

    with warnings.catch_warnings(record=True) as wrec:
        warnings.simplefilter("always")
        if "window" in task:
            lo, hi = (float(v) for v in task["window"])
            states = find_bound_states(system, lo, hi)
            results["bound_states"] = [
                {"energy": st.energy, "multiplicity": st.multiplicity} for st in states
            ]
        if "zeta" in task:
            zeta = _parse_complex(task["zeta"])
            grid = task.get("grid", {"lo": -1.0, "hi": 1.0, "num": 9})
            xs = np.linspace(float(grid["lo"]), float(grid["hi"]), int(grid["num"]))
            try:
                rows = []
                kernel_diag = []
                for x in xs:
                    for y in xs:
                        gmat = green_kernel(system, zeta, x, y)
                        if x == y:
                            kernel_diag.append(
                                {"x": float(x), "g": _mat_json(gmat)}
                            )
                        for j in range(n):
                            for k in range(n):
                                rows.append(
                                    [x, y, j, k, gmat[j, k].real, gmat[j, k].imag]
                                )
                results["kernel_diagonal"] = kernel_diag
                if args.out_dir:
                    _write_csv(
                        args.out_dir,
                        "kernel.csv",
                        ["x", "y", "j", "k", "re_g", "im_g"],
                        rows,
                    )
            except NotRegular:
                window_lo = min(-1.0, 4.0 * zeta.real)
                states = find_bound_states(system, window_lo, 0.0)
                results["error"] = "zeta is not regular (in or near the discrete spectrum)"
                results["nearest_bound_states"] = [
                    {"energy": st.energy, "multiplicity": st.multiplicity} for st in states
                ]
                caught = [str(w.message) for w in wrec]
                _emit(_report("resolvent", cfg, results, caught, t0))
                return EXIT_NUMERIC
        caught = [str(w.message) for w in wrec]

    if not results:
        raise ParseError("resolvent task needs 'window' and/or 'zeta'")
    _emit(_report("resolvent", cfg, results, caught, t0))
    return EXIT_OK


def _parse_complex(obj):
    if isinstance(obj, (int, float)):
        return complex(obj)
    if isinstance(obj, (list, tuple)) and len(obj) == 2:
        return complex(float(obj[0]), float(obj[1]))
    raise ParseError("complex values are a number or an [re, im] pair")


def _mat_json(mat):
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(mat)]


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pointchannels",
        description="Boundary conditions, reductions, resolvents and band spectra "
        "for point-coupled channels on the line",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="path to a JSON system description")
    common.add_argument("--tol-scale", type=float, default=1.0, dest="tol_scale",
                        help="scale factor on validation tolerances")
    common.add_argument("--emax", type=float, default=None,
                        help="energy window cap (spectrum tasks)")
    common.add_argument("--out-dir", default=None, dest="out_dir",
                        help="directory for CSV side files")
    common.add_argument("--seed", type=int, default=0,
                        help="seed for the randomized reduction basis search")

    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("validate", parents=[common], help="check boundary conditions")
    p.set_defaults(func=cmd_validate)
    p = sub.add_parser("convert", parents=[common], help="convert between parameterizations")
    p.add_argument("--to", default="u", choices=("ab", "u", "lm", "transfer"))
    p.set_defaults(func=cmd_convert)
    p = sub.add_parser("reduce", parents=[common], help="decouple into scalar channels")
    p.set_defaults(func=cmd_reduce)
    p = sub.add_parser("spectrum", parents=[common], help="band spectrum of a periodic system")
    p.set_defaults(func=cmd_spectrum)
    p = sub.add_parser("resolvent", parents=[common], help="Green kernels and bound states")
    p.set_defaults(func=cmd_resolvent)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_PARSE
    except _INVALID_BC_ERRORS as exc:
        print("error: %s: %s" % (type(exc).__name__, exc), file=sys.stderr)
        return EXIT_INVALID_BC
    except NotReducible as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_NOT_REDUCIBLE
    except _NUMERIC_ERRORS as exc:
        print("error: %s: %s" % (type(exc).__name__, exc), file=sys.stderr)
        return EXIT_NUMERIC
    except PointChannelsError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main(argv=None))
