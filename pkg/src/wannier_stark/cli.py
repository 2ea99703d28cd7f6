"""Command-line front end: saddle | table | contour | trajectory | threshold-scan.

Every command writes its data files plus ``manifest.json`` into ``--out``.
Exit codes: 0 completed (classified Failure trajectories included),
2 configuration error, 3 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import records, units
from .dynamics import IntegratorControls, integrate
from .model import DomainError, PhaseState, SystemParams, SymmetricState, contour_grid
from .saddle import (
    NoConvergenceError,
    exponent_table,
    mu_squared,
    nu_squared,
    saddle_analytic,
    stability_spectrum,
    threshold_exponent,
    wannier_exponent,
)
from .threshold import (
    DegenerateWindowError,
    ThresholdRegimeError,
    default_workers,
    epsilon_grid,
    normal_mode_frame,
    threshold_scan,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

COMMON_DEFAULTS = {
    "Z": 2.0,
    "F": None,
    "F_kv_cm": None,
    "seed": 0,
    "workers": None,
    "out": "wsl_output",
    "format": "csv",
}

COMMAND_DEFAULTS = {
    "saddle": {},
    "table": {"z_list": [1.0, 2.0, 3.0, 4.0, 5.0]},
    "contour": {"r_range": None, "z_range": None, "n_r": 200, "n_z": 200, "n_locus": 50},
    "trajectory": {"initial": "downhill", "state": None, "symmetric": None, "t_max": None,
                   "n_out": 401, "displacement": 0.01},
    "threshold-scan": {"method": "bisection", "eps_min": 1e-4, "eps_max": 1e-2,
                       "points_per_decade": 8, "samples": 1000, "x0_factor": -0.2,
                       "exit_factor": 5.0, "importance": 3.0},
}


class ConfigError(ValueError):
    pass


def _help_columns(cmd):
    return {
        "saddle": "Output saddle.csv: quantity,value rows (or saddle.json).",
        "table": "Output table.csv columns: Z,alpha,wannier_alpha.",
        "contour": "Output contour.csv columns: r,z,V (bohr, bohr, hartree); "
                   "locus.csv columns: F,r,z (saddle positions as F varies).",
        "trajectory": "Output trajectory.csv columns: t,x1,y1,z1,x2,y2,z2,px1,py1,pz1,px2,py2,pz2,H "
                      "(atomic units); outcome in manifest.json.",
        "threshold-scan": "Output measurements.csv columns: epsilon,width_or_fraction,stderr "
                          "(epsilon in hartree above V_s); fit.json with alpha_fit, alpha_stderr, "
                          "window, method, seed.",
    }[cmd]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wannier-stark", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)
    for cmd in COMMAND_DEFAULTS:
        s = sub.add_parser(cmd, help=_help_columns(cmd), description=_help_columns(cmd))
        s.add_argument("--config", help="JSON file of settings (a manifest.json also works)")
        s.add_argument("--Z", type=float, help="ion charge (default 2)")
        s.add_argument("--F", type=float, help="field strength, atomic units (default 1)")
        s.add_argument("--F-kv-cm", dest="F_kv_cm", type=float, help="field strength in kV/cm")
        s.add_argument("--seed", type=int)
        s.add_argument("--workers", type=int, help="threads; default $WSL_WORKERS or 1")
        s.add_argument("--out", help="output directory (default wsl_output)")
        s.add_argument("--format", choices=["csv", "json"])
        if cmd == "table":
            s.add_argument("--z-list", dest="z_list", type=float, nargs="+")
        if cmd == "contour":
            s.add_argument("--r-range", dest="r_range", type=float, nargs=2)
            s.add_argument("--z-range", dest="z_range", type=float, nargs=2)
            s.add_argument("--n-r", dest="n_r", type=int)
            s.add_argument("--n-z", dest="n_z", type=int)
        if cmd == "trajectory":
            s.add_argument("--initial", choices=["saddle", "downhill", "state", "symmetric"])
            s.add_argument("--state", type=float, nargs=12, help="x1 y1 z1 x2 y2 z2 px1 ... pz2")
            s.add_argument("--symmetric", type=float, nargs=4, metavar=("r", "z", "p_r", "p_z"))
            s.add_argument("--t-max", dest="t_max", type=float)
            s.add_argument("--n-out", dest="n_out", type=int)
        if cmd == "threshold-scan":
            s.add_argument("--method", choices=["bisection", "harmonic", "monte_carlo", "monte-carlo"])
            s.add_argument("--eps-min", dest="eps_min", type=float, help="fraction of |V_s|")
            s.add_argument("--eps-max", dest="eps_max", type=float, help="fraction of |V_s|")
            s.add_argument("--points-per-decade", dest="points_per_decade", type=int)
            s.add_argument("--samples", type=int, help="Monte Carlo samples per epsilon")
            s.add_argument("--x0-factor", dest="x0_factor", type=float)
            s.add_argument("--exit-factor", dest="exit_factor", type=float)
    return p


def resolve_config(args: argparse.Namespace) -> dict:
    cmd = args.command
    cfg = dict(COMMON_DEFAULTS)
    cfg.update(COMMAND_DEFAULTS[cmd])
    allowed = set(cfg) | {"command"}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if isinstance(data, dict) and "config" in data and isinstance(data["config"], dict):
            data = data["config"]
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = sorted(set(data) - allowed)
        if unknown:
            raise ConfigError(f"unknown config keys for '{cmd}': {', '.join(unknown)}")
        if data.get("command", cmd) != cmd:
            raise ConfigError(f"config is for '{data['command']}', not '{cmd}'")
        cfg.update({k: v for k, v in data.items() if k != "command"})
        # a field flag in either unit replaces the file's field
        if args.F is not None:
            cfg["F_kv_cm"] = None
        if args.F_kv_cm is not None:
            cfg["F"] = None
    for k, v in vars(args).items():
        if k in ("command", "config") or v is None:
            continue
        cfg[k] = v
    cfg["command"] = cmd
    return validate(cfg)


_REAL = (int, float)
TYPES = {
    "Z": _REAL, "F": _REAL, "F_kv_cm": _REAL, "seed": int, "workers": int, "out": str,
    "format": str, "z_list": list, "r_range": list, "z_range": list, "n_r": int, "n_z": int,
    "n_locus": int, "initial": str, "state": list, "symmetric": list, "t_max": _REAL,
    "n_out": int, "displacement": _REAL, "method": str, "eps_min": _REAL, "eps_max": _REAL,
    "points_per_decade": int, "samples": int, "x0_factor": _REAL, "exit_factor": _REAL,
    "importance": _REAL,
}
LENGTHS = {"r_range": 2, "z_range": 2, "state": 12, "symmetric": 4}


def _check_types(cfg):
    for k, v in cfg.items():
        if k == "command" or v is None:
            continue
        want = TYPES[k]
        if isinstance(v, bool) or not isinstance(v, want):
            raise ConfigError(f"{k} has the wrong type ({type(v).__name__})")
        if isinstance(v, list):
            if k in LENGTHS and len(v) != LENGTHS[k]:
                raise ConfigError(f"{k} needs {LENGTHS[k]} numbers, got {len(v)}")
            if not all(isinstance(x, _REAL) and not isinstance(x, bool) for x in v):
                raise ConfigError(f"{k} must hold numbers only")


def validate(cfg: dict) -> dict:
    cmd = cfg["command"]
    _check_types(cfg)
    if cfg["F"] is not None and cfg["F_kv_cm"] is not None:
        raise ConfigError("give either --F or --F-kv-cm, not both")
    if cfg["F_kv_cm"] is not None and not cfg["F_kv_cm"] > 0:
        raise ConfigError("--F-kv-cm must be > 0")
    if cfg["F"] is None and cfg["F_kv_cm"] is None:
        cfg["F"] = 1.0
    try:
        _params(cfg)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{exc} (need Z >= 1 and F > 0)") from exc
    if cfg["workers"] is None:
        cfg["workers"] = default_workers()
    if int(cfg["workers"]) < 1:
        raise ConfigError("--workers must be >= 1")
    if not (isinstance(cfg["seed"], int) and 0 <= cfg["seed"] < 2**64):
        raise ConfigError("--seed must be an unsigned 64-bit integer")
    if cfg["format"] not in ("csv", "json"):
        raise ConfigError("--format must be csv or json")
    if cmd == "table":
        if any(not z >= 1 for z in cfg["z_list"]):
            raise ConfigError("every Z in --z-list must be >= 1")
    if cmd == "contour":
        if cfg["n_r"] < 2 or cfg["n_z"] < 2:
            raise ConfigError("--n-r and --n-z must be >= 2")
        if cfg["r_range"] is not None and min(cfg["r_range"]) <= 0:
            raise ConfigError("--r-range must exclude r <= 0")
    if cmd == "trajectory":
        if cfg["initial"] == "state" and cfg["state"] is None:
            raise ConfigError("--initial state needs --state with 12 numbers")
        if cfg["initial"] == "symmetric" and cfg["symmetric"] is None:
            raise ConfigError("--initial symmetric needs --symmetric r z p_r p_z")
        if cfg["symmetric"] is not None and not cfg["symmetric"][0] > 0:
            raise ConfigError("symmetric r must be > 0")
        if cfg["t_max"] is not None and not cfg["t_max"] > 0:
            raise ConfigError("--t-max must be > 0")
        if cfg["n_out"] < 2:
            raise ConfigError("--n-out must be >= 2")
    if cmd == "threshold-scan":
        cfg["method"] = cfg["method"].replace("-", "_")
        if cfg["method"] not in ("bisection", "harmonic", "monte_carlo"):
            raise ConfigError(f"unknown method {cfg['method']}")
        if not 0 < cfg["eps_min"] < cfg["eps_max"]:
            raise ConfigError("need 0 < --eps-min < --eps-max")
        if cfg["points_per_decade"] < 1:
            raise ConfigError("--points-per-decade must be >= 1")
        if cfg["samples"] < 100:
            raise ConfigError("--samples must be >= 100")
        if not cfg["x0_factor"] < 0:
            raise ConfigError("x0_factor must be negative")
        if not cfg["exit_factor"] > 0:
            raise ConfigError("exit_factor must be positive")
    return cfg


def _params(cfg) -> SystemParams:
    if cfg["F_kv_cm"] is not None:
        return SystemParams(float(cfg["Z"]), units.kv_per_cm_to_au(float(cfg["F_kv_cm"])))
    return SystemParams(float(cfg["Z"]), float(cfg["F"]))


def cmd_saddle(cfg, out: Path):
    params = _params(cfg)
    s = saddle_analytic(params)
    spec = stability_spectrum(params, "numeric_hessian")
    report = {
        "Z": params.Z,
        "F_au": params.F,
        "F_kv_cm": units.au_to_kv_per_cm(params.F),
        "a": s.a,
        "r_s": s.r_s,
        "z_s": s.z_s,
        "V_s_hartree": s.V_s,
        "V_s_eV": units.hartree_to_ev(s.V_s),
        "mu2": mu_squared(params),
        "nu2": nu_squared(params),
        "mu2_hessian": spec.mu**2,
        "nu2_hessian": spec.nu**2,
        "omega1": float(spec.omega[0]),
        "omega2": float(spec.omega[1]),
        "omega3": float(spec.omega[2]),
        "alpha": threshold_exponent(params),
        "wannier_alpha": wannier_exponent(params.Z),
        "locus_ratio": s.locus_ratio,
        "locus_angle_deg": float(np.degrees(np.arctan2(s.r_s, s.z_s))),
    }
    if cfg["format"] == "json":
        path = records.write_json(out / "saddle.json", report)
    else:
        path = records.write_csv(out / "saddle.csv", ["quantity", "value"], report.items())
    print(f"saddle: r_s={s.r_s:.6f} z_s={s.z_s:.6f} bohr, V_s={s.V_s:.6f} hartree "
          f"({units.hartree_to_ev(s.V_s):.4f} eV), alpha={report['alpha']:.4f}")
    return [path], {"report": report}


def cmd_table(cfg, out: Path):
    rows = exponent_table(cfg["z_list"])
    if cfg["format"] == "json":
        path = records.write_json(out / "table.json",
                                  [{"Z": r.Z, "alpha": r.alpha, "wannier_alpha": r.wannier_alpha}
                                   for r in rows])
    else:
        path = records.write_csv(out / "table.csv", ["Z", "alpha", "wannier_alpha"],
                                 [(r.Z, r.alpha, r.wannier_alpha) for r in rows])
    for r in rows:
        print(f"Z={r.Z:g}  alpha={r.alpha:.3f}  wannier={r.wannier_alpha:.3f}")
    return [path], {}


def cmd_contour(cfg, out: Path):
    params = _params(cfg)
    s0 = 1.0 / np.sqrt(params.F)
    r_range = cfg["r_range"] or [0.05 * s0, 3.0 * s0]
    z_range = cfg["z_range"] or [0.0, 4.0 * s0]
    grid = contour_grid(params, tuple(r_range), tuple(z_range), int(cfg["n_r"]), int(cfg["n_z"]))
    R, Zg = np.meshgrid(grid.r_axis, grid.z_axis)
    rows = zip(R.ravel(), Zg.ravel(), grid.V.ravel())
    paths = [records.write_csv(out / "contour.csv", ["r", "z", "V"], rows)]
    # saddle positions for weaker and stronger fields: the dashed locus
    fs = params.F * np.logspace(-1, 1, int(cfg["n_locus"]))
    loc = []
    for f in fs:
        sd = saddle_analytic(SystemParams(params.Z, float(f)))
        loc.append((float(f), sd.r_s, sd.z_s))
    paths.append(records.write_csv(out / "locus.csv", ["F", "r", "z"], loc))
    r_d, z_d = grid.discrete_saddle()
    print(f"contour: {len(grid.z_axis)}x{len(grid.r_axis)} grid, discrete saddle near r={r_d:.3f} z={z_d:.3f}")
    return paths, {"discrete_saddle": [r_d, z_d]}


def _initial_state(cfg, params):
    kind = cfg["initial"]
    if kind == "state":
        return PhaseState.from_vector(cfg["state"])
    if kind == "symmetric":
        return SymmetricState(*cfg["symmetric"]).embed()
    s = saddle_analytic(params)
    if kind == "saddle":
        return PhaseState(s.embedded_config, np.zeros(6))
    fr = normal_mode_frame(params)
    d = cfg["displacement"] * params.length_scale
    return PhaseState(s.embedded_config + d * fr.e_x, fr.mu * d * fr.e_x)


def cmd_trajectory(cfg, out: Path):
    params = _params(cfg)
    controls = IntegratorControls(max_time=cfg["t_max"])
    T = controls.time_limit(params)
    ts = np.linspace(0.0, T, int(cfg["n_out"]))
    tr = integrate(_initial_state(cfg, params), params, controls, ts)
    H = tr.energies
    good = np.all(np.isfinite(tr.states), axis=1)
    rows = [(t, *y, h) for t, y, h, g in zip(ts, tr.states, H, good) if g]
    rows.append((tr.final_time, *tr.final_state, float(
        0.5 * tr.final_state[6:] @ tr.final_state[6:] + _pot(tr.final_state, params))))
    rows.sort(key=lambda r: r[0])
    dedup = []
    for r in rows:
        if dedup and r[0] == dedup[-1][0]:
            continue
        dedup.append(r)
    header = ["t", "x1", "y1", "z1", "x2", "y2", "z2", "px1", "py1", "pz1", "px2", "py2", "pz2", "H"]
    path = records.write_csv(out / "trajectory.csv", header, dedup)
    o = tr.outcome
    outcome = {"label": o.label.value, "exit_time": o.exit_time, "energy_drift": o.energy_drift,
               "detail": o.detail, "exit_positions": o.exit_positions, "exit_momenta": o.exit_momenta,
               "n_steps": tr.n_steps}
    print(f"trajectory: {o.label.value} at t={o.exit_time:.4f} ({o.detail}), drift={o.energy_drift:.2e}")
    return [path], {"outcome": outcome}


def _pot(y, params):
    from .model import potential_full

    return potential_full(y[:6], params)


def cmd_threshold_scan(cfg, out: Path):
    params = _params(cfg)
    eps = epsilon_grid(params, cfg["eps_min"], cfg["eps_max"], int(cfg["points_per_decade"]))
    x0 = cfg["x0_factor"] * params.length_scale
    scan = threshold_scan(params, cfg["method"], epsilon=eps, x0=x0,
                          x_exit=cfg["exit_factor"] * abs(x0), n_samples=int(cfg["samples"]),
                          seed=int(cfg["seed"]), workers=int(cfg["workers"]),
                          importance=cfg["importance"])
    paths = [records.write_csv(out / "measurements.csv", ["epsilon", "width_or_fraction", "stderr"],
                               zip(scan.epsilon, scan.values, scan.stderr))]
    fit = {
        "alpha_fit": scan.alpha_fit,
        "alpha_stderr": scan.alpha_stderr,
        "alpha_theory": threshold_exponent(params),
        "window": list(scan.fit_window),
        "window_rel": [cfg["eps_min"], cfg["eps_max"]],
        "method": scan.method.value,
        "seed": cfg["seed"],
        "x0": scan.x0,
        "x_exit": scan.x_exit,
        "gaps": [{"epsilon": e, "reason": r} for e, r in scan.gaps],
    }
    paths.append(records.write_json(out / "fit.json", fit))
    print(f"threshold-scan ({scan.method.value}): alpha_fit={scan.alpha_fit:.4f} "
          f"+/- {scan.alpha_stderr:.4f} (closed form {fit['alpha_theory']:.4f})"
          + (f", {len(scan.gaps)} gaps" if scan.gaps else ""))
    return paths, {"fit": fit}


COMMANDS = {
    "saddle": cmd_saddle,
    "table": cmd_table,
    "contour": cmd_contour,
    "trajectory": cmd_trajectory,
    "threshold-scan": cmd_threshold_scan,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(cfg["out"])
    t0 = time.perf_counter()
    try:
        paths, extra = COMMANDS[cfg["command"]](cfg, out)
    except (DomainError, ValueError) as exc:
        if isinstance(exc, DegenerateWindowError):
            print(f"numerical error: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NoConvergenceError, ThresholdRegimeError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    records.write_manifest(out, cfg, paths, time.perf_counter() - t0, extra)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
