"""Command-line surface: kernel inspection, thresholds, dispersion scans,
lab-frame simulation, moving-frame wave relaxation, phase-diagram sweeps, and
the energy-identity audit.

Every run command echoes its fully resolved configuration to
``<out>/config.json``; re-running with ``--config <that file>`` reproduces the
outputs bit-for-bit.  Exit codes: 0 success, 2 validation error, 3 runtime
(blow-up) error.
"""
from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis, io
from .errors import BlowUp, NlfisherError, ValidationError
from .kernels import parse_kernel_spec
from .solver import (
    Field,
    Grid,
    LocalFisher,
    ModelParams,
    NonlocalBistable,
    NonlocalFisher,
    SimConfig,
    evolve,
    mollified_step,
    uniform_field,
    wave_tail_rate,
)
from .diagnostics import run_report_dict
from .errors import NoCrossing  # noqa: F401  (re-exported for CLI consumers)

_RUN_KEYS = [
    ("kernel", str, None),
    ("reaction", str, "nonlocal-fisher"),
    ("mu", float, 1.0),
    ("alpha", float, 0.3),
    ("c", float, 0.0),
    ("L", float, 60.0),
    ("N", int, 2048),
    ("dt", float, None),
    ("t-final", float, 50.0),
    ("steady-tol", float, 1e-6),
    ("left-pad", float, 1.0),
    ("right-pad", float, 0.0),
    ("tail-tol", float, 1e-8),
    ("stride", int, 100),
    ("snapshots", int, 10),
    ("initial", str, "step"),
    ("width", float, None),
    ("front-level", float, 0.5),
    ("recenter", bool, True),
    ("left-boundary", str, "pad"),
    ("right-boundary", str, "tail"),
    ("class-tol", float, 1e-3),
    ("window-frac", float, 0.2),
    ("speed-window", float, 0.5),
    ("plot", bool, True),
    ("out", str, None),
]


def _key_to_dest(key: str) -> str:
    return key.replace("-", "_")


def _add_run_options(sub: argparse.ArgumentParser, scalar_mu: bool = True) -> None:
    sub.add_argument("--kernel", help="kernel spec, e.g. tophat:a=1")
    sub.add_argument("--reaction", choices=["nonlocal-fisher", "local-fisher", "bistable"])
    if scalar_mu:
        sub.add_argument("--mu", type=float, help="slope at the origin")
    sub.add_argument("--alpha", type=float, help="bistable interior equilibrium")
    sub.add_argument("--L", type=float, help="domain half-length")
    sub.add_argument("--N", type=int, help="number of grid points (even)")
    sub.add_argument("--dt", type=float, help="time step (default: stability limit)")
    sub.add_argument("--t-final", type=float, help="time horizon")
    sub.add_argument("--steady-tol", type=float, help="early-stop change rate")
    sub.add_argument("--left-pad", type=float, help="left far-field value")
    sub.add_argument("--right-pad", type=float, help="right far-field value")
    sub.add_argument("--tail-tol", type=float, help="kernel truncation tail mass")
    sub.add_argument("--stride", type=int, help="summary record stride (steps)")
    sub.add_argument("--snapshots", type=int, help="approx. number of profile snapshots")
    sub.add_argument("--initial", help="initial data: step | zero | uniform:V")
    sub.add_argument("--width", type=float,
                     help="mollified step width (default: matched to the wave tail)")
    sub.add_argument("--front-level", type=float, help="front tracking level")
    sub.add_argument("--recenter", dest="recenter", action="store_true", default=None)
    sub.add_argument("--no-recenter", dest="recenter", action="store_false", default=None)
    sub.add_argument("--left-boundary", choices=["pad", "tail"])
    sub.add_argument("--right-boundary", choices=["pad", "tail"])
    sub.add_argument("--class-tol", type=float, help="tail classification tolerance")
    sub.add_argument("--window-frac", type=float, help="tail window as domain fraction")
    sub.add_argument("--speed-window", type=float, help="trailing fraction for speed fit")
    sub.add_argument("--plot", dest="plot", action="store_true", default=None)
    sub.add_argument("--no-plot", dest="plot", action="store_false", default=None)
    sub.add_argument("--config", help="JSON config file (flags override)")
    sub.add_argument("--out", help="output directory")


def _merge_config(args: argparse.Namespace, command: str,
                  extra_keys: tuple[str, ...] = ()) -> dict:
    merged = {key: default for key, _, default in _RUN_KEYS}
    if getattr(args, "config", None):
        import json
        file_cfg = json.loads(Path(args.config).read_text())
        file_cfg.pop("command", None)
        allowed = {k for k, _, _ in _RUN_KEYS} | set(extra_keys)
        unknown = set(file_cfg) - allowed
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        merged.update(file_cfg)
    for key, caster, _ in _RUN_KEYS:
        val = getattr(args, _key_to_dest(key), None)
        if val is not None:
            merged[key] = val
    merged["command"] = command
    return merged


def _build_run(cfg: dict):
    """Grid, model, sim config, and initial data from a merged run config."""
    reaction_name = cfg["reaction"]
    if reaction_name == "local-fisher":
        params = ModelParams(LocalFisher(cfg["mu"]))
    else:
        if not cfg.get("kernel"):
            raise ValidationError(f"reaction {reaction_name!r} needs --kernel")
        kernel = parse_kernel_spec(cfg["kernel"])
        kernel.require_valid()
        if reaction_name == "nonlocal-fisher":
            params = ModelParams(NonlocalFisher(cfg["mu"]), kernel)
        elif reaction_name == "bistable":
            params = ModelParams(NonlocalBistable(cfg["alpha"]), kernel)
        else:
            raise ValidationError(f"unknown reaction {reaction_name!r}")

    grid = Grid(cfg["L"], cfg["N"])
    t_final = cfg["t-final"]
    n_snaps = max(1, int(cfg["snapshots"]))
    sim = SimConfig(
        frame_speed=cfg["c"], dt=cfg["dt"], t_final=t_final,
        left_pad=cfg["left-pad"], right_pad=cfg["right-pad"],
        steady_tol=cfg["steady-tol"], output_stride=cfg["stride"],
        snapshot_interval=t_final / n_snaps,
        tail_tolerance=cfg["tail-tol"], recenter=cfg["recenter"],
        front_level=cfg["front-level"],
        left_boundary=cfg["left-boundary"], right_boundary=cfg["right-boundary"],
    )

    initial_spec = cfg["initial"]
    if initial_spec == "step":
        width = cfg["width"]
        if width is None:
            width = _default_width(cfg["c"], params)
        initial = mollified_step(grid, width=width)
        cfg["width"] = width
    elif initial_spec == "zero":
        initial = uniform_field(grid, 0.0)
    elif initial_spec.startswith("uniform:"):
        initial = uniform_field(grid, float(initial_spec.split(":", 1)[1]))
    else:
        raise ValidationError(f"unknown initial data {initial_spec!r}")
    return grid, params, sim, initial


def _default_width(c: float, params: ModelParams) -> float:
    """Mollified-step width: matched to the target wave's tail decay when the
    frame moves at an admissible speed, steep otherwise."""
    mu = params.mu
    if c != 0.0 and mu is not None and abs(c) >= 2.0 * math.sqrt(mu):
        return 1.0 / wave_tail_rate(c, mu)
    return 1.0


def _thresholds_for(params: ModelParams):
    if isinstance(params.reaction, NonlocalFisher):
        return analysis.Thresholds.compute(params.kernel, params.reaction.mu)
    if isinstance(params.reaction, LocalFisher):
        mu = params.reaction.mu
        return analysis.Thresholds(mu=mu, m1=0.0, m2=0.0,
                                   c_star=analysis.critical_speed(mu),
                                   k0=1.0, c_bar=0.0)
    return None


def _require_out(cfg: dict) -> Path:
    if not cfg.get("out"):
        raise ValidationError("this command writes files: pass --out DIR")
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _execute_run(cfg: dict, out: Path) -> int:
    grid, params, sim, initial = _build_run(cfg)
    thresholds = _thresholds_for(params)
    io.dump_json(cfg, out / "config.json")

    def snapshot_writer(t, x, u):
        io.write_profile_csv(out / io.snapshot_name(t), x, u)

    exit_code = 0
    try:
        trajectory = evolve(initial, params, sim, on_snapshot=snapshot_writer)
    except BlowUp as err:
        print(f"blow-up: {err}", file=sys.stderr)
        payload = {"error": str(err), "stop_reason": "blowup",
                   "blowup_step": err.step_index, "blowup_time": err.time,
                   "thresholds": thresholds.to_dict() if thresholds else None}
        io.dump_json(payload, out / "report.json")
        print(io.dump_json(payload))
        return 3

    payload = run_report_dict(
        trajectory, params, sim, thresholds,
        class_tol=cfg["class-tol"], window_fraction=cfg["window-frac"],
        speed_window=cfg["speed-window"])
    io.dump_json(payload, out / "report.json")
    io.write_trajectory_csv(out / "trajectory.csv", trajectory)
    io.write_profile_csv(out / "profile.csv", grid.x, trajectory.final.values)
    if cfg["plot"]:
        from . import plotting
        label = f"{cfg.get('kernel') or cfg['reaction']}  c={cfg['c']:g}"
        plotting.plot_profile(out / "profile.png", grid.x, trajectory.final.values,
                              title=label, front_level=cfg["front-level"])
        plotting.plot_trajectory(out / "trajectory.png", trajectory, title=label)
    print(io.dump_json(payload))
    return exit_code


def cmd_kernel_info(args) -> int:
    kernel = parse_kernel_spec(args.kernel)
    report = kernel.validate()
    payload = {"kernel": kernel.spec_string(), "validation": report.to_dict(),
               "mass": report.mass,
               "m1": kernel.moment(1) if report.finite_second_moment else None,
               "m2": report.second_moment if report.finite_second_moment else None}
    print(io.dump_json(payload))
    if not report.passed:
        print("invalid kernel: " + "; ".join(report.failures()), file=sys.stderr)
        return 2
    if args.fourier:
        parts = args.fourier.split(":")
        if len(parts) != 3:
            raise ValidationError("--fourier expects K0:K1:N")
        k0, k1, n = float(parts[0]), float(parts[1]), int(parts[2])
        if n < 2 or not k1 > k0:
            raise ValidationError("--fourier expects K0 < K1 and N >= 2")
        if not args.out:
            raise ValidationError("--fourier writes a CSV: pass --out DIR")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        ks = np.linspace(k0, k1, n)
        vals = np.asarray(kernel.fourier(ks))
        with open(out / "fourier.csv", "w") as fh:
            fh.write("k,re,im\n")
            for k, v in zip(ks, vals):
                fh.write(f"{k:.17g},{v.real:.17g},{v.imag:.17g}\n")
        if not args.no_plot:
            from . import plotting
            plotting.plot_kernel(out / "kernel.png", kernel, k_hi=k1,
                                 title=kernel.spec_string())
    return 0


def cmd_thresholds(args) -> int:
    kernel = parse_kernel_spec(args.kernel)
    kernel.require_valid()
    th = analysis.Thresholds.compute(kernel, args.mu)
    text = io.dump_json(th.to_dict())
    print(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        io.dump_json({"command": "thresholds", "kernel": args.kernel, "mu": args.mu,
                      "out": str(args.out)}, out / "config.json")
        (out / "thresholds.json").write_text(text + "\n")
    return 0


def cmd_dispersion(args) -> int:
    kernel = parse_kernel_spec(args.kernel)
    kernel.require_valid()
    report = analysis.turing_analysis(kernel, args.mu, k_hi=args.kmax)
    print(io.dump_json(report.to_dict()))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        ks = np.geomspace(report.scan_k_hi * 1e-4, report.scan_k_hi, 1024)
        lam = analysis.dispersion_growth(kernel, args.mu, ks)
        with open(out / "dispersion.csv", "w") as fh:
            fh.write("k,lambda\n")
            for k, l in zip(ks, lam):
                fh.write(f"{k:.17g},{l:.17g}\n")
        if not args.no_plot:
            from . import plotting
            plotting.plot_dispersion(out / "dispersion.png", ks, lam,
                                     k_max=report.k_max,
                                     title=f"{kernel.spec_string()}  mu={args.mu:g}")
    return 0


def cmd_simulate(args) -> int:
    cfg = _merge_config(args, "simulate")
    cfg["c"] = 0.0
    out = _require_out(cfg)
    return _execute_run(cfg, out)


def cmd_wave(args) -> int:
    cfg = _merge_config(args, "wave")
    if getattr(args, "c", None) is not None:
        cfg["c"] = args.c
    if cfg["c"] == 0.0:
        raise ValidationError("wave needs a nonzero frame speed --c")
    mu = cfg["mu"]
    if cfg["reaction"] in ("nonlocal-fisher", "local-fisher") and \
            abs(cfg["c"]) < 2.0 * math.sqrt(mu):
        print(f"warning: |c| = {abs(cfg['c']):g} is below the minimal admissible "
              f"speed 2*sqrt(mu) = {2.0 * math.sqrt(mu):g}; no travelling wave "
              "exists at this speed", file=sys.stderr)
    out = _require_out(cfg)
    return _execute_run(cfg, out)


def _run_sweep_cell(cell_cfg: dict) -> dict:
    """One (mu, c) cell of a sweep; returns the phase-diagram row."""
    cell_dir = Path(cell_cfg["out"])
    cell_dir.mkdir(parents=True, exist_ok=True)
    row = {"mu": cell_cfg["mu"], "c": cell_cfg["c"], "kernel": cell_cfg["kernel"],
           "left_state": None, "right_state": None, "c_bar": None,
           "condition_8": None, "sup_norm": None, "steady_residual": None,
           "energy_residual": None, "stop_reason": None, "tail_mass": None,
           "error": None}
    try:
        grid, params, sim, initial = _build_run(cell_cfg)
        thresholds = _thresholds_for(params)
        if thresholds is not None:
            row["c_bar"] = thresholds.c_bar
        io.dump_json(cell_cfg, cell_dir / "config.json")
        trajectory = evolve(initial, params, sim)
        payload = run_report_dict(
            trajectory, params, sim, thresholds,
            class_tol=cell_cfg["class-tol"],
            window_fraction=cell_cfg["window-frac"],
            speed_window=cell_cfg["speed-window"])
        io.dump_json(payload, cell_dir / "report.json")
        io.write_profile_csv(cell_dir / "profile.csv", grid.x,
                             trajectory.final.values)
        row.update({
            "left_state": payload["left_state"]["state"],
            "right_state": payload["right_state"]["state"],
            "condition_8": payload["condition_8"],
            "sup_norm": payload["sup_norm"],
            "steady_residual": payload["steady_residual"],
            "energy_residual": payload["energy_residual"],
            "stop_reason": payload["stop_reason"],
            "tail_mass": payload["tail_mass"],
        })
    except NlfisherError as err:
        row["error"] = f"{type(err).__name__}: {err}"
        row["stop_reason"] = "error"
    return row


def _parse_value_list(spec: str, name: str) -> list[float]:
    """Comma list '1,2,5' or inclusive range 'lo:hi:n'."""
    spec = spec.strip()
    if not spec:
        raise ValidationError(f"--{name} must be a nonempty list or range")
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValidationError(f"--{name} range expects LO:HI:N")
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        if n < 1:
            raise ValidationError(f"--{name} range needs N >= 1")
        return [float(v) for v in np.linspace(lo, hi, n)]
    vals = [float(v) for v in spec.split(",") if v.strip()]
    if not vals:
        raise ValidationError(f"--{name} must be a nonempty list or range")
    return vals


def cmd_sweep(args) -> int:
    cfg = _merge_config(args, "sweep", extra_keys=("mu-list", "c-list", "overrides"))
    out = _require_out(cfg)
    if not cfg.get("kernel") and cfg["reaction"] != "local-fisher":
        raise ValidationError("sweep needs --kernel")
    mu_spec = args.mu_list if args.mu_list else cfg.get("mu-list")
    c_spec = args.c_list if args.c_list else cfg.get("c-list")
    if isinstance(mu_spec, list):
        mus = [float(v) for v in mu_spec]
    else:
        mus = _parse_value_list(mu_spec or "", "mu")
    if isinstance(c_spec, list):
        cs = [float(v) for v in c_spec]
    else:
        cs = _parse_value_list(c_spec or "", "c")
    if not mus or not cs:
        raise ValidationError("sweep needs nonempty --mu and --c lists")
    overrides = cfg.get("overrides") or []

    cells = []
    index = 0
    for mu in sorted(mus):
        for c in sorted(cs):
            cell = dict(cfg)
            for stray in ("command", "mu-list", "c-list", "overrides"):
                cell.pop(stray, None)
            cell["mu"] = mu
            cell["c"] = c
            cell["plot"] = False
            for ov in overrides:
                if math.isclose(ov.get("mu", mu), mu, rel_tol=1e-12) and \
                        math.isclose(ov.get("c", c), c, rel_tol=1e-12):
                    cell.update({k: v for k, v in ov.items() if k not in ("mu", "c")})
            cell["out"] = str(out / f"cell_{index:03d}_mu{mu:.6g}_c{c:.6g}")
            cells.append(cell)
            index += 1

    # validate every cell before any compute starts
    for cell in cells:
        _build_run(dict(cell))

    io.dump_json({**cfg, "mu-list": mus, "c-list": cs, "overrides": overrides},
                 out / "config.json")

    jobs = max(1, args.jobs)
    if jobs == 1:
        rows = [_run_sweep_cell(cell) for cell in cells]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_sweep_cell, cells))
    rows.sort(key=lambda r: (r["mu"], r["c"]))
    io.write_sweep_csv(out / "sweep.csv", rows)
    if cfg["plot"]:
        from . import plotting
        plotting.plot_sweep(out / "phase_diagram.png", rows,
                            title=cfg.get("kernel") or cfg["reaction"])
    n_err = sum(1 for r in rows if r["error"])
    print(io.dump_json({"cells": len(rows), "errors": n_err,
                        "csv": str(out / "sweep.csv")}))
    return 0


def cmd_audit(args) -> int:
    profile = io.read_profile_csv(args.profile)
    kernel = None
    if args.kernel:
        kernel = parse_kernel_spec(args.kernel)
        kernel.require_valid()
    from .diagnostics import energy_audit
    a = args.a if args.a is not None else -0.6 * profile.grid.half_length
    b = args.b if args.b is not None else 0.6 * profile.grid.half_length
    residual = energy_audit(profile, args.c, args.mu, kernel, a, b,
                            left_pad=args.left_pad, right_pad=args.right_pad,
                            tail_tolerance=args.tail_tol)
    print(io.dump_json({"energy_residual": residual, "a": a, "b": b,
                        "c": args.c, "mu": args.mu,
                        "kernel": kernel.spec_string() if kernel else None}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nlfisher",
        description="Travelling waves of the nonlocal Fisher-KPP equation: "
                    "thresholds, simulation, and diagnostics.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kernel-info", help="validate a kernel and print moments")
    p.add_argument("--kernel", required=True)
    p.add_argument("--fourier", help="K0:K1:N grid for a transform CSV")
    p.add_argument("--out")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_kernel_info)

    p = sub.add_parser("thresholds", help="c_star, K0, c_bar for (kernel, mu)")
    p.add_argument("--kernel", required=True)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_thresholds)

    p = sub.add_parser("dispersion", help="linear stability of the state 1")
    p.add_argument("--kernel", required=True)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--kmax", type=float, help="scan upper wavenumber")
    p.add_argument("--out")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_dispersion)

    p = sub.add_parser("simulate", help="lab-frame evolution")
    _add_run_options(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("wave", help="moving-frame relaxation to a wave profile")
    p.add_argument("--c", type=float, help="frame speed (nonzero)")
    _add_run_options(p)
    p.set_defaults(func=cmd_wave)

    p = sub.add_parser("sweep", help="phase-diagram sweep over (mu, c)")
    p.add_argument("--mu", dest="mu_list", help="mu values: '1,2,5' or 'lo:hi:n'")
    p.add_argument("--c", dest="c_list", help="c values: '2,3' or 'lo:hi:n'")
    p.add_argument("--jobs", type=int, default=1, help="parallel cells")
    _add_run_options(p, scalar_mu=False)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("audit", help="energy-identity audit of a stored profile")
    p.add_argument("--profile", required=True, help="profile CSV (x,u)")
    p.add_argument("--kernel", help="kernel spec (omit for the local reaction)")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--left-pad", type=float, default=1.0)
    p.add_argument("--right-pad", type=float, default=0.0)
    p.add_argument("--tail-tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_audit)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except BlowUp as err:
        print(f"blow-up: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
