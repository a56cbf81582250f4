"""Wave-facing measurements on computed profiles: front tracking, speed fits,
tail-state classification, L2 gradient, the exact energy-identity audit, and
the aggregated per-run report.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import analysis
from .errors import InsufficientSamples, NoCrossing
from .solver import (
    Field,
    LocalFisher,
    ModelParams,
    NonlocalBistable,
    NonlocalFisher,
    SimConfig,
    Trajectory,
    convolve,
    level_crossing,
    steady_residual,
)

#: default classification tolerance for tail states
CLASS_TOL = 1e-3
#: default per-side window as a fraction of the full domain length
WINDOW_FRACTION = 0.2
#: a lab-frame fitted speed is trusted only below this RMS residual
SPEED_FIT_RMS_MAX = 1e-2
#: slack in the amplitude-bound check M <= K0 + tol
K0_SLACK = 1e-2


def front_position(profile: Field, level: float = 0.5) -> float:
    """Rightmost crossing of u = level, by linear interpolation between nodes."""
    cross = level_crossing(profile.grid.x, profile.values, level)
    if cross is None:
        raise NoCrossing(f"profile never crosses level {level:g}")
    return cross


@dataclass(frozen=True)
class SpeedFit:
    """Least-squares front speed over the trailing part of a position series."""

    speed: float
    rms_residual: float
    n_samples: int


def measure_speed(times, positions, window: float = 0.5) -> SpeedFit:
    """Least-squares slope of position vs. time over the trailing window.

    ``window`` is the trailing fraction of the time span used for the fit.
    NaN positions (records where the front was absent) are dropped.
    """
    t = np.asarray(times, dtype=float)
    p = np.asarray(positions, dtype=float)
    if not 0 < window <= 1:
        raise ValueError("window must lie in (0, 1]")
    keep = np.isfinite(p) & np.isfinite(t)
    t, p = t[keep], p[keep]
    if len(t) < 2:
        raise InsufficientSamples("need at least two finite samples")
    t0 = t[-1] - window * (t[-1] - t[0])
    sel = t >= t0 - 1e-12 * max(1.0, abs(t[-1]))
    t, p = t[sel], p[sel]
    if len(t) < 10:
        raise InsufficientSamples(
            f"only {len(t)} samples in the trailing window, need at least 10"
        )
    slope, intercept = np.polyfit(t, p, 1)
    resid = p - (slope * t + intercept)
    return SpeedFit(float(slope), float(math.sqrt(np.mean(resid ** 2))), len(t))


@dataclass(frozen=True)
class TailState:
    """Classified far-field state on one side of the domain."""

    kind: str          # "One" | "Zero" | "Wavetrain" | "Undetermined"
    mean: float
    amplitude: float   # half the oscillation band (max - min) / 2

    def to_dict(self) -> dict:
        return {"state": self.kind, "mean": self.mean, "amplitude": self.amplitude}


def classify_tail(profile: Field, side: str, window: float | None = None,
                  tol: float = CLASS_TOL) -> TailState:
    """Classify the outermost window on one side as One, Zero, Wavetrain, or
    Undetermined.

    One/Zero require the window to be flat (max - min < tol) at the level 1/0.
    A non-flat window bounded away from zero is a Wavetrain: the weak regime
    where the state oscillates without converging.  Everything else (a front
    inside the window, a flat window at some other level) is Undetermined.
    """
    grid = profile.grid
    if window is None:
        window = WINDOW_FRACTION * 2.0 * grid.half_length
    if not 0 < window <= grid.half_length / 2 + 1e-9:
        raise ValueError(f"window {window:g} must lie in (0, L/2]")
    n = max(2, int(round(window / grid.dx)))
    if side == "left":
        seg = profile.values[:n]
    elif side == "right":
        seg = profile.values[-n:]
    else:
        raise ValueError("side must be 'left' or 'right'")
    hi, lo, mean = float(seg.max()), float(seg.min()), float(seg.mean())
    amp = 0.5 * (hi - lo)
    if hi - lo < tol and abs(mean - 1.0) < tol:
        return TailState("One", mean, amp)
    if hi - lo < tol and abs(mean) < tol:
        return TailState("Zero", mean, amp)
    if hi - lo >= tol and lo > tol:
        return TailState("Wavetrain", mean, amp)
    return TailState("Undetermined", mean, amp)


def l2_gradient(profile: Field, a: float | None = None, b: float | None = None) -> float:
    """Trapezoid integral of u'^2 over [a, b] (whole grid by default).

    The derivative is centered second-order with one-sided second-order
    stencils at the two ends.
    """
    grid = profile.grid
    du = np.gradient(profile.values, grid.dx, edge_order=2)
    x = grid.x
    ia = 0 if a is None else int(np.searchsorted(x, a - 1e-12))
    ib = grid.n_points - 1 if b is None else int(np.searchsorted(x, b + 1e-12)) - 1
    if ib <= ia:
        raise ValueError("[a, b] must contain at least two grid nodes")
    seg = du[ia:ib + 1]
    return float(np.trapz(seg * seg, dx=grid.dx))


def potential(u):
    """Antiderivative of the monostable nonlinearity x(1-x), fixed by W(0)=0."""
    return u * u / 2.0 - u ** 3 / 3.0


def energy_audit(profile: Field, c: float, mu: float, kernel, a: float, b: float,
                 left_pad: float = 1.0, right_pad: float = 0.0,
                 tail_tolerance: float = 1e-8, potential_fn=None) -> float:
    """Residual of the exact integrated identity satisfied by wave profiles:

        c * int_a^b u'^2  =  [ -u'^2/2 - mu*W(u) ]_a^b  -  mu * int_a^b u' u (u - phi*u)

    The identity holds exactly for solutions of the profile equation at speed
    c, for any interval and any choice of the additive constant in W; the
    returned |LHS - RHS| is therefore a solver-accuracy oracle.  For the local
    reaction (delta kernel) phi*u is u itself and the last integral vanishes.
    """
    grid = profile.grid
    u = profile.values
    if potential_fn is None:
        potential_fn = potential
    if kernel is not None:
        tk = kernel.tabulate(grid.dx, tail_tolerance)
        conv = convolve(profile, tk, left_pad, right_pad).values
    else:
        conv = u
    du = np.gradient(u, grid.dx, edge_order=2)
    x = grid.x
    ia = int(np.searchsorted(x, a - 1e-12))
    ib = int(np.searchsorted(x, b + 1e-12)) - 1
    if not 0 <= ia < ib <= grid.n_points - 1:
        raise ValueError("[a, b] must lie inside the grid and contain nodes")
    sl = slice(ia, ib + 1)
    lhs = c * np.trapz(du[sl] ** 2, dx=grid.dx)
    bracket = (-0.5 * du[ib] ** 2 - mu * potential_fn(u[ib])) \
        - (-0.5 * du[ia] ** 2 - mu * potential_fn(u[ia]))
    rhs = bracket - mu * np.trapz((du * u * (u - conv))[sl], dx=grid.dx)
    return float(abs(lhs - rhs))


@dataclass(frozen=True)
class WaveReport:
    """Per-run summary of the paper-facing quantities."""

    c_measured: float | None
    sup_norm: float
    deriv_sup: float
    l2_grad: float
    left_state: TailState
    right_state: TailState
    condition_8: bool | None
    condition_12: bool | None
    k0_bound_ok: bool | None
    energy_residual: float | None
    condition_8_reliable: bool
    fit_rms: float | None

    def to_dict(self) -> dict:
        return {
            "c_measured": self.c_measured,
            "sup_norm": self.sup_norm,
            "deriv_sup": self.deriv_sup,
            "l2_grad": self.l2_grad,
            "left_state": self.left_state.to_dict(),
            "right_state": self.right_state.to_dict(),
            "condition_8": self.condition_8,
            "condition_12": self.condition_12,
            "k0_bound_ok": self.k0_bound_ok,
            "energy_residual": self.energy_residual,
            "condition_8_reliable": self.condition_8_reliable,
            "fit_rms": self.fit_rms,
        }


def build_report(trajectory: Trajectory, params: ModelParams, config: SimConfig,
                 thresholds: analysis.Thresholds | None = None,
                 class_tol: float = CLASS_TOL,
                 window_fraction: float = WINDOW_FRACTION,
                 speed_window: float = 0.5) -> WaveReport:
    """Fill a WaveReport from the final profile and the recorded series.

    Diagnostics that cannot be computed (no front crossing, too few samples,
    inapplicable mode) degrade to None / Undetermined instead of raising.
    """
    final = trajectory.final
    grid = final.grid
    u = final.values
    reaction = params.reaction

    sup = float(np.max(np.abs(u)))
    du = np.gradient(u, grid.dx, edge_order=2)
    deriv_sup = float(np.max(np.abs(du)))
    l2g = l2_gradient(final)
    window = window_fraction * 2.0 * grid.half_length
    left = classify_tail(final, "left", window, class_tol)
    right = classify_tail(final, "right", window, class_tol)

    # measured speed: fitted front drift; in a moving frame the drift rides on
    # top of the frame speed
    fit = None
    try:
        fit = measure_speed(trajectory.times, trajectory.front_positions, speed_window)
    except InsufficientSamples:
        pass
    if config.frame_speed != 0.0:
        c_measured = config.frame_speed + (fit.speed if fit is not None else 0.0)
        reliable = fit is None or fit.rms_residual < SPEED_FIT_RMS_MAX
    else:
        c_measured = fit.speed if fit is not None else None
        reliable = fit is not None and fit.rms_residual < SPEED_FIT_RMS_MAX

    cond8 = cond12 = k0_ok = None
    energy = None
    if isinstance(reaction, (NonlocalFisher, LocalFisher)):
        mu = reaction.mu
        m2 = params.kernel.moment(2) if params.is_nonlocal else 0.0
        if c_measured is not None:
            cond8 = analysis.connectivity_condition(c_measured, mu, m2, sup)
        k0 = thresholds.k0 if thresholds is not None else (
            analysis.k0_constant(params.kernel, mu) if params.is_nonlocal else 1.0)
        k0_ok = sup <= k0 + K0_SLACK
        a = -0.6 * grid.half_length
        b = 0.6 * grid.half_length
        energy = energy_audit(
            final, c_measured if c_measured is not None else config.frame_speed,
            mu, params.kernel, a, b,
            left_pad=config.left_pad, right_pad=config.right_pad,
            tail_tolerance=config.tail_tolerance)
    elif isinstance(reaction, NonlocalBistable):
        m2 = params.kernel.moment(2)
        if c_measured is not None:
            cond12 = analysis.bistable_condition(c_measured, m2, sup)

    return WaveReport(
        c_measured=c_measured, sup_norm=sup, deriv_sup=deriv_sup, l2_grad=l2g,
        left_state=left, right_state=right, condition_8=cond8,
        condition_12=cond12, k0_bound_ok=k0_ok, energy_residual=energy,
        condition_8_reliable=reliable,
        fit_rms=fit.rms_residual if fit is not None else None,
    )


def run_report_dict(trajectory: Trajectory, params: ModelParams, config: SimConfig,
                    thresholds: analysis.Thresholds | None = None,
                    **report_kwargs) -> dict:
    """report.json payload: WaveReport fields plus run provenance.

    The reported steady_residual is evaluated at the *measured* speed (like
    condition_8): a converged run is a travelling state of the discrete
    scheme, and its actual speed may differ from the imposed frame speed by
    the O(dx^2) phase error of the discretization.
    """
    report = build_report(trajectory, params, config, thresholds, **report_kwargs)
    advection_order = 4 if trajectory.scheme_mode == "shift" else 2
    c_eval = report.c_measured if report.c_measured is not None else config.frame_speed
    residual = steady_residual(
        trajectory.final, c_eval, params,
        left_pad=config.left_pad, right_pad=config.right_pad,
        tail_tolerance=config.tail_tolerance, advection_order=advection_order)
    payload = report.to_dict()
    payload.update({
        "steady_residual": residual,
        "stop_reason": trajectory.stop_reason,
        "steps": trajectory.steps,
        "t_end": float(trajectory.times[-1]),
        "dt": trajectory.dt,
        "scheme": trajectory.scheme_mode,
        "frame_speed": config.frame_speed,
        "shift_offset": trajectory.shift_offset,
        "tail_mass": trajectory.tail_mass,
        "grid": {"half_length": trajectory.final.grid.half_length,
                 "n_points": trajectory.final.grid.n_points},
        "thresholds": thresholds.to_dict() if thresholds is not None else None,
    })
    return payload
