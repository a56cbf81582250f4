"""Time evolution of the nonlocal (and local, and bistable) reaction-diffusion
equation on a truncated line, in the lab frame or a frame moving at speed c.

The semidiscretization is method-of-lines on a uniform grid: second-order
centered diffusion, a trapezoid-weighted discrete convolution for ``phi * u``,
and classic RK4 in time under a diffusion-limited step bound.  Dirichlet ghost
padding supplies the far-field states to the stencils and to the convolution
extension, which makes the uniform states exact fixed points of the discrete
operator.

Advection in the moving frame is discretized two ways, selected by the cell
Peclet number ``|c| dx / 2``:

* moderate Peclet (<= 2): centered second-order differences inside the RK4
  stage evaluations;
* large Peclet (rapid frames): a Strang splitting  B(dt/2) S B(dt/2)  where S
  is an exact shift by a whole number of cells (dt = cells * dx / |c|) and B
  is an RK4 substep of diffusion + reaction.  The shift commutes with the
  other operators away from the boundaries, so the splitting is second-order
  overall, unconditionally stable in c, and free of the node-to-node
  oscillations that centered differences develop at large cell Peclet.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Union

import numpy as np
from scipy import fft as sfft
from scipy.special import expit

from . import analysis
from .errors import BlowUp, ConfigError, StencilOverrun
from .kernels import Kernel, TabulatedKernel

#: default diffusive CFL number dt / dx^2
DIFFUSION_CFL = 0.2
#: advective limit dt * |c| / dx for RK4's imaginary-axis stability
ADVECTION_CFL = 2.0
#: cell Peclet |c| dx / 2 above which the exact-shift splitting takes over
PECLET_SWITCH = 2.0
#: half-widths above this use the FFT convolution path
_FFT_MIN_HALF_WIDTH = 16


@dataclass(frozen=True)
class Grid:
    """Uniform grid of n_points nodes x_j = -L + j*dx, dx = 2L/N."""

    half_length: float
    n_points: int

    def __post_init__(self):
        if not (self.half_length > 0 and math.isfinite(self.half_length)):
            raise ConfigError("grid half-length must be positive and finite")
        if self.n_points < 16 or self.n_points % 2:
            raise ConfigError("grid needs an even number of points, at least 16")

    @property
    def dx(self) -> float:
        return 2.0 * self.half_length / self.n_points

    @cached_property
    def x(self) -> np.ndarray:
        return -self.half_length + self.dx * np.arange(self.n_points)


@dataclass
class Field:
    """Real-valued profile sampled on a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n_points,):
            raise ConfigError(
                f"field has {v.shape} values for a grid of {self.grid.n_points} nodes"
            )
        if not np.all(np.isfinite(v)):
            raise ConfigError("field contains NaN/Inf")
        self.values = v

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


def mollified_step(grid: Grid, width: float = 1.0, center: float = 0.0) -> Field:
    """Smoothed step 1/(1 + exp((x - center)/width)): 1 far left, 0 far right."""
    if width <= 0:
        raise ConfigError("step width must be positive")
    return Field(grid, expit(-(grid.x - center) / width))


def uniform_field(grid: Grid, value: float) -> Field:
    return Field(grid, np.full(grid.n_points, float(value)))


def wave_tail_rate(c: float, mu: float) -> float:
    """Decay rate of the slow right tail of a speed-c front, (c - sqrt(c^2-4mu))/2.

    Defined for |c| >= 2 sqrt(mu); at the minimal speed it equals sqrt(mu).
    Initial data for moving-frame relaxation should decay at this rate: steeper
    tails travel slower than the frame and recede, shallower tails outrun it.
    """
    c = abs(c)
    disc = c * c - 4.0 * mu
    if disc < 0:
        raise ConfigError(f"no real tail rate: |c| = {c:g} below 2 sqrt(mu) = {2*math.sqrt(mu):g}")
    return 0.5 * (c - math.sqrt(disc))


@dataclass(frozen=True)
class NonlocalFisher:
    """Reaction mu * u * (1 - phi*u)."""

    mu: float

    def __post_init__(self):
        if not (self.mu > 0 and math.isfinite(self.mu)):
            raise ConfigError("mu must be positive and finite")


@dataclass(frozen=True)
class LocalFisher:
    """Classical logistic reaction mu * u * (1 - u); the delta-kernel limit."""

    mu: float

    def __post_init__(self):
        if not (self.mu > 0 and math.isfinite(self.mu)):
            raise ConfigError("mu must be positive and finite")


@dataclass(frozen=True)
class NonlocalBistable:
    """Reaction u * (u - alpha) * (1 - phi*u) with interior equilibrium alpha."""

    alpha: float

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ConfigError("alpha must lie strictly between 0 and 1")


Reaction = Union[NonlocalFisher, LocalFisher, NonlocalBistable]


@dataclass(frozen=True)
class ModelParams:
    """Reaction selector plus the dispersal kernel (absent for the local mode)."""

    reaction: Reaction
    kernel: Kernel | None = None

    def __post_init__(self):
        if isinstance(self.reaction, LocalFisher):
            if self.kernel is not None:
                raise ConfigError("local Fisher mode takes no kernel")
        elif self.kernel is None:
            raise ConfigError("nonlocal reactions need a kernel")

    @property
    def is_nonlocal(self) -> bool:
        return not isinstance(self.reaction, LocalFisher)

    @property
    def mu(self) -> float | None:
        return getattr(self.reaction, "mu", None)


def reaction_term(u, conv, params: ModelParams):
    """Pointwise reaction rate; ``conv`` is phi*u (ignored in the local mode)."""
    r = params.reaction
    if isinstance(r, NonlocalFisher):
        return r.mu * u * (1.0 - conv)
    if isinstance(r, LocalFisher):
        return r.mu * u * (1.0 - u)
    return u * (u - r.alpha) * (1.0 - conv)


@dataclass(frozen=True)
class SimConfig:
    """Run parameters for :func:`evolve`.

    frame_speed   c of the co-moving frame (0 = lab frame); steady states of
                  the moving frame solve the wave profile equation at speed c.
    dt            time step; None resolves the stability-limited default.  In
                  the exact-shift regime the step is rounded to a whole number
                  of cells of advection per step.
    t_final       horizon; the run may stop earlier on steady_tol.
    left_pad,     Dirichlet ghost values representing the far fields, used by
    right_pad     the derivative stencils and the convolution extension.
    steady_tol    stop once the sup-norm change per unit time drops below this.
    output_stride record the summary series every this many steps.
    snapshot_interval  approximate model-time spacing of stored snapshots
                  (None = only the summary series is kept).
    tail_tolerance  kernel mass allowed outside the truncated stencil.
    recenter      shift-and-pad in lab-frame runs when the front drifts within
                  L/4 of a boundary.
    front_level   level whose rightmost crossing defines the front position.
    left_boundary,  "pad": Dirichlet ghost equal to the pad value;
    right_boundary  "tail": ghost and fill values continue the profile
                  geometrically from the last interior cells (non-reflecting;
                  lets an exponential tail flow through the boundary instead
                  of being cut to the pad value).  The convolution extension
                  always uses the pads.  Default is "tail" on the right: a
                  Dirichlet cut there starves the pulling tail of rightward
                  fronts, which visibly stalls or collapses them; geometric
                  continuation leaves the uniform states exact equilibria.
    """

    frame_speed: float = 0.0
    dt: float | None = None
    t_final: float = 50.0
    left_pad: float = 1.0
    right_pad: float = 0.0
    steady_tol: float = 1e-6
    output_stride: int = 100
    snapshot_interval: float | None = None
    tail_tolerance: float = 1e-8
    recenter: bool = True
    front_level: float = 0.5
    left_boundary: str = "pad"
    right_boundary: str = "tail"

    def __post_init__(self):
        if self.t_final <= 0:
            raise ConfigError("t_final must be positive")
        if self.dt is not None and self.dt <= 0:
            raise ConfigError("dt must be positive")
        if self.output_stride < 1:
            raise ConfigError("output_stride must be >= 1")
        if self.steady_tol < 0:
            raise ConfigError("steady_tol must be nonnegative")
        if not (0 < self.tail_tolerance < 1):
            raise ConfigError("tail_tolerance must lie in (0, 1)")
        for name in ("frame_speed", "left_pad", "right_pad", "front_level"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        for name in ("left_boundary", "right_boundary"):
            if getattr(self, name) not in ("pad", "tail"):
                raise ConfigError(f"{name} must be 'pad' or 'tail'")


@dataclass(frozen=True)
class ResolvedStep:
    """Time-stepping scheme actually used: mode, step, and cells shifted."""

    mode: str            # "centered" or "shift"
    dt: float
    shift_cells: int     # signed: positive shifts the profile left (c > 0)


def _reaction_rate_scale(params: ModelParams) -> float:
    mu = params.mu
    return mu if mu is not None else 2.0


def stability_limit(grid: Grid, params: ModelParams, frame_speed: float) -> float:
    """Largest admissible RK4 step for the centered scheme."""
    dx = grid.dx
    lim = min(DIFFUSION_CFL * dx * dx, 0.5 / _reaction_rate_scale(params))
    if frame_speed:
        lim = min(lim, ADVECTION_CFL * dx / abs(frame_speed))
    return lim


def resolve_scheme(grid: Grid, params: ModelParams, config: SimConfig) -> ResolvedStep:
    """Pick the advection treatment and validate/resolve the time step."""
    c = config.frame_speed
    dx = grid.dx
    peclet = abs(c) * dx / 2.0
    if c == 0.0 or peclet <= PECLET_SWITCH:
        limit = stability_limit(grid, params, c)
        dt = limit if config.dt is None else config.dt
        if dt > limit * (1.0 + 1e-9):
            raise ConfigError(
                f"dt = {dt:g} exceeds the RK4 stability limit {limit:g} "
                f"(dx = {dx:g}, c = {c:g})"
            )
        return ResolvedStep("centered", dt, 0)

    # exact-shift splitting; B-substeps of dt/2 carry diffusion + reaction
    sub_limit = min(DIFFUSION_CFL * dx * dx, 0.5 / _reaction_rate_scale(params))
    s_max = int(math.floor(2.0 * sub_limit * abs(c) / dx + 1e-12))
    if s_max < 1:
        raise ConfigError(
            "no admissible shift step: diffusion limit below one cell of "
            f"advection (dx = {dx:g}, c = {c:g})"
        )
    if config.dt is None:
        s = s_max
    else:
        s = min(s_max, max(1, int(round(abs(c) * config.dt / dx))))
    dt = s * dx / abs(c)
    return ResolvedStep("shift", dt, int(math.copysign(s, c)))


def _decay_ratio(edge: float, inner: float) -> float:
    """Per-cell geometric ratio continuing a decaying deviation past the
    boundary.

    ``edge`` and ``inner`` are deviations from the far-field pad value at the
    last two cells.  Falls back to constant extrapolation (ratio 1) whenever
    they do not look like a decaying tail of one sign; in particular uniform
    states extrapolate to themselves.
    """
    if edge * inner > 0.0 and abs(edge) < abs(inner):
        return edge / inner
    return 1.0


def _padded(u: np.ndarray, m: int, left: float, right: float) -> np.ndarray:
    out = np.empty(len(u) + 2 * m)
    out[:m] = left
    out[m:m + len(u)] = u
    out[m + len(u):] = right
    return out


def convolve(field: Field, kernel: TabulatedKernel, left_pad: float,
             right_pad: float, method: str = "auto") -> Field:
    """Discrete convolution phi*u with the profile extended by the pad values.

    ``method`` is "direct" (summation), "fft", or "auto".  The FFT path is a
    plain linear convolution on the padded array and agrees with the direct
    sum to roundoff.
    """
    grid = field.grid
    if abs(kernel.spacing - grid.dx) > 1e-12 * grid.dx:
        raise ConfigError(
            f"kernel tabulation spacing {kernel.spacing:g} does not match grid dx {grid.dx:g}"
        )
    if kernel.radius >= grid.half_length:
        raise StencilOverrun(
            f"kernel radius {kernel.radius:g} does not fit inside half-length "
            f"{grid.half_length:g}"
        )
    m = kernel.half_width
    upad = _padded(field.values, m, left_pad, right_pad)
    if method == "direct" or (method == "auto" and m <= _FFT_MIN_HALF_WIDTH):
        out = np.convolve(upad, kernel.stencil, mode="valid")
    elif method in ("fft", "auto"):
        n = len(upad) + len(kernel.stencil) - 1
        nfft = sfft.next_fast_len(n)
        prod = sfft.rfft(upad, nfft) * sfft.rfft(kernel.stencil, nfft)
        out = sfft.irfft(prod, nfft)[2 * m:2 * m + grid.n_points]
    else:
        raise ConfigError(f"unknown convolution method {method!r}")
    return Field(grid, out)


class _RunPlan:
    """Preallocated buffers and the FFT-planned convolution for the hot loop."""

    def __init__(self, grid: Grid, params: ModelParams, config: SimConfig,
                 scheme: ResolvedStep):
        self.grid = grid
        self.params = params
        self.config = config
        self.scheme = scheme
        self.n = grid.n_points
        self.inv_dx2 = 1.0 / grid.dx ** 2
        self.c_over_2dx = (config.frame_speed / (2.0 * grid.dx)
                           if scheme.mode == "centered" else 0.0)
        self.gbuf = np.empty(self.n + 2)
        self.gbuf[0] = config.left_pad
        self.gbuf[-1] = config.right_pad

        self.tabulated = None
        self.tail_mass = 0.0
        if params.is_nonlocal:
            tk = params.kernel.tabulate(grid.dx, config.tail_tolerance)
            if tk.radius >= grid.half_length:
                raise StencilOverrun(
                    f"kernel radius {tk.radius:g} does not fit inside half-length "
                    f"{grid.half_length:g}"
                )
            self.tabulated = tk
            self.tail_mass = tk.tail_mass
            m = tk.half_width
            self.m = m
            self.upad = np.empty(self.n + 2 * m)
            self.upad[:m] = config.left_pad
            self.upad[-m:] = config.right_pad
            self.nfft = sfft.next_fast_len(self.n + 4 * m)
            self.sten_hat = sfft.rfft(tk.stencil, self.nfft)
            self.use_fft = m > _FFT_MIN_HALF_WIDTH
            self.stencil = tk.stencil

        # a-priori amplitude cap for blow-up detection
        r = params.reaction
        if isinstance(r, NonlocalFisher):
            k0 = analysis.k0_constant(params.kernel, r.mu)
        else:
            k0 = 1.0
        self.blowup_cap = 10.0 * max(1.0, k0, abs(config.left_pad), abs(config.right_pad))

    def conv(self, u: np.ndarray) -> np.ndarray:
        m = self.m
        self.upad[m:m + self.n] = u
        if self.use_fft:
            prod = sfft.rfft(self.upad, self.nfft) * self.sten_hat
            return sfft.irfft(prod, self.nfft)[2 * m:2 * m + self.n]
        return np.convolve(self.upad, self.stencil, mode="valid")

    def rhs(self, u: np.ndarray) -> np.ndarray:
        g = self.gbuf
        g[1:-1] = u
        if self.config.left_boundary == "tail":
            pad = self.config.left_pad
            dev = u[0] - pad
            g[0] = pad + dev * _decay_ratio(dev, u[1] - pad)
        if self.config.right_boundary == "tail":
            pad = self.config.right_pad
            dev = u[-1] - pad
            g[-1] = pad + dev * _decay_ratio(dev, u[-2] - pad)
        out = g[:-2] + g[2:]
        out -= 2.0 * u
        out *= self.inv_dx2
        if self.c_over_2dx:
            out += self.c_over_2dx * (g[2:] - g[:-2])
        conv = self.conv(u) if self.tabulated is not None else None
        out += reaction_term(u, conv, self.params)
        return out

    def fill_right(self, u: np.ndarray, cells: int) -> None:
        """Values for cells revealed at the right edge by a shift."""
        pad = self.config.right_pad
        if self.config.right_boundary == "tail":
            dev = u[-cells - 1] - pad
            rho = _decay_ratio(dev, u[-cells - 2] - pad)
            u[-cells:] = pad + dev * rho ** np.arange(1, cells + 1)
        else:
            u[-cells:] = pad

    def fill_left(self, u: np.ndarray, cells: int) -> None:
        """Values for cells revealed at the left edge by a shift."""
        pad = self.config.left_pad
        if self.config.left_boundary == "tail":
            dev = u[cells] - pad
            rho = _decay_ratio(dev, u[cells + 1] - pad)
            u[:cells] = pad + dev * rho ** np.arange(cells, 0, -1)
        else:
            u[:cells] = pad

    def shift(self, u: np.ndarray) -> None:
        """Exact advection over one step: displace by shift_cells."""
        s = self.scheme.shift_cells
        if s > 0:
            u[:-s] = u[s:]
            self.fill_right(u, s)
        elif s < 0:
            u[-s:] = u[:s]
            self.fill_left(u, -s)

    def advance(self, u: np.ndarray, dt: float) -> np.ndarray:
        if self.scheme.mode == "centered":
            return _rk4(self, u, dt)
        u = _rk4(self, u, 0.5 * dt)
        self.shift(u)
        return _rk4(self, u, 0.5 * dt)


def _rk4(plan: _RunPlan, u: np.ndarray, dt: float) -> np.ndarray:
    k1 = plan.rhs(u)
    k2 = plan.rhs(u + (0.5 * dt) * k1)
    k3 = plan.rhs(u + (0.5 * dt) * k2)
    k4 = plan.rhs(u + dt * k3)
    u += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return u


def _check_finite(u: np.ndarray, cap: float, step_index: int, t: float) -> None:
    bad = not np.all(np.isfinite(u))
    if not bad:
        bad = float(np.max(np.abs(u))) > cap
    if bad:
        raise BlowUp(
            f"solution left the admissible range (cap {cap:g}) at step "
            f"{step_index}, t = {t:g}",
            step_index=step_index, time=t,
        )


def step(state: Field, params: ModelParams, config: SimConfig) -> Field:
    """Advance one step of the resolved scheme.  One-shot convenience;
    :func:`evolve` runs the same update in a preplanned loop."""
    scheme = resolve_scheme(state.grid, params, config)
    plan = _RunPlan(state.grid, params, config, scheme)
    u = plan.advance(state.values.copy(), scheme.dt)
    _check_finite(u, plan.blowup_cap, 1, scheme.dt)
    return Field(state.grid, u)


def level_crossing(x: np.ndarray, u: np.ndarray, level: float) -> float | None:
    """Rightmost crossing of u = level, by linear interpolation; None if absent."""
    d = u - level
    sign_change = d[:-1] * d[1:] <= 0
    nontrivial = (d[:-1] != 0) | (d[1:] != 0)
    idx = np.nonzero(sign_change & nontrivial)[0]
    if len(idx) == 0:
        return None
    j = int(idx[-1])
    if d[j] == d[j + 1]:
        return float(x[j])
    frac = d[j] / (d[j] - d[j + 1])
    return float(x[j] + frac * (x[j + 1] - x[j]))


@dataclass
class Trajectory:
    """Evolution history: summary series, optional snapshots, final state."""

    times: np.ndarray
    front_positions: np.ndarray
    sup_norms: np.ndarray
    l2_grads: np.ndarray
    final: Field
    stop_reason: str
    steps: int
    shift_offset: float
    tail_mass: float
    dt: float
    scheme_mode: str
    snapshots: list[tuple[float, np.ndarray]] = field(default_factory=list)


def _l2_grad(u: np.ndarray, dx: float) -> float:
    du = np.gradient(u, dx, edge_order=2)
    return float(np.trapz(du * du, dx=dx))


def evolve(initial: Field, params: ModelParams, config: SimConfig,
           on_snapshot: Callable[[float, np.ndarray, np.ndarray], None] | None = None,
           ) -> Trajectory:
    """Run until t_final or until the profile stops changing (steady_tol).

    The summary series (t, front position, sup norm, int u'^2) is recorded
    every ``output_stride`` steps.  Snapshots are kept (and passed to
    ``on_snapshot``) roughly every ``snapshot_interval`` time units.  Lab-frame
    runs re-center the profile when the front drifts within L/4 of a boundary;
    recorded front positions include the accumulated shift.
    """
    grid = initial.grid
    scheme = resolve_scheme(grid, params, config)
    plan = _RunPlan(grid, params, config, scheme)
    dt = scheme.dt
    u = initial.values.copy()
    x = grid.x
    L = grid.half_length

    times, fronts, sups, l2s = [], [], [], []
    snapshots: list[tuple[float, np.ndarray]] = []
    offset = 0.0
    prev_u = u.copy()
    prev_t = 0.0
    next_snap = 0.0
    stop_reason = "t_final"
    t = 0.0
    step_index = 0

    def record(t_now):
        cross = level_crossing(x, u, config.front_level)
        fronts.append(offset + cross if cross is not None else math.nan)
        times.append(t_now)
        sups.append(float(np.max(np.abs(u))))
        l2s.append(_l2_grad(u, grid.dx))

    def snapshot(t_now):
        nonlocal next_snap
        if config.snapshot_interval is None:
            return
        if t_now + 1e-12 >= next_snap:
            snapshots.append((t_now, u.copy()))
            if on_snapshot is not None:
                on_snapshot(t_now, x, u)
            next_snap += config.snapshot_interval

    record(0.0)
    snapshot(0.0)

    def partial() -> "Trajectory":
        return Trajectory(
            np.array(times), np.array(fronts), np.array(sups), np.array(l2s),
            Field(grid, np.where(np.isfinite(u), u, 0.0)), "blowup",
            step_index, offset, plan.tail_mass, dt, scheme.mode, snapshots,
        )

    # In shift mode every step advects a whole number of cells, so the horizon
    # rounds to a whole number of steps; elsewhere a short final step lands on
    # t_final exactly.
    n_steps = max(1, int(math.ceil(config.t_final / dt - 1e-9)))
    while step_index < n_steps:
        if scheme.mode == "centered":
            dt_step = min(dt, config.t_final - t)
            if dt_step <= 1e-14 * dt:
                break
        else:
            dt_step = dt
        u = plan.advance(u, dt_step)
        step_index += 1
        t += dt_step
        try:
            _check_finite(u, plan.blowup_cap, step_index, t)
        except BlowUp as err:
            err.trajectory = partial()
            raise
        snapshot(t)

        if step_index % config.output_stride == 0 or step_index == n_steps:
            record(t)
            change_rate = float(np.max(np.abs(u - prev_u))) / (t - prev_t)
            if change_rate < config.steady_tol:
                stop_reason = "steady_tol"
                break
            prev_u[:] = u
            prev_t = t
            if config.recenter and config.frame_speed == 0.0:
                cross = level_crossing(x, u, config.front_level)
                if cross is not None and abs(cross) > 0.75 * L:
                    cells = int(round(cross / grid.dx))
                    if cells > 0:
                        u[:-cells] = u[cells:]
                        plan.fill_right(u, cells)
                    elif cells < 0:
                        u[-cells:] = u[:cells]
                        plan.fill_left(u, -cells)
                    offset += cells * grid.dx
                    prev_u[:] = u

    if config.snapshot_interval is not None and (not snapshots or snapshots[-1][0] < t):
        snapshots.append((t, u.copy()))
        if on_snapshot is not None:
            on_snapshot(t, x, u)
    if not times or times[-1] < t:
        record(t)

    return Trajectory(
        np.array(times), np.array(fronts), np.array(sups), np.array(l2s),
        Field(grid, u), stop_reason, step_index, offset, plan.tail_mass, dt,
        scheme.mode, snapshots,
    )


def steady_residual(profile: Field, c: float, params: ModelParams,
                    left_pad: float = 1.0, right_pad: float = 0.0,
                    tail_tolerance: float = 1e-8,
                    derivative_order: int = 2,
                    advection_order: int | None = None,
                    boundary_margin: int | None = None) -> float:
    """Discrete L2 norm of u'' + c u' + reaction over the grid interior.

    With the default stencils (``derivative_order=2``) the operators match the
    centered time stepper, so the residual of one of its fixed points is at
    rounding level: the residual measures relaxation convergence.  Profiles
    converged under the exact-shift splitting satisfy the wave profile
    equation with an *exact* advection derivative; pass ``advection_order=4``
    so the first derivative is evaluated accurately rather than matched to the
    centered stencil.  ``derivative_order=4`` switches both derivatives to
    fourth order, exposing the O(dx^2) spatial error of a converged profile
    (a self-convergence oracle).

    ``boundary_margin`` nodes at each end are excluded from the norm (default:
    the convolution stencil half-width plus a few cells, where ghost padding
    makes the translation-invariance arguments fail).
    """
    grid = profile.grid
    u = profile.values
    dx = grid.dx
    conv = None
    margin = 2
    if params.is_nonlocal:
        tk = params.kernel.tabulate(dx, tail_tolerance)
        conv = convolve(profile, tk, left_pad, right_pad).values
        margin = tk.half_width + 4
    if boundary_margin is not None:
        margin = boundary_margin

    if derivative_order == 2:
        g = _padded(u, 2, left_pad, right_pad)
        d2 = (g[1:-3] - 2.0 * u + g[3:-1]) / dx ** 2
        if advection_order == 4:
            d1 = (-g[4:] + 8.0 * g[3:-1] - 8.0 * g[1:-3] + g[:-4]) / (12.0 * dx)
        else:
            d1 = (g[3:-1] - g[1:-3]) / (2.0 * dx)
    elif derivative_order == 4:
        g = _padded(u, 2, left_pad, right_pad)
        d2 = (-g[4:] + 16.0 * g[3:-1] - 30.0 * u + 16.0 * g[1:-3] - g[:-4]) / (12.0 * dx ** 2)
        d1 = (-g[4:] + 8.0 * g[3:-1] - 8.0 * g[1:-3] + g[:-4]) / (12.0 * dx)
    else:
        raise ConfigError("derivative_order must be 2 or 4")

    r = d2 + c * d1 + reaction_term(u, conv, params)
    if margin > 0:
        r = r[margin:-margin]
    return float(math.sqrt(np.sum(r * r) * dx))
