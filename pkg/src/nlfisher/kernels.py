"""Dispersal kernels: analytic families, validation, moments, transforms, tabulation.

Every kernel is a probability density on the line.  The standing hypotheses
checked by :func:`Kernel.validate` are: pointwise nonnegativity, positivity at
the origin, unit mass, and a finite second moment.

Fourier convention: ``fourier(k) = int phi(z) exp(-i k z) dz`` with no 2*pi
prefactor, so ``fourier(0) == 1`` for a unit-mass kernel.  This convention is
used everywhere in the package.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import integrate, special

from .errors import DivergentMoment, InvalidKernel, TruncationFailure

# Mass tolerances for the unit-mass hypothesis.
MASS_TOL_ANALYTIC = 1e-10
MASS_TOL_TABULATED = 1e-8

# Truncation radii beyond this are refused (fat tails + tiny tolerance).
HARD_RADIUS_CAP = 1e5

_QUAD_OPTS = dict(epsabs=1e-13, epsrel=1e-11, limit=400)


def _scalar_or_array(z, out):
    out = np.asarray(out)
    return out if out.ndim else out[()]


@dataclass(frozen=True)
class ValidationReport:
    """Pass/fail record for the four kernel hypotheses."""

    nonnegative: bool
    positive_at_origin: bool
    unit_mass: bool
    finite_second_moment: bool
    mass: float
    second_moment: float

    @property
    def passed(self) -> bool:
        return (self.nonnegative and self.positive_at_origin
                and self.unit_mass and self.finite_second_moment)

    def failures(self) -> list[str]:
        out = []
        if not self.nonnegative:
            out.append("kernel takes negative values")
        if not self.positive_at_origin:
            out.append("kernel vanishes at the origin")
        if not self.unit_mass:
            out.append(f"kernel mass {self.mass!r} differs from 1")
        if not self.finite_second_moment:
            out.append("second moment diverges")
        return out

    def to_dict(self) -> dict:
        return {
            "nonnegative": self.nonnegative,
            "positive_at_origin": self.positive_at_origin,
            "unit_mass": self.unit_mass,
            "finite_second_moment": self.finite_second_moment,
            "mass": self.mass,
            "second_moment": self.second_moment,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class TabulatedKernel:
    """Kernel sampled on offsets ``-R..R`` with uniform spacing, ready for
    discrete convolution.

    ``values`` are density samples renormalized so that the trapezoid-weighted
    discrete mass is exactly 1 (this makes ``phi * const == const`` for the
    discrete convolution).  ``tail_mass`` records the analytic mass discarded
    outside ``[-R, R]`` before renormalization.
    """

    spacing: float
    values: np.ndarray
    tail_mass: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or len(v) < 3 or len(v) % 2 == 0:
            raise InvalidKernel("tabulated kernel needs an odd number (>= 3) of samples")
        if self.spacing <= 0:
            raise InvalidKernel("tabulation spacing must be positive")
        if not np.all(np.isfinite(v)):
            raise InvalidKernel("tabulated kernel has non-finite samples")
        if np.any(v < 0):
            raise InvalidKernel("tabulated kernel has negative samples")

    @property
    def half_width(self) -> int:
        return (len(self.values) - 1) // 2

    @property
    def radius(self) -> float:
        return self.half_width * self.spacing

    @cached_property
    def offsets(self) -> np.ndarray:
        m = self.half_width
        return np.arange(-m, m + 1) * self.spacing

    @cached_property
    def stencil(self) -> np.ndarray:
        """Quadrature-weighted samples; sums to 1 up to rounding."""
        w = np.full(len(self.values), self.spacing)
        w[0] *= 0.5
        w[-1] *= 0.5
        return self.values * w

    def discrete_mass(self) -> float:
        return float(self.stencil.sum())


class Kernel:
    """Base class for dispersal kernels.

    Subclasses provide ``eval``, closed-form moments/transform/tails where the
    family admits them, and fall back on the shared quadrature helpers here.
    All instances are immutable; every method is a pure function.
    """

    #: z-positions where the density is continuous but not smooth
    _kinks: tuple[float, ...] = ()

    def eval(self, z):
        raise NotImplementedError

    def support_radius(self) -> float:
        return math.inf

    def moment(self, i: int) -> float:
        """Absolute moment m_i = int |z|^i phi(z) dz for i in {1, 2}."""
        raise NotImplementedError

    def fourier(self, k):
        """Transform at wavenumber(s) k; complex, with fourier(0) == 1."""
        raise NotImplementedError

    def tail_mass(self, r: float) -> float:
        """Two-sided mass outside [-r, r]."""
        raise NotImplementedError

    def tail_radius(self, tol: float) -> float:
        """Smallest r with tail_mass(r) <= tol."""
        raise NotImplementedError

    def spec_string(self) -> str:
        raise NotImplementedError

    # -- shared machinery -------------------------------------------------

    def integrate_against(self, g, lo: float, hi: float, breakpoints=()) -> float:
        """Integral of phi(z) * g(z) over the finite interval [lo, hi].

        The integration is split at the kernel's kinks and at any supplied
        breakpoints of g so adaptive quadrature converges at full order.
        """
        if hi <= lo:
            return 0.0
        pts = sorted({p for p in (*self._kinks, *breakpoints) if lo < p < hi})
        val, _ = integrate.quad(lambda z: self.eval(z) * g(z), lo, hi,
                                points=pts or None, **_QUAD_OPTS)
        return val

    def mass_numeric(self) -> float:
        """Total mass by quadrature."""
        r = self.support_radius()
        if math.isfinite(r):
            return self.integrate_against(lambda z: 1.0, -r, r)
        edges = [-math.inf, *sorted(self._kinks or (0.0,)), math.inf]
        total = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            val, _ = integrate.quad(self.eval, lo, hi, **_QUAD_OPTS)
            total += val
        return total

    def validate(self) -> ValidationReport:
        """Check the four standing hypotheses and report each outcome."""
        r = self.support_radius()
        if not math.isfinite(r):
            r = self.tail_radius(1e-9)
        zs = np.linspace(-r, r, 4097)
        nonneg = bool(np.all(self.eval(zs) >= 0))
        origin = bool(self.eval(0.0) > 0)
        mass = self.mass_numeric()
        tol = MASS_TOL_TABULATED if isinstance(self, Tabulated) else MASS_TOL_ANALYTIC
        unit = bool(abs(mass - 1.0) <= tol)
        try:
            m2 = self.moment(2)
            finite_m2 = math.isfinite(m2)
        except DivergentMoment:
            m2 = math.inf
            finite_m2 = False
        return ValidationReport(nonneg, origin, unit, finite_m2, mass, m2)

    def require_valid(self) -> None:
        report = self.validate()
        if not report.passed:
            raise InvalidKernel("; ".join(report.failures()))

    def tabulate(self, spacing: float, tail_tolerance: float,
                 hard_cap: float = HARD_RADIUS_CAP) -> TabulatedKernel:
        """Sample the kernel on a uniform symmetric grid for discrete convolution.

        The truncation radius is the smallest grid-aligned radius whose
        discarded tail mass is at most ``tail_tolerance``; samples are then
        renormalized to exact unit discrete mass (so discrete convolution
        preserves constants), and the discarded mass is recorded.
        """
        if spacing <= 0:
            raise InvalidKernel("tabulation spacing must be positive")
        if not 0 < tail_tolerance < 1:
            raise InvalidKernel("tail tolerance must lie in (0, 1)")
        r_needed = self.tail_radius(tail_tolerance)
        if r_needed > hard_cap:
            raise TruncationFailure(
                f"truncation radius {r_needed:.3g} exceeds hard cap {hard_cap:.3g}"
            )
        m = max(1, int(math.ceil(r_needed / spacing - 1e-12)))
        offsets = np.arange(-m, m + 1) * spacing
        raw = np.asarray(self.eval(offsets), dtype=float)
        w = np.full(len(raw), spacing)
        w[0] *= 0.5
        w[-1] *= 0.5
        mass = float(raw @ w)
        if mass <= 0:
            raise InvalidKernel("kernel mass vanishes on the tabulation window")
        return TabulatedKernel(spacing, raw / mass, self.tail_mass(m * spacing))


def fourier_numeric(kernel: Kernel, k):
    """Transform by quadrature; reference path for kernels without a closed form.

    Finite-support kernels are integrated piecewise over their support; even
    kernels with unbounded support use a semi-infinite Fourier-weighted rule.
    """
    ks = np.atleast_1d(np.asarray(k, dtype=float))
    out = np.empty(len(ks), dtype=complex)
    r = kernel.support_radius()
    for j, kj in enumerate(ks):
        if math.isfinite(r):
            pts = sorted({p for p in kernel._kinks if -r < p < r})
            re, _ = integrate.quad(lambda z: kernel.eval(z) * math.cos(kj * z),
                                   -r, r, points=pts or None, **_QUAD_OPTS)
            im, _ = integrate.quad(lambda z: kernel.eval(z) * math.sin(kj * z),
                                   -r, r, points=pts or None, **_QUAD_OPTS)
            out[j] = re - 1j * im
        else:
            # Unbounded support: shipped families are even, so the transform
            # reduces to a cosine integral on the half line.
            if abs(kj) < 1e-300:
                out[j] = kernel.mass_numeric()
                continue
            val, _ = integrate.quad(kernel.eval, 0.0, np.inf,
                                    weight="cos", wvar=abs(kj), limit=400)
            out[j] = 2.0 * val
    return _scalar_or_array(k, out if np.ndim(k) else out[0])


@dataclass(frozen=True)
class TopHat(Kernel):
    """Uniform density 1/(2a) on [-a, a]."""

    halfwidth: float

    def __post_init__(self):
        if not (self.halfwidth > 0 and math.isfinite(self.halfwidth)):
            raise InvalidKernel("tophat halfwidth must be positive and finite")
        object.__setattr__(self, "_kinks", (-self.halfwidth, self.halfwidth))

    def eval(self, z):
        z = np.asarray(z, dtype=float)
        out = np.where(np.abs(z) <= self.halfwidth, 0.5 / self.halfwidth, 0.0)
        return _scalar_or_array(z, out)

    def support_radius(self) -> float:
        return self.halfwidth

    def moment(self, i: int) -> float:
        _check_order(i)
        a = self.halfwidth
        return a / 2.0 if i == 1 else a * a / 3.0

    def fourier(self, k):
        k = np.asarray(k, dtype=float)
        # sin(ka)/(ka), safely 1 at k=0
        out = np.sinc(k * self.halfwidth / np.pi).astype(complex)
        return _scalar_or_array(k, out)

    def tail_mass(self, r: float) -> float:
        return 0.0 if r >= self.halfwidth else 1.0 - r / self.halfwidth

    def tail_radius(self, tol: float) -> float:
        return self.halfwidth

    def spec_string(self) -> str:
        return f"tophat:a={self.halfwidth:g}"


@dataclass(frozen=True)
class Gaussian(Kernel):
    """Normal density with standard deviation sigma."""

    sigma: float

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise InvalidKernel("gaussian sigma must be positive and finite")

    def eval(self, z):
        z = np.asarray(z, dtype=float)
        s = self.sigma
        out = np.exp(-0.5 * (z / s) ** 2) / (s * math.sqrt(2.0 * math.pi))
        return _scalar_or_array(z, out)

    def moment(self, i: int) -> float:
        _check_order(i)
        s = self.sigma
        return s * math.sqrt(2.0 / math.pi) if i == 1 else s * s

    def fourier(self, k):
        k = np.asarray(k, dtype=float)
        out = np.exp(-0.5 * (self.sigma * k) ** 2).astype(complex)
        return _scalar_or_array(k, out)

    def tail_mass(self, r: float) -> float:
        return float(special.erfc(r / (self.sigma * math.sqrt(2.0))))

    def tail_radius(self, tol: float) -> float:
        return float(self.sigma * math.sqrt(2.0) * special.erfcinv(tol))

    def spec_string(self) -> str:
        return f"gaussian:sigma={self.sigma:g}"


@dataclass(frozen=True)
class Laplace(Kernel):
    """Two-sided exponential density exp(-|z|/b) / (2b)."""

    scale: float

    def __post_init__(self):
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise InvalidKernel("laplace scale must be positive and finite")
        object.__setattr__(self, "_kinks", (0.0,))

    def eval(self, z):
        z = np.asarray(z, dtype=float)
        b = self.scale
        out = np.exp(-np.abs(z) / b) / (2.0 * b)
        return _scalar_or_array(z, out)

    def moment(self, i: int) -> float:
        _check_order(i)
        b = self.scale
        return b if i == 1 else 2.0 * b * b

    def fourier(self, k):
        k = np.asarray(k, dtype=float)
        out = (1.0 / (1.0 + (self.scale * k) ** 2)).astype(complex)
        return _scalar_or_array(k, out)

    def tail_mass(self, r: float) -> float:
        return math.exp(-r / self.scale)

    def tail_radius(self, tol: float) -> float:
        return -self.scale * math.log(tol)

    def spec_string(self) -> str:
        return f"laplace:b={self.scale:g}"


@dataclass(frozen=True)
class PowerTail(Kernel):
    """Fat-tailed density proportional to (1 + |z|)^(-p).

    Normalizable for p > 1; the finite-second-moment hypothesis additionally
    requires p > 3.  Normalization constant is (p - 1) / 2.
    """

    exponent: float

    def __post_init__(self):
        if not (self.exponent > 1 and math.isfinite(self.exponent)):
            raise InvalidKernel("powertail exponent must exceed 1 (normalizability)")
        object.__setattr__(self, "_kinks", (0.0,))

    @property
    def _norm(self) -> float:
        return (self.exponent - 1.0) / 2.0

    def eval(self, z):
        z = np.asarray(z, dtype=float)
        out = self._norm * (1.0 + np.abs(z)) ** (-self.exponent)
        return _scalar_or_array(z, out)

    def moment(self, i: int) -> float:
        _check_order(i)
        p = self.exponent
        if i == 1:
            if p <= 2:
                raise DivergentMoment(f"first moment diverges for p = {p} <= 2")
            return 1.0 / (p - 2.0)
        if p <= 3:
            raise DivergentMoment(f"second moment diverges for p = {p} <= 3")
        return 2.0 / ((p - 2.0) * (p - 3.0))

    def fourier(self, k):
        return fourier_numeric(self, k)

    def tail_mass(self, r: float) -> float:
        return (1.0 + r) ** (1.0 - self.exponent)

    def tail_radius(self, tol: float) -> float:
        return tol ** (-1.0 / (self.exponent - 1.0)) - 1.0

    def spec_string(self) -> str:
        return f"powertail:p={self.exponent:g}"


@dataclass(frozen=True)
class Tabulated(Kernel):
    """Kernel given by density samples on a symmetric uniform grid.

    Evaluation between samples is piecewise linear and zero outside the
    sampled window; moments integrate the interpolant exactly.  Sample values
    need not be even in z (asymmetric kernels are allowed), but the grid of
    offsets must be symmetric about 0.
    """

    spacing: float
    samples: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.samples, dtype=float)
        object.__setattr__(self, "samples", v)
        if v.ndim != 1 or len(v) < 3 or len(v) % 2 == 0:
            raise InvalidKernel("tabulated kernel needs an odd number (>= 3) of samples")
        if self.spacing <= 0:
            raise InvalidKernel("tabulated kernel spacing must be positive")
        if not np.all(np.isfinite(v)):
            raise InvalidKernel("tabulated kernel has non-finite samples")

    @classmethod
    def from_csv(cls, path) -> "Tabulated":
        """Load a two-column CSV of (offset, density) on a symmetric uniform grid."""
        data = np.loadtxt(path, delimiter=",", dtype=float, ndmin=2)
        if data.shape[1] != 2:
            raise InvalidKernel(f"{path}: expected two columns (offset, density)")
        z, v = data[:, 0], data[:, 1]
        order = np.argsort(z)
        z, v = z[order], v[order]
        dz = np.diff(z)
        if len(dz) == 0 or not np.allclose(dz, dz[0], rtol=1e-8, atol=0):
            raise InvalidKernel(f"{path}: offsets are not uniformly spaced")
        # mean spacing averages away last-ulp noise in the parsed offsets
        h = float((z[-1] - z[0]) / (len(z) - 1))
        if abs(z[0] + z[-1]) > 1e-8 * max(abs(z[0]), h):
            raise InvalidKernel(f"{path}: offset grid is not symmetric about 0")
        return cls(h, v)

    @cached_property
    def offsets(self) -> np.ndarray:
        m = (len(self.samples) - 1) // 2
        return np.arange(-m, m + 1) * self.spacing

    def eval(self, z):
        z = np.asarray(z, dtype=float)
        out = np.interp(z, self.offsets, self.samples, left=0.0, right=0.0)
        return _scalar_or_array(z, out)

    def support_radius(self) -> float:
        return float(self.offsets[-1])

    def integrate_against(self, g, lo: float, hi: float, breakpoints=()) -> float:
        """Exact integral of the interpolant against g (Simpson per subcell).

        Exact whenever g is polynomial of degree <= 2 on each piece between
        breakpoints, since interpolant * g is then cubic per cell.
        """
        r = self.support_radius()
        lo = max(lo, -r)
        hi = min(hi, r)
        if hi <= lo:
            return 0.0
        edges = set(np.clip(self.offsets, lo, hi).tolist())
        edges.update([lo, hi])
        edges.update(p for p in breakpoints if lo < p < hi)
        edges = np.array(sorted(edges))
        a, b = edges[:-1], edges[1:]
        mid = 0.5 * (a + b)
        fa, fm, fb = self.eval(a), self.eval(mid), self.eval(b)
        ga = np.array([g(t) for t in a], dtype=float)
        gm = np.array([g(t) for t in mid], dtype=float)
        gb = np.array([g(t) for t in b], dtype=float)
        return float(np.sum((b - a) / 6.0 * (fa * ga + 4.0 * fm * gm + fb * gb)))

    def mass_numeric(self) -> float:
        return float(np.trapz(self.samples, dx=self.spacing))

    def moment(self, i: int) -> float:
        _check_order(i)
        r = self.support_radius()
        return self.integrate_against(lambda z: abs(z) ** i, -r, r, breakpoints=(0.0,))

    def fourier(self, k):
        """Transform of the samples by trapezoidal summation."""
        k = np.asarray(k, dtype=float)
        w = np.full(len(self.samples), self.spacing)
        w[0] *= 0.5
        w[-1] *= 0.5
        phase = np.exp(-1j * np.multiply.outer(k, self.offsets))
        out = phase @ (w * self.samples)
        return _scalar_or_array(k, out)

    def tail_mass(self, r: float) -> float:
        if r >= self.support_radius():
            return 0.0
        total = self.mass_numeric()
        inner = self.integrate_against(lambda z: 1.0, -r, r)
        return max(0.0, total - inner)

    def tail_radius(self, tol: float) -> float:
        return self.support_radius()

    def spec_string(self) -> str:
        return f"tabulated:h={self.spacing:g},n={len(self.samples)}"


def _check_order(i: int) -> None:
    if i not in (1, 2):
        raise ValueError(f"moment order must be 1 or 2, got {i!r}")


def parse_kernel_spec(spec: str) -> Kernel:
    """Build a kernel from the CLI/config grammar.

    Accepted forms: ``tophat:a=1``, ``gaussian:sigma=0.5``, ``laplace:b=1``,
    ``powertail:p=5``, ``tabulated:file=PATH`` (two-column CSV of offset,
    density).
    """
    name, _, rest = spec.strip().partition(":")
    params = {}
    if rest:
        for item in rest.split(","):
            key, eq, value = item.partition("=")
            if not eq:
                raise InvalidKernel(f"malformed kernel parameter {item!r} in {spec!r}")
            params[key.strip()] = value.strip()

    def _float(key):
        if key not in params:
            raise InvalidKernel(f"kernel spec {spec!r} is missing parameter {key!r}")
        try:
            return float(params[key])
        except ValueError:
            raise InvalidKernel(f"kernel parameter {key}={params[key]!r} is not a number")

    name = name.strip().lower()
    if name == "tophat":
        return TopHat(_float("a"))
    if name == "gaussian":
        return Gaussian(_float("sigma"))
    if name == "laplace":
        return Laplace(_float("b"))
    if name == "powertail":
        return PowerTail(_float("p"))
    if name == "tabulated":
        if "file" not in params:
            raise InvalidKernel("tabulated kernel spec needs file=PATH")
        path = Path(params["file"])
        if not path.exists():
            raise InvalidKernel(f"tabulated kernel file not found: {path}")
        return Tabulated.from_csv(path)
    raise InvalidKernel(f"unknown kernel family {name!r}")
