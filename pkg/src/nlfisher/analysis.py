"""Explicit thresholds and linear stability analysis.

Quantities computed here:

* ``critical_speed``: minimal front speed 2*sqrt(mu) of the monostable problem.
* ``k0_constant``: a-priori amplitude bound
  ``K0 = 1 / int phi(z) (1 - mu z^2 / 2)_+ dz``.
* ``rapid_speed_threshold``: ``c_bar = mu * sqrt(m2) * K0``; waves faster than
  this are guaranteed to connect the states 0 and 1.
* ``dispersion_growth``: growth rate ``lambda(k) = -k^2 - mu * Re phi_hat(k)``
  of mode ``exp(i k x)`` around the uniform state 1.
* ``turing_analysis``: scan of lambda(k) plus the smallest destabilizing mu.
* ``connectivity_condition`` / ``bistable_condition``: sufficient conditions
  ``mu*sqrt(m2)*M < |c|`` and ``sqrt(m2)*M^2 < |c|`` for clean tail limits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateIntegral, InconclusiveScan, NonpositiveMu
from .kernels import Gaussian, Kernel, Laplace, TopHat

#: transform values within this band of zero cannot be sign-certified when the
#: transform itself comes from quadrature
_QUAD_NOISE_FLOOR = 1e-9

_SCAN_POINTS = 4096
_GOLDEN_TOL = 1e-12


@dataclass(frozen=True)
class Thresholds:
    """The explicit constants attached to a (kernel, mu) pair."""

    mu: float
    m1: float
    m2: float
    c_star: float
    k0: float
    c_bar: float

    @classmethod
    def compute(cls, kernel: Kernel, mu: float) -> "Thresholds":
        return cls(
            mu=mu,
            m1=kernel.moment(1),
            m2=kernel.moment(2),
            c_star=critical_speed(mu),
            k0=k0_constant(kernel, mu),
            c_bar=rapid_speed_threshold(kernel, mu),
        )

    def to_dict(self) -> dict:
        return {"mu": self.mu, "m1": self.m1, "m2": self.m2,
                "c_star": self.c_star, "k0": self.k0, "c_bar": self.c_bar}


@dataclass(frozen=True)
class DispersionReport:
    """Outcome of the linear stability scan around the uniform state 1."""

    unstable: bool
    k_max: float
    lambda_max: float
    mu_critical: float | None
    stable_for_all_mu: bool
    scan_k_hi: float
    transform_min: float

    def to_dict(self) -> dict:
        return {
            "unstable": self.unstable,
            "k_max": self.k_max,
            "lambda_max": self.lambda_max,
            "mu_critical": ("stable for all mu" if self.stable_for_all_mu
                            else self.mu_critical),
            "stable_for_all_mu": self.stable_for_all_mu,
            "scan_k_hi": self.scan_k_hi,
            "transform_min": self.transform_min,
        }


def critical_speed(mu: float) -> float:
    """Minimal admissible wave speed 2*sqrt(mu)."""
    if not (mu > 0 and math.isfinite(mu)):
        raise NonpositiveMu(f"mu must be positive and finite, got {mu!r}")
    return 2.0 * math.sqrt(mu)


def k0_constant(kernel: Kernel, mu: float) -> float:
    """A-priori amplitude bound K0 = 1 / int phi(z) (1 - mu z^2/2)_+ dz.

    The integrand vanishes identically outside |z| = sqrt(2/mu), where it has
    a kink; the integral is taken exactly up to that point so adaptive
    quadrature sees a smooth integrand (apart from the kernel's own kinks).
    """
    if not (mu > 0 and math.isfinite(mu)):
        raise NonpositiveMu(f"mu must be positive and finite, got {mu!r}")
    s = math.sqrt(2.0 / mu)
    # the hinge support can dwarf the kernel's own scale at small mu; clip to
    # where the kernel still has mass (the neglected piece is bounded by the
    # 1e-13 tail and the hinge factor is in (0, 1] there)
    r = min(s, kernel.tail_radius(1e-13))
    val = kernel.integrate_against(lambda z: 1.0 - 0.5 * mu * z * z, -r, r)
    if not val > 1e-300:
        raise DegenerateIntegral(
            f"amplitude-bound integral underflowed ({val!r}); "
            "kernel carries no mass near the origin at this mu"
        )
    return 1.0 / val


def rapid_speed_threshold(kernel: Kernel, mu: float) -> float:
    """Speed threshold c_bar = mu * sqrt(m2) * K0 beyond which waves connect to 1."""
    return mu * math.sqrt(kernel.moment(2)) * k0_constant(kernel, mu)


def dispersion_growth(kernel: Kernel, mu: float, k):
    """Growth rate lambda(k) = -k^2 - mu * Re phi_hat(k) of modes around u == 1."""
    if not (mu > 0 and math.isfinite(mu)):
        raise NonpositiveMu(f"mu must be positive and finite, got {mu!r}")
    k = np.asarray(k, dtype=float)
    out = -(k ** 2) - mu * np.real(kernel.fourier(k))
    return out if out.ndim else float(out)


def connectivity_condition(c: float, mu: float, m2: float, sup_norm: float) -> bool:
    """Sufficient condition mu*sqrt(m2)*||u||_inf < |c| for tail limits in {0, 1}."""
    return mu * math.sqrt(m2) * sup_norm < abs(c)


def bistable_condition(c: float, m2: float, sup_norm: float) -> bool:
    """Bistable analogue sqrt(m2)*||u||_inf^2 < |c| (tail limits in {0, alpha, 1})."""
    return math.sqrt(m2) * sup_norm ** 2 < abs(c)


def _golden_min(f, a: float, b: float, tol: float = _GOLDEN_TOL,
                max_iter: int = 200) -> tuple[float, float]:
    """Golden-section minimum of f on [a, b]; deterministic, derivative-free."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a < tol * max(1.0, abs(a) + abs(b)):
            break
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = f(x2)
    x = x1 if f1 <= f2 else x2
    return x, f(x)


def _transform_is_exact(kernel: Kernel) -> bool:
    return isinstance(kernel, (TopHat, Gaussian, Laplace))


def turing_analysis(kernel: Kernel, mu: float, k_hi: float | None = None) -> DispersionReport:
    """Scan the dispersion relation and locate the instability threshold.

    A geometric grid on (0, k_hi] is refined by golden section around the best
    grid point, both for the growth-rate maximum and for
    ``mu_critical = inf_k k^2 / (-Re phi_hat(k))`` over wavenumbers with a
    negative transform.  If the transform is nonnegative over the whole scan
    range (with certifiable margin), the state 1 is reported stable for every
    mu; if quadrature noise prevents certifying the sign, the scan is
    inconclusive.
    """
    if not (mu > 0 and math.isfinite(mu)):
        raise NonpositiveMu(f"mu must be positive and finite, got {mu!r}")
    m2 = kernel.moment(2)
    if k_hi is None:
        k_hi = max(50.0, 20.0 / math.sqrt(m2))
    ks = np.geomspace(k_hi * 1e-4, k_hi, _SCAN_POINTS)
    phat = np.real(np.asarray(kernel.fourier(ks)))
    lam = -(ks ** 2) - mu * phat

    floor = 0.0 if _transform_is_exact(kernel) else _QUAD_NOISE_FLOOR

    def lam_of(k):
        return float(-(k * k) - mu * np.real(kernel.fourier(k)))

    # growth-rate maximum (reported whether or not it is positive)
    i = int(np.argmax(lam))
    lo = ks[max(i - 1, 0)]
    hi = ks[min(i + 1, len(ks) - 1)]
    k_max, neg_lam = _golden_min(lambda k: -lam_of(k), lo, hi)
    lambda_max = -neg_lam
    transform_min = float(phat.min())

    if np.any(phat < -floor):
        big = 1e300

        def ratio(k):
            ph = float(np.real(kernel.fourier(k)))
            return (k * k) / (-ph) if ph < 0 else big

        r = np.where(phat < -floor, ks ** 2 / np.where(phat < 0, -phat, 1.0), big)
        j = int(np.argmin(r))
        lo = ks[max(j - 1, 0)]
        hi = ks[min(j + 1, len(ks) - 1)]
        _, mu_c = _golden_min(ratio, lo, hi)
        mu_c = min(mu_c, float(r[j]))
        return DispersionReport(
            unstable=lambda_max > 0, k_max=k_max, lambda_max=lambda_max,
            mu_critical=mu_c, stable_for_all_mu=False,
            scan_k_hi=float(k_hi), transform_min=transform_min,
        )

    if floor > 0 and transform_min < floor:
        raise InconclusiveScan(
            "transform positivity cannot be certified on the scanned range: "
            f"min Re phi_hat = {transform_min:.3e} is within the quadrature "
            f"noise floor {floor:.0e}"
        )
    return DispersionReport(
        unstable=False, k_max=k_max, lambda_max=lambda_max,
        mu_critical=None, stable_for_all_mu=True,
        scan_k_hi=float(k_hi), transform_min=transform_min,
    )
