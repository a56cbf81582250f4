"""Shared fixtures and independent oracle helpers for the test suite."""
import math

import numpy as np
import pytest
from scipy import integrate

import nlfisher as nl


def quad_moment(kernel, i):
    """Absolute moment by direct adaptive quadrature, independent of the
    closed-form implementation path."""
    val_pos, _ = integrate.quad(lambda z: z ** i * kernel.eval(z), 0, np.inf,
                                epsabs=1e-13, epsrel=1e-12, limit=400)
    val_neg, _ = integrate.quad(lambda z: (-z) ** i * kernel.eval(z), -np.inf, 0,
                                epsabs=1e-13, epsrel=1e-12, limit=400)
    return val_pos + val_neg


def quad_mass(kernel):
    val_pos, _ = integrate.quad(kernel.eval, 0, np.inf,
                                epsabs=1e-14, epsrel=1e-12, limit=400)
    val_neg, _ = integrate.quad(kernel.eval, -np.inf, 0,
                                epsabs=1e-14, epsrel=1e-12, limit=400)
    return val_pos + val_neg


def quad_k0_integral(kernel, mu, breaks=()):
    """Amplitude-bound integrand by quadrature over the support of the hinge."""
    s = math.sqrt(2.0 / mu)
    pts = sorted({0.0, *(b for b in breaks if -s < b < s)})
    val, _ = integrate.quad(lambda z: kernel.eval(z) * (1.0 - 0.5 * mu * z * z),
                            -s, s, points=pts, epsabs=1e-14, epsrel=1e-12,
                            limit=400)
    return val


def quad_fourier_real(kernel, k, radius):
    """Real part of the transform by direct quadrature on [-radius, radius]."""
    val, _ = integrate.quad(lambda z: kernel.eval(z) * math.cos(k * z),
                            -radius, radius, epsabs=1e-13, epsrel=1e-12,
                            limit=800)
    return val


ANALYTIC_LATTICE = [
    nl.TopHat(0.5), nl.TopHat(1.0), nl.TopHat(2.0),
    nl.Gaussian(0.5), nl.Gaussian(1.0), nl.Gaussian(2.0),
    nl.Laplace(0.5), nl.Laplace(1.0), nl.Laplace(2.0),
    nl.PowerTail(3.5), nl.PowerTail(5.0), nl.PowerTail(8.0),
]


@pytest.fixture(scope="session")
def analytic_lattice():
    return ANALYTIC_LATTICE
