"""Shared fixtures and independent numerical oracles for the test suite."""

import math

import numpy as np
import pytest
from scipy import integrate

from bwlab.kernels import Kernel, kernel_eval
from bwlab.mixtures import NormalMixture


@pytest.fixture
def rng():
    return np.random.default_rng(20260824)


def brute_force_mise(mixture: NormalMixture, kernel: Kernel, n: int,
                     h: float) -> float:
    """MISE by direct double quadrature, independent of any identity.

    Uses E khat(x) = e_h(x) = int K(u) f(x - hu) du and
    E khat(x)^2 - (E khat)^2 via a_h(x) = int K(u)^2 f(x - hu) du, then
    integrates variance plus squared bias over a wide Simpson grid.
    """
    if kernel is Kernel.EPANECHNIKOV:
        nodes, weights = np.polynomial.legendre.leggauss(96)
        u = 0.5 * nodes
        w = 0.5 * weights
    else:
        nodes, weights = np.polynomial.legendre.leggauss(400)
        u = 8.0 * nodes
        w = 8.0 * weights
    ku = kernel_eval(kernel, u)

    lo = min(mixture.means) - 10.0 * max(mixture.sds) - 2.0 * h
    hi = max(mixture.means) + 10.0 * max(mixture.sds) + 2.0 * h
    x = np.linspace(lo, hi, 4001)

    fx_shift = mixture.pdf(x[:, None] - h * u[None, :])
    e_h = fx_shift @ (w * ku)
    a_h = fx_shift @ (w * ku * ku)
    fx = mixture.pdf(x)

    var = (a_h / h - e_h**2) / n
    bias2 = (e_h - fx) ** 2
    return float(integrate.simpson(var + bias2, x=x))


def quad_roughness(mixture: NormalMixture, order: int) -> float:
    """int (f^(order))^2 dx by adaptive quadrature (independent oracle)."""
    from bwlab.mixtures import mixture_pdf_derivative

    lo = min(mixture.means) - 12.0 * max(mixture.sds)
    hi = max(mixture.means) + 12.0 * max(mixture.sds)
    val, err = integrate.quad(
        lambda x: mixture_pdf_derivative(mixture, order, x) ** 2,
        lo, hi, limit=400, epsabs=1e-13, epsrel=1e-12)
    return val


def central_diff(fn, x0: float, order: int, step: float) -> float:
    """Even-order central finite difference with one Richardson step."""
    def basic(s):
        k = order
        coeffs = [math.comb(k, i) * (-1) ** i for i in range(k + 1)]
        pts = [x0 + (k / 2 - i) * s for i in range(k + 1)]
        return sum(c * fn(p) for c, p in zip(coeffs, pts)) / s**k

    d1 = basic(step)
    d2 = basic(step / 2.0)
    # leading truncation error is O(step^2): one Richardson extrapolation
    return (4.0 * d2 - d1) / 3.0
