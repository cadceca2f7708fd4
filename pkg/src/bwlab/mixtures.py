"""Finite normal mixtures as ground truth: exact pdf derivatives, the
difference density of X_j - X_i (again a normal mixture), roughness
functionals, moments/cumulants and reproducible sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .hermite import hermite_poly

SQRT_2PI = math.sqrt(2.0 * math.pi)

MAX_DERIVATIVE_ORDER = 12


@dataclass(frozen=True)
class NormalMixture:
    """sum_c w_c N(mu_c, s_c^2) with weights summing to one."""

    weights: tuple
    means: tuple
    sds: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        mu = np.asarray(self.means, dtype=float)
        s = np.asarray(self.sds, dtype=float)
        if not (w.shape == mu.shape == s.shape) or w.ndim != 1 or w.size == 0:
            raise ValueError("weights, means, sds must be equal-length 1-d sequences")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if np.any(s <= 0):
            raise ValueError("all component sds must be positive")
        object.__setattr__(self, "weights", tuple(float(v) for v in w))
        object.__setattr__(self, "means", tuple(float(v) for v in mu))
        object.__setattr__(self, "sds", tuple(float(v) for v in s))

    @property
    def mean(self) -> float:
        return float(np.dot(self.weights, self.means))

    @property
    def variance(self) -> float:
        w = np.asarray(self.weights)
        mu = np.asarray(self.means)
        s = np.asarray(self.sds)
        return float(np.dot(w, s**2 + mu**2) - self.mean**2)

    def pdf(self, x):
        return mixture_pdf_derivative(self, 0, x)

    def __call__(self, x):
        return self.pdf(x)


def standard_normal() -> NormalMixture:
    return NormalMixture((1.0,), (0.0,), (1.0,))


def mixture_pdf_derivative(m: NormalMixture, order: int, x):
    """Exact order-th derivative of the mixture pdf.

    Uses phi^(k)(z) = (-1)^k phi(z) H_k(z) componentwise; order is capped at
    12 to bound numerical noise in the Hermite values.
    """
    if order > MAX_DERIVATIVE_ORDER:
        raise ValueError(f"derivative order {order} > {MAX_DERIVATIVE_ORDER} unsupported")
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(np.atleast_1d(x))
    sign = (-1.0) ** order
    for w, mu, s in zip(m.weights, m.means, m.sds):
        z = (np.atleast_1d(x) - mu) / s
        phi = np.exp(-0.5 * z * z) / SQRT_2PI
        out += w * sign * phi * hermite_poly(order, z) / s ** (order + 1)
    return out if x.ndim else float(out[0])


@dataclass(frozen=True)
class DifferenceDensity:
    """Density g of Y = X_j - X_i (a symmetric normal mixture) together with
    the variance sigma^2 of a single X."""

    g: NormalMixture
    sigma2: float

    def __call__(self, y):
        return self.g.pdf(y)


def difference_density(m: NormalMixture) -> DifferenceDensity:
    """g as the mixture with components (w_i w_j, mu_j - mu_i, sqrt(s_i^2 + s_j^2))
    over all ordered pairs of components of f."""
    w, mu, s = m.weights, m.means, m.sds
    ws, mus, sds = [], [], []
    for i in range(len(w)):
        for j in range(len(w)):
            ws.append(w[i] * w[j])
            mus.append(mu[j] - mu[i])
            sds.append(math.hypot(s[i], s[j]))
    return DifferenceDensity(NormalMixture(tuple(ws), tuple(mus), tuple(sds)),
                             sigma2=m.variance)


def roughness_true(m: NormalMixture, deriv_order: int) -> float:
    """R(f^(k)) = int (f^(k))^2, computed exactly as (-1)^k g^(2k)(0)."""
    if deriv_order not in (0, 1, 2, 3):
        raise ValueError("deriv_order must be in {0, 1, 2, 3}")
    g = difference_density(m).g
    return (-1.0) ** deriv_order * mixture_pdf_derivative(g, 2 * deriv_order, 0.0)


def _normal_even_moment(k: int) -> int:
    # E Z^k for standard normal, zero for odd k
    if k % 2:
        return 0
    return math.factorial(k) // (math.factorial(k // 2) * 2 ** (k // 2))


def raw_moment(m: NormalMixture, k: int) -> float:
    """E X^k, exact for the mixture."""
    total = 0.0
    for w, mu, s in zip(m.weights, m.means, m.sds):
        comp = sum(math.comb(k, i) * mu ** (k - i) * s**i * _normal_even_moment(i)
                   for i in range(k + 1))
        total += w * comp
    return total


def cumulants(m: NormalMixture, up_to: int):
    """Cumulants kappa_1..kappa_{up_to} from exact raw moments."""
    raw = [raw_moment(m, k) for k in range(up_to + 1)]
    kap = [0.0] * (up_to + 1)
    for n in range(1, up_to + 1):
        kap[n] = raw[n] - sum(math.comb(n - 1, k - 1) * kap[k] * raw[n - k]
                              for k in range(1, n))
    return kap[1:]


def cumulant_ratio_check(m: NormalMixture, j: int):
    """(standardized 2j-th cumulant of g, (1/2)^(j-1) x that of f).

    The two coordinates agree: differencing halves the standardized even
    cumulant coefficients of order 2j for every j >= 2.
    """
    if j < 2:
        raise ValueError("j must be >= 2")
    g = difference_density(m).g
    kf = cumulants(m, 2 * j)
    kg = cumulants(g, 2 * j)
    std_f = kf[2 * j - 1] / m.variance**j
    std_g = kg[2 * j - 1] / g.variance**j
    return std_g, 0.5 ** (j - 1) * std_f


def sample_mixture(m: NormalMixture, n: int, rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. draws, deterministic given the generator state.

    Component choice by inverse-CDF on a single uniform, then an inverse-CDF
    normal draw per point, so results are reproducible across platforms.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    u_comp = rng.random(n)
    u_val = rng.random(n)
    cum = np.cumsum(m.weights)
    idx = np.searchsorted(cum, u_comp, side="right")
    idx = np.minimum(idx, len(m.weights) - 1)
    mu = np.asarray(m.means)[idx]
    s = np.asarray(m.sds)[idx]
    return mu + s * ndtri(np.clip(u_val, 1e-300, 1.0 - 1e-16))


# Named test densities (normal-mixture battery used by the simulation harness)
PRESETS = {
    "gauss": standard_normal(),
    "bimodal": NormalMixture((0.5, 0.5), (-1.0, 1.0), (2.0 / 3.0, 2.0 / 3.0)),
    "separated": NormalMixture((0.5, 0.5), (-1.5, 1.5), (0.5, 0.5)),
    "skewed": NormalMixture((0.2, 0.3, 0.5), (-1.2, 0.0, 0.8), (0.6, 0.9, 0.45)),
}
