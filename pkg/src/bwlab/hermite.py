"""Hermite polynomial machinery and the scaled-argument expansion model for
the symmetric difference density, with pairwise coefficient estimation and
the exact combinatorial quantities used as oracles."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import integrate

SQRT_2PI = math.sqrt(2.0 * math.pi)

MAX_HERMITE_ORDER = 24
MAX_HERMITE_BANDWIDTH = 1.5
PAIR_SWEEP_CAP = 4000  # subsample above this to bound the O(n^2) pass


def hermite_poly(j: int, x):
    """Probabilists' Hermite polynomial H_j(x) via the three-term recurrence
    H_{j+1} = x H_j - j H_{j-1}."""
    if j > MAX_HERMITE_ORDER:
        raise ValueError(f"Hermite order {j} > {MAX_HERMITE_ORDER} unsupported")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if j == 0:
        return prev if prev.ndim else float(prev)
    cur = x.copy()
    for k in range(1, j):
        prev, cur = cur, x * cur - k * prev
    return cur if cur.ndim else float(cur)


def hermite_zero_coeffs(j: int):
    """Coefficients w(2j, l) = (2j)! / {l! (2j-2l)! 2^l}, l = 0..j, so that
    H_{2j}(x) = sum_l (-1)^l w(2j, l) x^{2j-2l}."""
    if j > 12:
        raise ValueError("j > 12 unsupported")
    f = math.factorial
    return [f(2 * j) // (f(l) * f(2 * j - 2 * l) * 2**l) for l in range(j + 1)]


def hermite_zero_value(j: int) -> int:
    """H_{2j}(0) = (-1)^j (2j)!/(2^j j!); the sequence 1, -1, 3, -15, 105, ..."""
    return (-1) ** j * math.factorial(2 * j) // (2**j * math.factorial(j))


def normal_hermite_moment(j: int, c: float) -> float:
    """E H_{2j}(cZ) for standard normal Z: {(2j)!/(2^j j!)} (c^2 - 1)^j."""
    return (math.factorial(2 * j) / (2**j * math.factorial(j))) * (c * c - 1.0) ** j


def lambda_moment(j: int, i: int) -> float:
    """lambda_{2j,2i} = int H_{2j}(u) phi(u) u^{2i} du, exact integer arithmetic."""
    if j > i:
        return 0.0
    if i > 10:
        raise ValueError("i > 10 unsupported")
    f = math.factorial
    total = Fraction(0)
    for l in range(j + 1):
        total += (-1) ** l * Fraction(f(2 * j), f(l) * f(2 * j - 2 * l) * 2**l) \
            * Fraction(f(2 * j - 2 * l + 2 * i), f(j - l + i) * 2 ** (j - l + i))
    return float(total)


def appendix_identity_check(i: int) -> float:
    """sum_{0<=j<=i} (-1)^j lambda_{2j,2i} / (2^j j!); vanishes for i >= 1."""
    if not 1 <= i <= 8:
        raise ValueError("i must be in 1..8")
    f = math.factorial
    total = Fraction(0)
    for j in range(i + 1):
        lam = Fraction(0)
        for l in range(j + 1):
            lam += (-1) ** l * Fraction(f(2 * j), f(l) * f(2 * j - 2 * l) * 2**l) \
                * Fraction(f(2 * j - 2 * l + 2 * i), f(j - l + i) * 2 ** (j - l + i))
        total += (-1) ** j * lam / (2**j * f(j))
    return float(total)


@dataclass(frozen=True)
class HermiteModel:
    """Expansion model for the difference density: scale sigma of one X,
    Hermite bandwidth h_H, order m and even coefficients alpha_0..alpha_{2m}."""

    sigma: float
    h_H: float
    m: int
    alphas: tuple

    def __post_init__(self):
        if self.sigma <= 0 or self.h_H <= 0:
            raise ValueError("sigma and h_H must be positive")
        if len(self.alphas) != self.m + 1:
            raise ValueError("need m + 1 coefficients alpha_0, alpha_2, ..., alpha_2m")
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))


def pair_differences(sample) -> np.ndarray:
    """All Y_{i,l} = X_l - X_i with i < l, as a flat array."""
    x = np.asarray(sample, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError("need at least two observations")
    iu = np.triu_indices(n, k=1)
    return (x[None, :] - x[:, None])[iu]


def _check_h_H(h_H: float) -> None:
    if not 0.0 < h_H <= MAX_HERMITE_BANDWIDTH:
        raise ValueError(f"h_H must lie in (0, {MAX_HERMITE_BANDWIDTH}], got {h_H}")


def estimate_alphas(sample, sigma: float, h_H: float, m: int,
                    pair_diffs=None, subsample_seed: int = 0) -> np.ndarray:
    """Pairwise estimates of alpha_0, alpha_2, ..., alpha_{2m}.

    Each coefficient is the average over all unordered pairs of
    h_H^{-1} H_{2j}(u) exp{-(1/2)(1 - h_H^2) u^2} with
    u = Y_{i,l} / (sqrt(2) sigma h_H).  For n above the pair-sweep cap a
    seeded uniform subsample of the data is used instead.
    """
    _check_h_H(h_H)
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if pair_diffs is None:
        x = np.asarray(sample, dtype=float)
        if x.size > PAIR_SWEEP_CAP:
            rng = np.random.default_rng(subsample_seed)
            x = rng.choice(x, size=PAIR_SWEEP_CAP, replace=False)
        pair_diffs = pair_differences(x)
    u = pair_diffs / (math.sqrt(2.0) * sigma * h_H)
    weight = np.exp(-0.5 * (1.0 - h_H * h_H) * u * u) / h_H
    return np.array([float(np.mean(hermite_poly(2 * j, u) * weight))
                     for j in range(m + 1)])


def diagonals_in_alphas(alphas, n: int, h_H: float) -> np.ndarray:
    """Diagonals-in coefficients:
    (1 - 1/n) alpha_2j + (n h_H)^{-1} (-1)^j (2j)!/(2^j j!)."""
    if n < 2:
        raise ValueError("n must be >= 2")
    alphas = np.asarray(alphas, dtype=float)
    j = np.arange(alphas.size)
    spike = np.array([(-1) ** k * math.factorial(2 * k) / (2**k * math.factorial(k))
                      for k in j])
    return (1.0 - 1.0 / n) * alphas + spike / (n * h_H)


def alphas_from_density(g, sigma: float, h_H: float, m: int) -> np.ndarray:
    """Exact coefficients by adaptive quadrature against a density callable g."""
    _check_h_H(h_H)
    tau = math.sqrt(2.0) * sigma

    out = []
    for j in range(m + 1):
        def integrand(y, j=j):
            gy = g(y)
            if gy == 0.0:
                # for h_H > 1 the weight grows in y; once the density has
                # underflowed the product is zero, not inf * 0
                return 0.0
            u = y / (tau * h_H)
            e = min(-0.5 * (1.0 - h_H * h_H) * u * u, 700.0)
            return (hermite_poly(2 * j, u) * math.exp(e) / h_H) * gy

        val, err = integrate.quad(integrand, -np.inf, np.inf,
                                  points=None, limit=400, epsabs=1e-11, epsrel=1e-10)
        if not math.isfinite(val) or err > 1e-6 * max(1.0, abs(val)):
            raise ArithmeticError(
                f"coefficient quadrature ill-conditioned (j={j}, h_H={h_H})")
        out.append(val)
    return np.array(out)


def expansion_density(model: HermiteModel, y):
    """g_2m(y) = phi(y/tau) tau^{-1} sum_j {alpha_2j/(2j)!} H_2j(y/(tau h_H)),
    tau = sqrt(2) sigma.  May dip negative; that is permitted by design."""
    y = np.asarray(y, dtype=float)
    tau = math.sqrt(2.0) * model.sigma
    z = np.atleast_1d(y) / tau
    total = np.zeros_like(z)
    for j, a in enumerate(model.alphas):
        total += a / math.factorial(2 * j) * hermite_poly(2 * j, z / model.h_H)
    vals = np.exp(-0.5 * z * z) / SQRT_2PI / tau * total
    return vals if y.ndim else float(vals[0])


def expansion_derivative_at_zero(model: HermiteModel, order: int) -> float:
    """Even-order derivative of the expansion density at zero.

    d^{2r}/dy^{2r} at 0 combines phi^{(2r-2k)}(0) with H_{2j}^{(2k)}(0)/h_H^{2k}
    through the binomial theorem; odd contributions vanish by symmetry.
    """
    if order % 2:
        return 0.0
    tau = math.sqrt(2.0) * model.sigma
    phi0 = 1.0 / SQRT_2PI
    total = 0.0
    for j, a in enumerate(model.alphas):
        term = 0.0
        for k in range(0, order + 1, 2):
            if 2 * j - k < 0:
                continue
            # H_{2j}^{(k)}(0) = (2j)!/(2j-k)! H_{2j-k}(0)
            h_deriv = (math.factorial(2 * j) / math.factorial(2 * j - k)
                       * hermite_zero_value((2 * j - k) // 2))
            phi_deriv = hermite_zero_value((order - k) // 2) * phi0
            term += math.comb(order, k) * phi_deriv * h_deriv / model.h_H**k
        total += a / math.factorial(2 * j) * term
    return total / tau ** (order + 1)
