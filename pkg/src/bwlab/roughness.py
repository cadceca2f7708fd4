"""Estimators of the roughness R(f'') = g^(4)(0) and of related even
derivative functionals of the difference density at zero: the Hermite pair
estimator and its diagonals-in version, pilot bias coefficients, the
sixth/eighth-order variants, the normal-start pair estimator, a local
likelihood estimator, and plain kernel estimates of g itself."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .hermite import (HermiteModel, diagonals_in_alphas, estimate_alphas,
                      hermite_poly, expansion_derivative_at_zero,
                      pair_differences)
from .kernels import Kernel, kernel_eval, self_convolution

SQRT_PI = math.sqrt(math.pi)
SQRT_2PI = math.sqrt(2.0 * math.pi)

EXPONENT_CAP = 40.0  # guards exp(Y^2/(2 tau^2)) against heavy outliers


@dataclass
class RoughnessEstimate:
    value: float
    estimator: str
    pilots: dict = field(default_factory=dict)
    n_pairs: int = 0
    flags: list = field(default_factory=list)


def _c_weights(m: int, h_H: float) -> np.ndarray:
    """c(j) = (-1)^j {1 + 4j/h_H^2 + (4/3) j (j-1)/h_H^4} / (2^j j!)."""
    j = np.arange(m + 1, dtype=float)
    poly = 1.0 + 4.0 * j / h_H**2 + (4.0 / 3.0) * j * (j - 1.0) / h_H**4
    return (-1.0) ** j * poly / (2.0**j * np.array([math.factorial(int(k)) for k in j]))


def r2m_model(alphas, sigma: float, h_H: float) -> float:
    """Fourth derivative at zero of the expansion model:
    {3 sigma^-5 / (8 sqrt(pi))} [alpha_0 + sum_j ...]."""
    alphas = np.asarray(alphas, dtype=float)
    c = _c_weights(alphas.size - 1, h_H)
    return 3.0 / ((math.sqrt(2.0) * sigma) ** 5 * SQRT_2PI) * float(np.dot(alphas, c))


def r2m_hat(sample, sigma: float, h_H: float, m: int,
            pair_diffs=None) -> RoughnessEstimate:
    """Pair-sum roughness estimator: the model fourth derivative evaluated at
    the pairwise coefficient estimates (the two forms agree algebraically)."""
    if pair_diffs is None:
        pair_diffs = pair_differences(sample)
    alphas = estimate_alphas(sample, sigma, h_H, m, pair_diffs=pair_diffs)
    return RoughnessEstimate(value=r2m_model(alphas, sigma, h_H),
                             estimator="r2m",
                             pilots={"sigma": sigma, "h_H": h_H, "m": m},
                             n_pairs=len(pair_diffs))


def r2m_hat_direct(sample, sigma: float, h_H: float, m: int,
                   pair_diffs=None) -> float:
    """Direct p_2j pair-sum form of the same estimator; kept as an
    algebraic-identity cross-check on r2m_hat."""
    if pair_diffs is None:
        pair_diffs = pair_differences(sample)
    tau = math.sqrt(2.0) * sigma
    u = pair_diffs / (tau * h_H)
    c = _c_weights(m, h_H)
    phi_term = np.exp(-0.5 * u * u + 0.5 * h_H * h_H * u * u) / SQRT_2PI
    total = np.zeros_like(u)
    for j in range(m + 1):
        total += c[j] * hermite_poly(2 * j, u) * phi_term
    return 3.0 / tau**5 * float(np.mean(total / h_H))


def diag_correction(n: int, sigma: float, h_H: float, m: int) -> float:
    """The deterministic positive term added by the diagonals-in version."""
    tau = math.sqrt(2.0) * sigma
    total = 0.0
    for j in range(m + 1):
        coef = math.factorial(2 * j) / (2 ** (2 * j) * math.factorial(j) ** 2)
        total += coef * ((4.0 / 3.0) * j * (j - 1) + 4.0 * j * h_H**2 + h_H**4)
    return 3.0 / (n * h_H**5 * tau**5 * SQRT_2PI) * total


def r2m_diag(sample, sigma: float, h_H: float, m: int,
             pair_diffs=None) -> RoughnessEstimate:
    """Diagonals-in estimator (1 - 1/n) R_2m + positive spike term."""
    sample = np.asarray(sample, dtype=float)
    n = sample.size
    base = r2m_hat(sample, sigma, h_H, m, pair_diffs=pair_diffs)
    value = (1.0 - 1.0 / n) * base.value + diag_correction(n, sigma, h_H, m)
    return RoughnessEstimate(value=value, estimator="r2m-diag",
                             pilots=base.pilots, n_pairs=base.n_pairs)


def bias_coefficient_hat(sample, sigma: float, m: int, h_H_tilde: float,
                         pair_diffs=None) -> float:
    """First-term pilot estimate of the bias coefficient:
    b_2m = (2 pi)^{-1/2} alpha_{2m+2} / h_H_tilde^{2m+2}, coefficients taken
    at the (typically bigger) pilot Hermite bandwidth."""
    alphas = estimate_alphas(sample, sigma, h_H_tilde, m + 1, pair_diffs=pair_diffs)
    return float(alphas[m + 1]) / (SQRT_2PI * h_H_tilde ** (2 * m + 2))


def g_even_derivative_model(alphas, sigma: float, h_H: float, order: int) -> float:
    """g^{(order)}(0) of the expansion density, order in {4, 6, 8}.

    Order 4 coincides with r2m_model by construction.
    """
    if order not in (4, 6):
        raise ValueError("order must be 4 or 6")
    alphas = np.asarray(alphas, dtype=float)
    if order == 6 and alphas.size < 4:
        raise ValueError("order 6 needs coefficients up to alpha_6 (m >= 3)")
    model = HermiteModel(sigma=sigma, h_H=h_H, m=alphas.size - 1,
                         alphas=tuple(alphas))
    return expansion_derivative_at_zero(model, order)


def s6_hat(sample, sigma: float, h_H_tilde: float, pair_diffs=None) -> float:
    """Estimate of g^(6)(0) = -R(f''') from coefficients of order 0..6."""
    alphas = estimate_alphas(sample, sigma, h_H_tilde, 3, pair_diffs=pair_diffs)
    return g_even_derivative_model(alphas, sigma, h_H_tilde, 6)


def s8_hat(sample, sigma: float, h_H_tilde: float, pair_diffs=None) -> float:
    """Estimate of g^(6)(0) from the longer expansion with coefficients of
    order 0..8; the extra coefficient trades variance for less truncation
    bias."""
    alphas = estimate_alphas(sample, sigma, h_H_tilde, 4, pair_diffs=pair_diffs)
    return g_even_derivative_model(alphas, sigma, h_H_tilde, 6)


def r_normal_start(sample, h_tilde: float, sigma: float,
                   pair_diffs=None) -> RoughnessEstimate:
    """Normal-start pair estimator of R(f'') with a normal smoothing kernel L:
    mean over pairs of exp(Y^2/(2 tau^2)) {3 L/tau^4 h - 6 L''/tau^2 h^3
    + L''''/(tau h^5)}, tau = sqrt(2) sigma."""
    if h_tilde <= 0:
        raise ValueError("h_tilde must be positive")
    if pair_diffs is None:
        pair_diffs = pair_differences(sample)
    tau = math.sqrt(2.0) * sigma
    flags = []
    expo = 0.5 * (pair_diffs / tau) ** 2
    if np.any(expo > EXPONENT_CAP):
        flags.append("exponent-capped")
        expo = np.minimum(expo, EXPONENT_CAP)
    u = pair_diffs / h_tilde
    phi = np.exp(-0.5 * u * u) / SQRT_2PI
    l0 = phi
    l2 = (u * u - 1.0) * phi
    l4 = (u**4 - 6.0 * u * u + 3.0) * phi
    summand = np.exp(expo) * (3.0 / tau**4 * l0 / h_tilde
                              - 6.0 / tau**2 * l2 / h_tilde**3
                              + l4 / (tau * h_tilde**5))
    return RoughnessEstimate(value=float(np.mean(summand)),
                             estimator="normal-start",
                             pilots={"h_tilde": h_tilde, "sigma": sigma},
                             n_pairs=len(pair_diffs), flags=flags)


# ---------------------------------------------------------------------------
# local likelihood around zero
# ---------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)


def _local_moments(theta, b: float) -> np.ndarray:
    """int L_b(t) t^k exp(a + b2 t^2 + c4 t^4) dt for k = 0, 2, 4, 6, 8."""
    a, b2, c4 = theta
    half = 0.5 * b
    t = _GL_NODES * half
    w = _GL_WEIGHTS * half
    lb = kernel_eval(Kernel.EPANECHNIKOV, t / b) / b
    dens = np.exp(a + b2 * t * t + c4 * t**4)
    return np.array([float(np.sum(w * lb * t**k * dens)) for k in (0, 2, 4, 6, 8)])


def r_local_likelihood(sample, b: float, pair_diffs=None,
                       max_iter: int = 100, tol: float = 1e-11) -> RoughnessEstimate:
    """Local likelihood fit of exp(a + b2 t^2 + c4 t^4) around zero under an
    Epanechnikov weight of bandwidth b; returns R* = exp(a)(24 c4 + 12 b2^2).

    Fitted by damped Newton; the Hessian of the concave objective is minus the
    weighted moment matrix of the model, so steps are always ascent directions.
    """
    if b <= 0:
        raise ValueError("bandwidth b must be positive")
    if pair_diffs is None:
        pair_diffs = pair_differences(sample)
    y = np.asarray(pair_diffs, dtype=float)
    lb = kernel_eval(Kernel.EPANECHNIKOV, y / b) / b
    inside = int(np.count_nonzero(lb > 0))
    if inside < 3:
        raise ValueError("need at least 3 pairs inside the kernel support")
    s_emp = np.array([float(np.mean(lb * y**k)) for k in (0, 2, 4)])

    def objective(theta):
        a, b2, c4 = theta
        mom = _local_moments(theta, b)
        return (s_emp[0] * a + s_emp[1] * b2 + s_emp[2] * c4) - mom[0]

    theta = np.array([math.log(max(s_emp[0], 1e-12)), 0.0, 0.0])
    obj = objective(theta)
    for _ in range(max_iter):
        mom = _local_moments(theta, b)
        grad = s_emp - mom[:3]
        scale = max(1.0, float(np.max(np.abs(s_emp))))
        if np.max(np.abs(grad)) < tol * scale:
            break
        hess = np.array([[mom[0], mom[1], mom[2]],
                         [mom[1], mom[2], mom[3]],
                         [mom[2], mom[3], mom[4]]])
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError as exc:
            raise ArithmeticError("indefinite local-likelihood system") from exc
        for _ in range(40):
            cand = theta + step
            cand_obj = objective(cand)
            if math.isfinite(cand_obj) and cand_obj > obj - 1e-15:
                theta, obj = cand, cand_obj
                break
            step *= 0.5
        else:
            raise ArithmeticError("local-likelihood damping failed to make progress")
    else:
        raise ArithmeticError("local-likelihood Newton did not converge")
    a, b2, c4 = theta
    return RoughnessEstimate(value=math.exp(a) * (24.0 * c4 + 12.0 * b2 * b2),
                             estimator="local-likelihood",
                             pilots={"b": b, "a": a, "b2": b2, "c4": c4},
                             n_pairs=y.size)


def g_kernel_estimate(sample, y, h: float, L: Kernel = Kernel.NORMAL,
                      diagonals: bool = False, pair_diffs=None):
    """Kernel estimate of the difference density at y.

    Without diagonals: symmetrized pair sum with
    (1/2){L_h(Y - y) + L_h(Y + y)}.  With diagonals: n^{-2} sum over all
    ordered pairs (i = j included) of (L_h * L_h)(Y - y).
    """
    if h <= 0:
        raise ValueError("h must be positive")
    y_arr = np.atleast_1d(np.asarray(y, dtype=float))
    x = np.asarray(sample, dtype=float)
    if diagonals:
        diffs = (x[:, None] - x[None, :]).ravel()
        vals = np.array([
            float(np.mean(self_convolution(L, (diffs - yv) / h))) / h
            for yv in y_arr])
    else:
        if pair_diffs is None:
            pair_diffs = pair_differences(x)
        vals = np.array([
            0.5 * float(np.mean(kernel_eval(L, (pair_diffs - yv) / h)
                                + kernel_eval(L, (pair_diffs + yv) / h))) / h
            for yv in y_arr])
    return vals if np.ndim(y) else float(vals[0])
