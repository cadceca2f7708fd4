"""Bandwidth selection rules: unbiased cross validation in both forms, the
finite-sample normal reference rule, the direct Hermite expansion rule, the
three bias-combating proposals, the t-tail model and the normal-start
smoothed rule, plus the robust scale pilot."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize, stats

from . import roughness
from .hermite import (MAX_HERMITE_BANDWIDTH, diagonals_in_alphas,
                      estimate_alphas, pair_differences)
from .kernels import Kernel, a_k, constants, kernel_eval, self_convolution
from .mise import (default_bracket, hermite_dna, minimize_grid_polish,
                   minimize_scalar, q0_normal, reference_constant)

SQRT_PI = math.sqrt(math.pi)
SQRT_2PI = math.sqrt(2.0 * math.pi)

DEFAULT_H_H = 0.8
DEFAULT_H_H_TILDE = 1.0
DEFAULT_M = 2
NU_RANGE = (4.01, 500.0)

_GH_NODES, _GH_WEIGHTS = np.polynomial.hermite.hermgauss(128)


@dataclass
class SelectionReport:
    h_hat: float
    method: str
    sigma_hat: float
    n: int
    pilots: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)
    config_hash: str = ""
    seed: object = None

    def __post_init__(self):
        if not self.config_hash:
            self.config_hash = _config_hash(self.method, self.pilots)


def _config_hash(method: str, pilots: dict) -> str:
    payload = json.dumps({"method": method, "pilots": pilots},
                         sort_keys=True, default=repr)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def estimate_sigma(sample) -> float:
    """Robust scale pilot: min(sd, IQR/1.349)."""
    x = np.asarray(sample, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two observations")
    sd = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75.0, 25.0])
    sigma = min(sd, (q75 - q25) / 1.349)
    if sigma <= 0:
        raise ValueError("degenerate sample: zero spread")
    return sigma


def _reference_h(sigma: float, n: int, kernel: Kernel) -> float:
    return reference_constant(kernel, n) * sigma / n ** 0.2


# ---------------------------------------------------------------------------
# cross validation
# ---------------------------------------------------------------------------

def ucv_objective(sample, kernel: Kernel):
    """The difference-mean objective: (nh)^{-1} R(K) + mean_h A_K of the
    pairwise differences; identical to the classic leave-one-out score."""
    x = np.asarray(sample, dtype=float)
    n = x.size
    diffs = pair_differences(x)
    r_k = constants(kernel).r_k

    def objective(h):
        return r_k / (n * h) + 2.0 * float(np.sum(
            np.asarray(a_k(kernel, n, diffs / h)))) / (n * (n - 1) * h)

    return objective


def ucv_classic(sample, kernel: Kernel, h: float) -> float:
    """Leave-one-out criterion int fhat^2 - (2/n) sum_i fhat_(i)(X_i), with
    the squared-integral computed in closed form via the self-convolution."""
    if h <= 0:
        raise ValueError("h must be positive")
    x = np.asarray(sample, dtype=float)
    n = x.size
    if n < 3:
        raise ValueError("need n >= 3")
    diffs = pair_differences(x)
    g0 = float(self_convolution(kernel, 0.0))
    int_f2 = (n * g0 + 2.0 * float(np.sum(
        np.asarray(self_convolution(kernel, diffs / h))))) / (n * n * h)
    loo = 4.0 * float(np.sum(np.asarray(kernel_eval(kernel, diffs / h)))) \
        / (n * (n - 1) * h)
    return int_f2 - loo


def select_ucv(sample, kernel: Kernel = Kernel.NORMAL) -> SelectionReport:
    x = np.asarray(sample, dtype=float)
    n = x.size
    if n < 3:
        raise ValueError("need n >= 3")
    sigma = estimate_sigma(x)
    objective = ucv_objective(x, kernel)
    res = minimize_grid_polish(objective, default_bracket(_reference_h(sigma, n, kernel)))
    return SelectionReport(h_hat=res.x, method="ucv", sigma_hat=sigma, n=n,
                           pilots={"kernel": kernel.value}, flags=res.flags)


# ---------------------------------------------------------------------------
# normal reference
# ---------------------------------------------------------------------------

def select_normal_reference(sample, kernel: Kernel = Kernel.NORMAL) -> SelectionReport:
    x = np.asarray(sample, dtype=float)
    n = x.size
    if n < 3:
        raise ValueError("need n >= 3")
    sigma = estimate_sigma(x)
    const = reference_constant(kernel, n)
    return SelectionReport(h_hat=const * sigma / n ** 0.2, method="nrr",
                           sigma_hat=sigma, n=n,
                           pilots={"kernel": kernel.value, "constant": const})


# ---------------------------------------------------------------------------
# direct Hermite rule
# ---------------------------------------------------------------------------

def select_hermite(sample, m: int = DEFAULT_M, h_H: float = DEFAULT_H_H) -> SelectionReport:
    """Minimize the closed-form expansion objective (normal kernel)."""
    x = np.asarray(sample, dtype=float)
    n = x.size
    if n < 4:
        raise ValueError("need n >= 4")
    if m not in (1, 2, 3, 4):
        raise ValueError("m must be in {1, 2, 3, 4}")
    sigma = estimate_sigma(x)
    alphas = estimate_alphas(x, sigma, h_H, m)
    res = minimize_grid_polish(lambda h: hermite_dna(alphas, sigma, h_H, n, h),
                               default_bracket(_reference_h(sigma, n, Kernel.NORMAL)))
    flags = list(res.flags)
    if n > 4000:
        flags.append("subsampled")
    return SelectionReport(h_hat=res.x, method="hermite", sigma_hat=sigma, n=n,
                           pilots={"m": m, "h_H": h_H,
                                   "alphas": [float(a) for a in alphas]},
                           flags=flags)


# ---------------------------------------------------------------------------
# bias-corrected proposals
# ---------------------------------------------------------------------------

def _fallback_nrr(sample, kernel, method, pilots, flags) -> SelectionReport:
    base = select_normal_reference(sample, kernel)
    return SelectionReport(h_hat=base.h_hat, method=method,
                           sigma_hat=base.sigma_hat, n=base.n,
                           pilots=pilots,
                           flags=sorted(set(flags + ["fallback-normal-reference"])))


def _taylor_surrogate_report(sample, kernel, method, r_corrected, s_high,
                             pilots, flags) -> SelectionReport:
    x = np.asarray(sample, dtype=float)
    n = x.size
    sigma = pilots["sigma_hat"]
    k = constants(kernel)
    w = 1.0 - 1.0 / n

    def objective(h):
        return (k.r_k / (n * h)
                + 0.25 * k.k2**2 * h**4 * r_corrected * w
                + k.k2 * k.k4 * h**6 * s_high * w / 24.0)

    res = minimize_grid_polish(objective,
                               default_bracket(_reference_h(sigma, n, kernel)))
    return SelectionReport(h_hat=res.x, method=method, sigma_hat=sigma, n=n,
                           pilots=pilots, flags=sorted(set(flags + res.flags)))


def select_proposal1(sample, kernel: Kernel = Kernel.NORMAL,
                     h_H: float = DEFAULT_H_H,
                     h_H_tilde: float = DEFAULT_H_H_TILDE) -> SelectionReport:
    """Taylor-surrogate objective with the bias-corrected m = 2 roughness
    estimate and a sixth-derivative term from a bigger pilot bandwidth."""
    x = np.asarray(sample, dtype=float)
    if x.size < 6:
        raise ValueError("need n >= 6")
    sigma = estimate_sigma(x)
    diffs = pair_differences(x)
    tau5 = (math.sqrt(2.0) * sigma) ** 5
    r4 = roughness.r2m_hat(x, sigma, h_H, 2, pair_diffs=diffs).value
    b4 = roughness.bias_coefficient_hat(x, sigma, 2, h_H_tilde, pair_diffs=diffs)
    s6 = roughness.s6_hat(x, sigma, h_H_tilde, pair_diffs=diffs)
    r_corrected = r4 - b4 * h_H**2 / (2.0 * tau5)
    pilots = {"sigma_hat": sigma, "h_H": h_H, "h_H_tilde": h_H_tilde,
              "R4_hat": r4, "b4_hat": b4, "S6_hat": s6,
              "R_corrected": r_corrected}
    if r_corrected <= 0:
        return _fallback_nrr(x, kernel, "proposal1", pilots, [])
    return _taylor_surrogate_report(x, kernel, "proposal1", r_corrected, s6,
                                    pilots, [])


def select_proposal3(sample, kernel: Kernel = Kernel.NORMAL,
                     h_H: float = DEFAULT_H_H,
                     h_H_tilde: float = DEFAULT_H_H_TILDE) -> SelectionReport:
    """As Proposal 1 but with coefficients up to order six (m = 3), the
    matching bias coefficient and an eighth-order pilot for the h^6 term."""
    x = np.asarray(sample, dtype=float)
    if x.size < 8:
        raise ValueError("need n >= 8")
    sigma = estimate_sigma(x)
    diffs = pair_differences(x)
    tau5 = (math.sqrt(2.0) * sigma) ** 5
    r6 = roughness.r2m_hat(x, sigma, h_H, 3, pair_diffs=diffs).value
    b6 = roughness.bias_coefficient_hat(x, sigma, 3, h_H_tilde, pair_diffs=diffs)
    s8 = roughness.s8_hat(x, sigma, h_H_tilde, pair_diffs=diffs)
    r_corrected = r6 - b6 * h_H**4 / (8.0 * tau5)
    pilots = {"sigma_hat": sigma, "h_H": h_H, "h_H_tilde": h_H_tilde,
              "R6_hat": r6, "b6_hat": b6, "S8_hat": s8,
              "R_corrected": r_corrected}
    if r_corrected <= 0:
        return _fallback_nrr(x, kernel, "proposal3", pilots, [])
    return _taylor_surrogate_report(x, kernel, "proposal3", r_corrected, s8,
                                    pilots, [])


def coupled_pilot(c_hat: float, h: float) -> float:
    """The h-dependent expansion bandwidth c h^{5/7}, kept inside the
    supported pilot range."""
    return min(max(c_hat * h ** (5.0 / 7.0), 0.05), MAX_HERMITE_BANDWIDTH)


def proposal2_objective(sample, sigma: float, c_hat: float, m: int,
                        pair_diffs=None):
    """The literal coupled objective: the closed-form expansion criterion
    with diagonals-in coefficients evaluated at pilot c h^{5/7}.

    Exposed for diagnostics.  The selector itself solves the self-consistent
    version instead: with an h-dependent pilot the otherwise harmless
    constant terms of the criterion acquire an h-trend that drags the
    minimizer down, so the pilot is frozen during each inner minimization.
    """
    x = np.asarray(sample, dtype=float)
    n = x.size
    if pair_diffs is None:
        pair_diffs = pair_differences(x)

    def objective(h):
        hh = coupled_pilot(c_hat, h)
        alphas = estimate_alphas(x, sigma, hh, m, pair_diffs=pair_diffs)
        return hermite_dna(diagonals_in_alphas(alphas, n, hh), sigma, hh, n, h)

    return objective


def select_proposal2(sample, m: int = DEFAULT_M,
                     h_H_pilot: float = DEFAULT_H_H,
                     h_H_tilde: float = DEFAULT_H_H_TILDE,
                     max_iter: int = 30) -> SelectionReport:
    """Coupled plug-in rule: the expansion objective with diagonals-in
    coefficients and pilot h_H = c h^{5/7}, solved as a fixed point.

    The pilot is frozen at c h^{5/7} for the current h while the objective
    is minimized, then updated from the new minimizer until convergence, so
    the pilot depends on the selected h without tilting the criterion.
    """
    x = np.asarray(sample, dtype=float)
    n = x.size
    if n < 6:
        raise ValueError("need n >= 6")
    sigma = estimate_sigma(x)
    diffs = pair_differences(x)
    flags = []
    r_pilot = roughness.r2m_hat(x, sigma, h_H_pilot, 2, pair_diffs=diffs).value
    b4 = roughness.bias_coefficient_hat(x, sigma, 2, h_H_tilde, pair_diffs=diffs)
    pilots = {"sigma_hat": sigma, "m": m, "h_H_pilot": h_H_pilot,
              "h_H_tilde": h_H_tilde, "R_pilot": r_pilot, "b4_hat": b4}
    if r_pilot <= 0:
        return _fallback_nrr(x, Kernel.NORMAL, "proposal2", pilots, flags)
    if b4 >= 0:
        floor = 0.1 * math.factorial(3) / (SQRT_2PI * h_H_tilde**6)
        b4 = -max(abs(b4), floor)
        flags.append("b4-clamped")
    k = constants(Kernel.NORMAL)
    c_hat = ((6.0 / SQRT_2PI) / (k.r_k / k.k2**2)) ** (1.0 / 7.0) \
        * r_pilot ** (1.0 / 7.0) / (-b4) ** (1.0 / 7.0)
    pilots["c_hat"] = c_hat

    bracket = default_bracket(_reference_h(sigma, n, Kernel.NORMAL))
    h = _reference_h(sigma, n, Kernel.NORMAL)
    res = None
    for _ in range(max_iter):
        hh = coupled_pilot(c_hat, h)
        alphas = diagonals_in_alphas(
            estimate_alphas(x, sigma, hh, m, pair_diffs=diffs), n, hh)
        res = minimize_scalar(lambda t: hermite_dna(alphas, sigma, hh, n, t),
                              bracket, rel_tol=1e-9)
        if abs(res.x - h) <= 1e-9 * h:
            h = res.x
            break
        h = res.x
    else:
        flags.append("fixed-point-max-iter")
    pilots["h_H_coupled"] = coupled_pilot(c_hat, h)
    return SelectionReport(h_hat=h, method="proposal2", sigma_hat=sigma, n=n,
                           pilots=pilots, flags=sorted(set(flags + res.flags)))


# ---------------------------------------------------------------------------
# t-tail model
# ---------------------------------------------------------------------------

def t_tail_q(h: float, nu: float, sigma: float, n: int, kernel: Kernel) -> float:
    """q(h) under the scaled-t model for the standardized difference; nu =
    math.inf means the exact normal difference density."""
    if math.isinf(nu):
        if kernel is Kernel.NORMAL:
            return q0_normal(h / sigma, n) / sigma

        def g(y):
            s = math.sqrt(2.0) * sigma
            return np.exp(-0.5 * (np.asarray(y) / s) ** 2) / (SQRT_2PI * s)
    else:
        scale = math.sqrt(2.0) * sigma * math.sqrt((nu - 2.0) / nu)

        def g(y):
            return stats.t.pdf(y / scale, df=nu) / scale

    w = 1.0 - 1.0 / n
    if kernel is Kernel.EPANECHNIKOV:
        conv, _ = integrate.quad(lambda v: self_convolution(kernel, v) * g(h * v),
                                 -1.0, 1.0, points=[0.0], limit=200, epsabs=1e-11)
        direct, _ = integrate.quad(lambda v: kernel_eval(kernel, v) * g(h * v),
                                   -0.5, 0.5, limit=200, epsabs=1e-11)
        return w * conv - 2.0 * direct
    # normal kernel: both integrals are Gaussian expectations of the smooth
    # model density, so fixed Gauss-Hermite nodes suffice and keep the
    # objective cheap inside the minimizer
    conv = float(np.dot(_GH_WEIGHTS, g(2.0 * h * _GH_NODES))) / SQRT_PI
    direct = float(np.dot(_GH_WEIGHTS,
                          g(math.sqrt(2.0) * h * _GH_NODES))) / SQRT_PI
    return w * conv - 2.0 * direct


def estimate_nu_kurtosis(pair_diffs, sigma: float = None):
    """Moment route: solve 3{1 + 2/(nu - 4)} = mean Y^4 / (4 sigma^4).

    Both moments come from the pair differences themselves (4 sigma^4 =
    (mean Y^2)^2), keeping the equation in one currency; a scale pilot
    from another estimator would bias the kurtosis level.  Returns
    (nu, lam4, flags); nu is None when the sample looks lighter-tailed
    than normal and the caller must fall back.
    """
    y2 = np.asarray(pair_diffs, dtype=float) ** 2
    lam4 = float(np.mean(y2 * y2)) / float(np.mean(y2)) ** 2
    if lam4 <= 3.0:
        return None, lam4, []
    nu = 4.0 + 2.0 / (lam4 / 3.0 - 1.0)
    flags = []
    if nu < NU_RANGE[0]:
        nu = NU_RANGE[0]
        flags.append("nu-clamped")
    elif nu > NU_RANGE[1]:
        nu = NU_RANGE[1]
        flags.append("nu-clamped")
    return nu, lam4, flags


def estimate_nu_median(pair_diffs, sigma: float = None):
    """Median route: find nu with G_nu(sqrt(nu/(nu-2)) z0) = 3/4, z0 the
    median standardized absolute difference.

    The standardization scale is (mean Y^2)^{1/2}, the model value of
    sqrt(2) sigma, so the quantile equation stays in the same currency as
    the pair differences (an external scale pilot that underestimates the
    standard deviation on heavy-tailed data would push z0 above the
    three-quarter quantile of every t model and force a fallback exactly
    when the model should engage).  The sigma argument is ignored.
    """
    y = np.asarray(pair_diffs, dtype=float)
    z0 = float(np.median(np.abs(y))) / math.sqrt(float(np.mean(y * y)))

    def score(nu):
        return stats.t.cdf(math.sqrt(nu / (nu - 2.0)) * z0, df=nu) - 0.75

    lo, hi = NU_RANGE
    if score(lo) * score(hi) > 0:
        return None, z0, []
    nu = optimize.brentq(score, lo, hi, xtol=1e-8)
    return nu, z0, []


def select_t_tail(sample, kernel: Kernel = Kernel.NORMAL,
                  nu_method: str = "kurtosis") -> SelectionReport:
    x = np.asarray(sample, dtype=float)
    n = x.size
    if n < 5:
        raise ValueError("need n >= 5")
    sigma = estimate_sigma(x)
    diffs = pair_differences(x)
    if nu_method == "kurtosis":
        nu, stat, flags = estimate_nu_kurtosis(diffs, sigma)
        pilots = {"sigma_hat": sigma, "nu_method": nu_method, "lambda4_hat": stat}
    elif nu_method == "median":
        nu, stat, flags = estimate_nu_median(diffs, sigma)
        pilots = {"sigma_hat": sigma, "nu_method": nu_method, "z0_hat": stat}
    else:
        raise ValueError("nu_method must be 'kurtosis' or 'median'")
    pilots["nu_hat"] = nu
    if nu is None:
        return _fallback_nrr(x, kernel, "t-tail", pilots, flags)

    r_k = constants(kernel).r_k

    def objective(h):
        return r_k / (n * h) + t_tail_q(h, nu, sigma, n, kernel)

    res = minimize_scalar(objective,
                          default_bracket(_reference_h(sigma, n, kernel)),
                          rel_tol=1e-5)
    return SelectionReport(h_hat=res.x, method="t-tail", sigma_hat=sigma, n=n,
                           pilots=pilots, flags=sorted(set(flags + res.flags)))


# ---------------------------------------------------------------------------
# normal-start (multiplicative) smoothed rule
# ---------------------------------------------------------------------------

def normal_start_terms(pair_diffs, h: float, h_tilde: float, sigma: float):
    """(S(h), T(h)) for the normal-start difference-density estimate.

    Gaussian product algebra gives, with tau^2 = 2 sigma^2 and
    D = s^2 tau^2 + h_tilde^2 (s^2 + tau^2) for smoothing scale s:
    mean over pairs of (2 pi)^{-1/2} tau D^{-1/2}
    exp{ -Y^2/2 [ (s^2 + tau^2)/D - 1/tau^2 ] },
    where s^2 = 2h^2 for the S part and s^2 = h^2 for the T part.
    """
    y2 = np.asarray(pair_diffs, dtype=float) ** 2
    tau2 = 2.0 * sigma * sigma

    def term(s2):
        d = s2 * tau2 + h_tilde**2 * (s2 + tau2)
        coeff = (s2 + tau2) / d - 1.0 / tau2
        expo = np.clip(-0.5 * y2 * coeff, -745.0, 700.0)
        return float(np.mean(np.exp(expo))) * math.sqrt(tau2 / d) / SQRT_2PI

    return term(2.0 * h * h), term(h * h)


def normal_start_objective(sample, h_tilde: float, sigma: float = None):
    x = np.asarray(sample, dtype=float)
    n = x.size
    diffs = pair_differences(x)
    if sigma is None:
        sigma = estimate_sigma(x)
    r_k = constants(Kernel.NORMAL).r_k

    def objective(h):
        s_term, t_term = normal_start_terms(diffs, h, h_tilde, sigma)
        return r_k / (n * h) + (1.0 - 1.0 / n) * s_term - 2.0 * t_term

    return objective


def select_normal_start(sample, h_tilde: float) -> SelectionReport:
    x = np.asarray(sample, dtype=float)
    n = x.size
    if n < 4:
        raise ValueError("need n >= 4")
    if h_tilde <= 0:
        raise ValueError("h_tilde must be positive")
    sigma = estimate_sigma(x)
    objective = normal_start_objective(x, h_tilde, sigma)
    res = minimize_grid_polish(objective,
                               default_bracket(_reference_h(sigma, n, Kernel.NORMAL)))
    return SelectionReport(h_hat=res.x, method="normal-start", sigma_hat=sigma,
                           n=n, pilots={"h_tilde": h_tilde}, flags=res.flags)


# ---------------------------------------------------------------------------
# registry used by the simulation harness and the CLI
# ---------------------------------------------------------------------------

def run_method(name: str, sample, kernel: Kernel = Kernel.NORMAL,
               **params) -> SelectionReport:
    if name in ("nrr", "normal-reference"):
        return select_normal_reference(sample, kernel)
    if name == "ucv":
        return select_ucv(sample, kernel)
    if name == "hermite":
        return select_hermite(sample, m=params.get("m", DEFAULT_M),
                              h_H=params.get("h_H", DEFAULT_H_H))
    if name == "proposal1":
        return select_proposal1(sample, kernel,
                                h_H=params.get("h_H", DEFAULT_H_H),
                                h_H_tilde=params.get("h_H_tilde", DEFAULT_H_H_TILDE))
    if name == "proposal2":
        return select_proposal2(sample, m=params.get("m", DEFAULT_M),
                                h_H_pilot=params.get("h_H", DEFAULT_H_H),
                                h_H_tilde=params.get("h_H_tilde", DEFAULT_H_H_TILDE))
    if name == "proposal3":
        return select_proposal3(sample, kernel,
                                h_H=params.get("h_H", DEFAULT_H_H),
                                h_H_tilde=params.get("h_H_tilde", DEFAULT_H_H_TILDE))
    if name == "t-tail":
        return select_t_tail(sample, kernel,
                             nu_method=params.get("nu_method", "kurtosis"))
    if name == "normal-start":
        return select_normal_start(sample, h_tilde=params.get("h_tilde", 0.5))
    raise ValueError(f"unknown method {name!r}")


METHOD_NAMES = ("nrr", "ucv", "hermite", "proposal1", "proposal2",
                "proposal3", "t-tail", "normal-start")
