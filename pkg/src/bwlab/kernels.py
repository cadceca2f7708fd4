"""Kernel primitives: the two workhorse kernels, their moment constants,
self-convolutions, the A_K combination and the plain density estimator."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

SQRT_PI = math.sqrt(math.pi)
SQRT_2PI = math.sqrt(2.0 * math.pi)


class Kernel(enum.Enum):
    NORMAL = "normal"
    EPANECHNIKOV = "epanechnikov"


@dataclass(frozen=True)
class KernelConstants:
    r_k: float  # R(K) = int K^2
    k2: float   # int u^2 K
    k4: float   # int u^4 K
    k6: float   # int u^6 K


_CONSTANTS = {
    Kernel.NORMAL: KernelConstants(r_k=1.0 / (2.0 * SQRT_PI), k2=1.0, k4=3.0, k6=15.0),
    # Epanechnikov on support [-1/2, 1/2], K(u) = (3/2)(1 - 4u^2)
    Kernel.EPANECHNIKOV: KernelConstants(r_k=6.0 / 5.0, k2=1.0 / 20.0,
                                         k4=3.0 / 560.0, k6=1.0 / 1344.0),
}


def constants(kernel: Kernel) -> KernelConstants:
    return _CONSTANTS[kernel]


def kernel_eval(kernel: Kernel, u):
    """K(u); zero outside [-1/2, 1/2] for the Epanechnikov kernel."""
    u = np.asarray(u, dtype=float)
    if kernel is Kernel.NORMAL:
        out = np.exp(-0.5 * u * u) / SQRT_2PI
    else:
        out = np.where(np.abs(u) <= 0.5, 1.5 * (1.0 - 4.0 * u * u), 0.0)
        out = np.maximum(out, 0.0)
    return out if out.ndim else float(out)


def self_convolution(kernel: Kernel, y):
    """g_K(y) = int K(u) K(u+y) du.

    Normal kernel: the N(0, 2) density.  Epanechnikov:
    (6/5)(1 - 5y^2 + 5y^3 - y^5) on [0, 1], mirrored on [-1, 0],
    zero outside [-1, 1].
    """
    y = np.asarray(y, dtype=float)
    if kernel is Kernel.NORMAL:
        out = np.exp(-0.25 * y * y) / (2.0 * SQRT_PI)
    else:
        a = np.abs(y)
        out = np.where(a <= 1.0,
                       1.2 * (1.0 - 5.0 * a**2 + 5.0 * a**3 - a**5), 0.0)
        out = np.maximum(out, 0.0)
    return out if out.ndim else float(out)


def a_k(kernel: Kernel, n, v):
    """A_K(v) = (1 - 1/n) g_K(v) - 2 K(v).  Pass n = math.inf for the limit."""
    _check_n(n)
    w = 1.0 if math.isinf(n) else 1.0 - 1.0 / n
    out = w * np.asarray(self_convolution(kernel, v)) - 2.0 * np.asarray(kernel_eval(kernel, v))
    return out if out.ndim else float(out)


def kde(sample, kernel: Kernel, h: float, x):
    """Kernel density estimate n^{-1} sum_i K_h(X_i - x), vectorized in x."""
    if h <= 0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    sample = np.asarray(sample, dtype=float)
    if sample.size == 0:
        raise ValueError("sample must be nonempty")
    x = np.asarray(x, dtype=float)
    u = (sample[:, None] - np.atleast_1d(x)[None, :]) / h
    vals = np.asarray(kernel_eval(kernel, u)).mean(axis=0) / h
    return vals if x.ndim else float(vals[0])


def _check_n(n) -> None:
    if not math.isinf(n) and (n != int(n) or n < 2):
        raise ValueError(f"sample size must be an integer >= 2, got {n}")
