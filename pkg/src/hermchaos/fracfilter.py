"""Fractional filters C_n ~ n^(beta - 1) and fractionally filtered kernels.

A filtered chaos process is U(n) = sum_{m >= 1} C_m X(n - m).  Two coefficient
families are provided, with the constant in C_n ~ c n^(beta - 1) fixed to c = 1:

* pure power, beta > 0:   C_n = n^(beta - 1);
* telescoping, beta < 0:  C_1 = 1/beta, C_n = (n^beta - (n - 1)^beta) / beta,
  whose partial sums are exactly m^beta / beta, so the coefficients sum to 0.

The continuous counterpart replaces 1_(0, t] by
l_t(s) = ((t - s)_+^beta - (-s)_+^beta) / beta, with the convention 0_+^beta = 0.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import fft as sfft
from scipy import signal, special

from . import kernels as K
from ._quad import adaptive, adaptive_pieces

PURE_POWER = "pure_power"
TELESCOPING = "telescoping"
DEFAULT_LENGTH = 2000


@dataclass(frozen=True)
class FilterSpec:
    beta: float
    family: Optional[str] = None
    length: int = DEFAULT_LENGTH

    def __post_init__(self):
        if self.beta == 0:
            raise ValueError("beta = 0 is the unfiltered case")
        fam = self.family or (PURE_POWER if self.beta > 0 else TELESCOPING)
        if fam not in (PURE_POWER, TELESCOPING):
            raise ValueError(f"unknown filter family {fam!r}")
        if fam == PURE_POWER and self.beta < 0:
            raise ValueError("pure power coefficients with beta < 0 do not sum to zero")
        if fam == TELESCOPING and self.beta > 0:
            raise ValueError("the telescoping family is for beta < 0")
        if self.length < 1:
            raise ValueError("filter length must be positive")
        object.__setattr__(self, "family", fam)

    @property
    def coefficients(self) -> np.ndarray:
        return build_filter(self.beta, self.length, self.family)


def beta_window(kernel: K.KernelSpec) -> tuple:
    """Open interval of admissible beta; 0 must be excluded separately."""
    a, k = kernel.alpha, kernel.k
    return (-a - k / 2 - 1, -a - k / 2)


def filtered_hurst(kernel: K.KernelSpec, beta: float) -> float:
    return kernel.alpha + beta + kernel.k / 2 + 1


def check_beta(kernel: K.KernelSpec, beta: float) -> None:
    lo, hi = beta_window(kernel)
    if not (lo < beta < hi) or beta == 0:
        raise ValueError(f"beta={beta:g} outside ({lo:g}, {hi:g}) minus {{0}}")


def build_filter(beta: float, length: int, family: Optional[str] = None) -> np.ndarray:
    """C_1, ..., C_length."""
    fam = FilterSpec(beta, family, length).family
    n = np.arange(1, length + 1, dtype=float)
    if fam == PURE_POWER:
        return n ** (beta - 1)
    c = np.empty(length)
    c[0] = 1.0 / beta
    # n^b - (n-1)^b = (n-1)^b expm1(b log1p(1/(n-1))) keeps digits for large n
    m = n[1:] - 1
    c[1:] = m ** beta * np.expm1(beta * np.log1p(1.0 / m)) / beta
    return c


def partial_sums(beta: float, length: int) -> np.ndarray:
    """Exact partial sums of the telescoping family, m^beta / beta."""
    return np.arange(1, length + 1, dtype=float) ** beta / beta


def filter_tail_bound(spec: FilterSpec) -> dict:
    """Bounds on what the length cutoff drops.

    ``square_tail`` bounds sum_{m > L} C_m^2; for the telescoping family
    |C_m| <= (m - 1)^(beta - 1) by the mean value theorem.  ``residual`` is the
    untruncated remainder sum_{m > L} C_m (telescoping only).
    """
    L, b = spec.length, spec.beta
    if spec.family == PURE_POWER:
        sq = float(special.zeta(2 - 2 * b, L + 1))
        return {"square_tail": sq, "residual": float("inf")}
    sq = float(special.zeta(2 - 2 * b, L))
    return {"square_tail": sq, "residual": float(-(L ** b) / b)}


def apply_filter(X, spec, *, return_index: bool = True):
    """U(n) = sum_{m=1}^L C_m X(n - m) where the whole window is available.

    ``spec`` is a FilterSpec or an explicit coefficient sequence C_1..C_L.
    Returns U and the (1-based) indices n = L+1..N it belongs to.
    """
    C = spec.coefficients if isinstance(spec, FilterSpec) else np.asarray(spec, dtype=float)
    X = np.asarray(X, dtype=float)
    L, N = len(C), X.shape[-1]
    if N <= L:
        raise ValueError(f"path of length {N} is not longer than the filter ({L})")
    if L * N <= 4_000_000 and X.ndim == 1:
        full = np.convolve(X, C)
    else:
        full = signal.fftconvolve(X, np.broadcast_to(C, X.shape[:-1] + (L,)), axes=-1)
    U = full[..., L - 1: N - 1]
    idx = np.arange(L + 1, N + 1)
    return (U, idx) if return_index else U


def _autocorr(w: np.ndarray) -> np.ndarray:
    """r(d) = sum_j w_j w_{j+d}, d = 0..len(w)-1."""
    n = len(w)
    if n <= 2048:
        return np.correlate(w, w, mode="full")[n - 1:]
    L = sfft.next_fast_len(2 * n)
    f = sfft.rfft(w, L)
    return sfft.irfft(f * np.conj(f), L)[:n]


def filtered_acf(gamma_x, C, n_max: int) -> np.ndarray:
    """gamma_U(n) = sum_{m, m'} C_m C_m' gamma_X(n + m - m'), n = 0..n_max."""
    C = np.asarray(C, dtype=float)
    gamma_x = np.asarray(gamma_x, dtype=float)
    L = len(C)
    need = n_max + L
    if len(gamma_x) < need:
        raise ValueError(f"need gamma_X at lags 0..{need - 1}")
    rc = _autocorr(C)                       # rc(d) = sum_m C_m C_{m+d}
    d = np.arange(-(L - 1), L)
    rc_full = rc[np.abs(d)]
    out = np.empty(n_max + 1)
    for n in range(n_max + 1):
        out[n] = np.dot(rc_full, gamma_x[np.abs(n - d)])
    return out


def filtered_partial_sum_variance(gamma_x, C, N: int) -> float:
    """Var(sum_{n=1}^N U(n)) as the bilinear form sum_d rho_w(d) gamma_X(d).

    The partial sum equals sum_j w_j X(j) with w the convolution of C with the
    indicator of [1, N]; this needs gamma_X up to lag N + L - 2.
    """
    C = np.asarray(C, dtype=float)
    gamma_x = np.asarray(gamma_x, dtype=float)
    w = np.convolve(C, np.ones(N)) if len(C) * N <= 4_000_000 else signal.fftconvolve(C, np.ones(N))
    if len(gamma_x) < len(w):
        raise ValueError(f"need gamma_X at lags 0..{len(w) - 1}")
    rw = _autocorr(w)
    return float(rw[0] * gamma_x[0] + 2 * np.dot(rw[1:], gamma_x[1:len(w)]))


# ---------------------------------------------------------------------------
# continuous kernels


def l_beta(beta: float, t: float, s):
    """l_t(s) = ((t - s)_+^beta - (-s)_+^beta) / beta, with 0_+^beta = 0."""
    if beta == 0:
        raise ValueError("beta must be non-zero")
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(t - s > 0, np.abs(t - s) ** beta, 0.0)
        b = np.where(-s > 0, np.abs(s) ** beta, 0.0)
    out = (a - b) / beta
    return float(out) if out.ndim == 0 else out


def _l_stable(beta: float, t: float, s: float) -> float:
    if s >= t:
        return 0.0
    if s >= 0:
        return (t - s) ** beta / beta
    r = -s
    return r ** beta * math.expm1(beta * math.log1p(t / r)) / beta


@dataclass(frozen=True)
class FilteredKernelValue:
    t: float
    beta: float
    x: tuple
    value: float
    abs_error_estimate: float


def h_beta_evaluate(kernel: K.KernelSpec, beta: float, t: float, x, *, epsabs: float = 1e-11,
                    epsrel: float = 1e-10) -> FilteredKernelValue:
    """h_t^beta(x) = int l_t(s) g(s 1 - x) 1{s 1 > x} ds.

    l_t vanishes beyond t, so the integral runs over (max x_j, t) with breaks at
    the singular points 0 and t of l_t.
    """
    check_beta(kernel, beta)
    x = np.asarray(x, dtype=float).reshape(kernel.k)
    lo = float(x.max())
    if lo >= t:
        return FilteredKernelValue(t, beta, tuple(map(float, x)), 0.0, 0.0)
    off = lo - x

    def f(u):
        return _l_stable(beta, t, lo + u) * float(K._eval_unchecked(kernel, off + u))

    breaks = sorted({0.0, t - lo} | ({-lo} if lo < 0 else set()))
    val, err = adaptive_pieces(f, breaks, epsabs=epsabs, epsrel=epsrel)
    return FilteredKernelValue(t, beta, tuple(map(float, x)), val, err)


def h_beta_norm_sq(kernel: K.KernelSpec, beta: float, t: float = 1.0, c: K.CValue = None,
                   *, tol: float = 1e-12) -> float:
    """||h_t^beta||^2 = 2 C_g B(beta+1, delta)/beta * int l_t(s) [(t-s)_+^(beta+delta) - (-s)_+^(beta+delta)] ds.

    delta = 2 alpha + k + 1.  On (0, t) the remaining integral is elementary;
    on s < 0 it is computed by quadrature after s = -t r.
    """
    check_beta(kernel, beta)
    c = K.default_c(kernel) if c is None else c
    delta = 2 * kernel.alpha + kernel.k + 1
    p = 2 * beta + delta
    if not p > -1:
        raise ValueError("integrand is not integrable at the window boundary")
    inner = 1.0 / ((p + 1) * beta)

    def f(r):
        lr = math.log1p(1.0 / r)
        return r ** (p) * math.expm1(beta * lr) * math.expm1((beta + delta) * lr) / beta

    neg, err = adaptive_pieces(f, [0.0, 1.0], epsabs=tol, epsrel=tol)
    tail, err2 = adaptive(f, 1.0, np.inf, epsabs=tol, epsrel=tol)
    integral = t ** (p + 1) * (inner + neg + tail)
    return float(2 * c.value * special.beta(beta + 1, delta) / beta * integral)


# ---------------------------------------------------------------------------
# export


def write_filter_csv(path, spec: FilterSpec) -> None:
    C = spec.coefficients
    ps = np.cumsum(C)
    if spec.family == TELESCOPING:
        ps = partial_sums(spec.beta, spec.length)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "C_n", "partial_sum"])
        for n in range(len(C)):
            w.writerow([n + 1, repr(float(C[n])), repr(float(ps[n]))])
