"""Spectral side: pseudo-Fourier transforms and the spectral integrated kernels.

Conventions: ghat(u) = int g(x) exp(i <u, x>) dx over the orthant, and the
truncated version ghat_n restricts the integral to (0, n]^k.  With v = <u, 1>,

    hhat_t(u)      = (exp(i t v) - 1) / (i v) * ghat(-u),
    hhat_t^beta(u) = (exp(i t v) - 1) (i v)^(-beta-1) ghat(-u) Gamma(beta),

and Plancherel reads (2 pi)^-k int |hhat|^2 du = ||h||^2.  Complex powers use
the principal branch, (i v)^-m = |v|^-m exp(-i sign(v) m pi / 2).
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import fracfilter as FF
from . import kernels as K
from ._quad import adaptive, adaptive_pieces, gauss_legendre, graded_unit_rule


class SpectralConvergenceError(RuntimeError):
    """Oscillatory quadrature could not resolve the requested frequency."""


# ---------------------------------------------------------------------------
# closed forms


def _power_branch(z_sign, mag, mu):
    """(-i u)^-mu for real u given as sign and magnitude."""
    with np.errstate(divide="ignore", invalid="ignore"):
        return mag ** (-mu) * np.exp(1j * z_sign * mu * np.pi / 2)


def _product_ghat(gamma, u):
    g = np.asarray(gamma)
    mu = g + 1
    return np.prod(special.gamma(mu) * _power_branch(np.sign(u), np.abs(u), mu), axis=-1)


def has_closed_form(kernel: K.KernelSpec) -> bool:
    f = kernel.form
    if isinstance(f, K.Product) or kernel.k == 1:
        return True
    if isinstance(f, K.Tensor):
        return has_closed_form(f.left) and has_closed_form(f.right) and not kernel.symmetric
    return False


def ghat(kernel: K.KernelSpec, u) -> np.ndarray:
    """Closed-form ghat for product kernels (k = 1 kernels reduce to g(1) x^alpha)."""
    u = np.asarray(u, dtype=float)
    if u.ndim == 0:
        u = u[None]
    f = kernel.form
    if isinstance(f, K.Product):
        if not kernel.symmetric:
            return _product_ghat(f.gamma, u)
        perms = list(itertools.permutations(range(kernel.k)))
        out = 0
        for p in perms:
            out = out + _product_ghat(np.asarray(f.gamma)[list(p)], u)
        return out / len(perms)
    if kernel.k == 1:
        return float(K._eval_unchecked(kernel, np.ones(1))) * _product_ghat((kernel.alpha,), u)
    if isinstance(f, K.Tensor) and not kernel.symmetric:
        k1 = f.left.k
        return ghat(f.left, u[..., :k1]) * ghat(f.right, u[..., k1:])
    raise NotImplementedError("closed-form ghat needs a product kernel; use ghat_truncated")


# ---------------------------------------------------------------------------
# truncated transforms


def oscillatory_rule(u: float, n: float, gmin: float, order: int = 16, osc_frac: float = 0.25,
                     start=(40, 10)):
    """Composite Gauss rule on (0, n] for x^gamma exp(i u x)-type integrands.

    A graded start handles the power singularity at 0; after that panels grow
    geometrically until they reach ``osc_frac`` of a period, then stay uniform,
    so the panel count grows like |u| n.
    """
    au = abs(u)
    h_osc = osc_frac * 2 * np.pi / au if au > 0 else np.inf
    a = min(n, 1.0, h_osc)
    # [0, a] through the singular-start substitution
    w, wt = graded_unit_rule(*start)
    p = 1.0 / (1.0 + max(gmin, -0.999))
    nodes = [a * w ** p]
    weights = [p * a * w ** (p - 1) * wt]
    x, xw = gauss_legendre(order)
    edges = [a]
    while edges[-1] < n:
        e = edges[-1]
        step = min(e, h_osc)
        edges.append(min(n, e + step))
    edges = np.asarray(edges)
    lo, hi = edges[:-1], edges[1:]
    if len(lo):
        nodes.append((lo[:, None] + (hi - lo)[:, None] * x).ravel())
        weights.append(((hi - lo)[:, None] * xw).ravel())
    return np.concatenate(nodes), np.concatenate(weights)


@dataclass(frozen=True)
class GhatValue:
    u: tuple
    n: float
    value: complex
    abs_error_estimate: float


def _gmin(kernel):
    return kernel.envelope.gamma_min if kernel.envelope is not None else kernel.alpha / kernel.k


def _ghat_trunc_once(kernel, u, n, order, osc_frac, max_nodes, start=(40, 10)):
    k = kernel.k
    rules = [oscillatory_rule(uj, n, _gmin(kernel), order, osc_frac, start) for uj in u]
    if np.prod([len(r[0]) for r in rules], dtype=float) > max_nodes:
        raise SpectralConvergenceError(
            f"frequency {tuple(u)} with n={n:g} needs more than {max_nodes:.0f} nodes")
    if k == 1:
        x, w = rules[0]
        vals = K._eval_unchecked(kernel, x[:, None]) * np.exp(1j * u[0] * x)
        return complex(np.sum(vals * w))
    if k == 2:
        (x1, w1), (x2, w2) = rules
        ph2 = np.exp(1j * u[1] * x2) * w2
        total = 0j
        for s in range(0, len(x1), 512):
            a = x1[s:s + 512]
            pts = np.stack(np.broadcast_arrays(a[:, None], x2[None, :]), axis=-1)
            inner = K._eval_unchecked(kernel, pts) @ ph2
            total += np.sum(inner * np.exp(1j * u[0] * a) * w1[s:s + 512])
        return complex(total)
    raise NotImplementedError("truncated transforms are implemented for k <= 2")


def ghat_truncated(kernel: K.KernelSpec, u, n: float, *, order: int = 16, osc_frac: float = 0.25,
                   max_nodes: float = 2e7) -> GhatValue:
    """ghat_n(u) by composite Gauss panels; error from a second, coarser rule."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if len(u) != kernel.k:
        raise ValueError("u must have k components")
    fine = _ghat_trunc_once(kernel, u, n, order, osc_frac, max_nodes)
    coarse = _ghat_trunc_once(kernel, u, n, order - 4, osc_frac, max_nodes, (28, 7))
    return GhatValue(tuple(map(float, u)), float(n), fine, abs(fine - coarse))


def ghat_stabilized(kernel: K.KernelSpec, u, n: float, **kw) -> complex:
    """ghat_n plus the leading end correction -g(n) exp(i u n) / (i u) (k = 1).

    This removes the O(n^alpha / |u|) oscillation of the truncated transform,
    leaving an O(n^(alpha-1)) error.  For k > 1 the raw ghat_n is returned.
    """
    val = ghat_truncated(kernel, u, n, **kw).value
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if kernel.k == 1 and u[0] != 0:
        gn = float(K._eval_unchecked(kernel, np.array([n])))
        val += -gn * np.exp(1j * u[0] * n) / (1j * u[0])
    return complex(val)


def ghat_homogeneity_check(kernel: K.KernelSpec, samples, lambdas=(2.0, 4.0), *, n: float = 1e4,
                           numeric: bool = None) -> float:
    """max |ghat(lam u) - lam^(-alpha-k) ghat(u)| / |ghat(u)| over samples and lambdas."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if numeric is None:
        numeric = not has_closed_form(kernel)
    expo = -kernel.alpha - kernel.k
    worst = 0.0
    for u in samples:
        base = ghat_stabilized(kernel, u, n) if numeric else complex(ghat(kernel, u))
        for lam in lambdas:
            if lam == 1:
                continue
            scaled = ghat_stabilized(kernel, lam * u, n) if numeric else complex(ghat(kernel, lam * u))
            worst = max(worst, abs(scaled - lam ** expo * base) / abs(base))
    return float(worst)


# ---------------------------------------------------------------------------
# integrated kernels


def time_factor(t: float, v):
    """(exp(i t v) - 1) / (i v), equal to t at v = 0."""
    v = np.asarray(v, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(v == 0, t + 0j, np.expm1(1j * t * v) / (1j * v))
    small = np.abs(t * v) < 1e-6
    series = t + 1j * t ** 2 * v / 2 - t ** 3 * v ** 2 / 6
    return np.where(small, series, out)


def spectral_ht(kernel: K.KernelSpec, t: float, u, ghat_minus_u=None):
    u = np.asarray(u, dtype=float)
    if u.ndim == 0:
        u = u[None]
    gm = ghat(kernel, -u) if ghat_minus_u is None else ghat_minus_u
    out = time_factor(t, u.sum(axis=-1)) * gm
    return complex(out) if np.ndim(out) == 0 else out


def _iv_power(v, m):
    """(i v)^-m on the principal branch."""
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.abs(v) ** (-m) * np.exp(-1j * np.sign(v) * m * np.pi / 2)


def spectral_ht_beta(kernel: K.KernelSpec, beta: float, t: float, u, ghat_minus_u=None):
    if beta == 0:
        raise ValueError("beta = 0 reduces to spectral_ht")
    u = np.asarray(u, dtype=float)
    if u.ndim == 0:
        u = u[None]
    v = u.sum(axis=-1)
    gm = ghat(kernel, -u) if ghat_minus_u is None else ghat_minus_u
    out = np.expm1(1j * t * v) * _iv_power(v, beta + 1) * gm * special.gamma(beta)
    return complex(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Plancherel


def _one_sided_cos_integral(p: float, t: float, tol: float):
    """int_0^inf (2 - 2 cos(t u)) u^p du for -3 < p < -1, by quadrature."""
    f = lambda u: (2 - 2 * math.cos(t * u)) * u ** p
    head, e1 = adaptive(f, 0.0, 1.0, epsabs=tol, epsrel=tol)
    flat = 2.0 / (-p - 1)
    osc, e2 = adaptive(lambda u: u ** p, 1.0, np.inf, weight="cos", wvar=t, epsabs=tol, epsrel=tol)
    return head + flat - 2 * osc, e1 + 2 * e2


def spectral_norm_sq(kernel: K.KernelSpec, t: float = 1.0, beta: float = None, *,
                     tol: float = 1e-11):
    """(2 pi)^-k int |hhat_t|^2 du (or of hhat_t^beta), with an error estimate."""
    if kernel.k == 1:
        c = abs(complex(ghat(kernel, np.array([1.0])))) ** 2
        p = -2 * (kernel.alpha + 1) - 2
        pref = c
        if beta is not None:
            p -= 2 * beta
            pref *= special.gamma(beta) ** 2
        # |ghat(u)|^2 = c |u|^(-2(alpha+1)); even in u
        val, err = _one_sided_cos_integral(p, t, tol)
        return pref * 2 * val / (2 * np.pi), pref * 2 * err / (2 * np.pi)
    if kernel.k == 2:
        return _spectral_norm_sq_2d(kernel, t, beta, tol)
    raise NotImplementedError("Plancherel checks are implemented for k <= 2")


def _spectral_norm_sq_2d(kernel, t, beta, tol):
    # With v = u1 + u2 the time factor depends on v only, and
    # G(v) = int |ghat(-(w, v - w))|^2 dw is homogeneous of degree -2 alpha - 3,
    # so the 2-D integral splits into G(+-1) times a 1-D cosine integral in v.
    def G(sign):
        f = lambda w: abs(complex(ghat(kernel, -np.array([w, sign - w])))) ** 2
        brk = sorted({-1.0, 0.0, float(sign), 2.0 * sign, -sign})
        mid, e0 = adaptive_pieces(f, brk, epsabs=0, epsrel=tol, limit=400)
        lo, e1 = adaptive(f, -np.inf, brk[0], epsabs=0, epsrel=tol)
        hi, e2 = adaptive(f, brk[-1], np.inf, epsabs=0, epsrel=tol)
        return mid + lo + hi, e0 + e1 + e2

    gp, ep = G(1.0)
    gm, em = G(-1.0)
    p = -2 * kernel.alpha - 3 - 2
    pref = 1.0
    if beta is not None:
        p -= 2 * beta
        pref = special.gamma(beta) ** 2
    val, err = _one_sided_cos_integral(p, t, tol)
    scale = pref / (2 * np.pi) ** 2
    return scale * (gp + gm) * val, scale * ((ep + em) * val + (gp + gm) * err)


def plancherel_check(kernel: K.KernelSpec, t: float = 1.0, beta: float = None) -> float:
    """Relative gap between the spectral and time-domain squared norms."""
    spec_val, _ = spectral_norm_sq(kernel, t, beta)
    if beta is None:
        time_val = K.ht_norm_sq(kernel, t)
    else:
        time_val = FF.h_beta_norm_sq(kernel, beta, t)
    return abs(spec_val - time_val) / time_val


# ---------------------------------------------------------------------------
# export


def write_spectral_csv(path, kernel: K.KernelSpec, t: float, U, g=None) -> None:
    """Rows u, ghat(u), |ht(u)|; ``g`` holds precomputed ghat(u) values if given."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    if g is None:
        g = ghat(kernel, U)
        h = spectral_ht(kernel, t, U)
    else:
        g = np.asarray(g, dtype=complex)
        h = spectral_ht(kernel, t, U, ghat_minus_u=np.conj(g))   # ghat(-u) = conj ghat(u)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"u{j + 1}" for j in range(kernel.k)] + ["re_ghat", "im_ghat", "abs_ht"])
        for row, gv, hv in zip(U, np.atleast_1d(g), np.atleast_1d(h)):
            w.writerow([repr(float(v)) for v in row]
                       + [repr(float(np.real(gv))), repr(float(np.imag(gv))), repr(float(abs(hv)))])
