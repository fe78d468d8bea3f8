"""Desk-scale checks of the limit theorems.

Weak convergence itself is out of reach numerically; what is checked are the
marginal laws and second moments: L^2 convergence of the discretized kernel,
variance scaling exponents, normality of SRD partial sums, moment ratios, and
the independence structure of multivariate limits on shared noise.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import special, stats
from scipy.stats import qmc

from . import chaos as C
from . import fracfilter as FF
from . import kernels as K
from ._quad import adaptive, adaptive_pieces, gauss_legendre

SCHEMA_VERSION = 1
DEFAULT_MAX_DRAWS = 2_000_000_000


# ---------------------------------------------------------------------------
# discretized limit kernel


@dataclass(frozen=True)
class DiscretizedKernel:
    """h~_{t,N} on the lattice x = j/N, j in [lo, hi)^k (zero for j >= [Nt] - 1).

    ``values[j - lo]`` holds N^(-alpha-1) sum_{n=1}^{[Nt]} g(n 1 - j - 1) 1{n 1 > j + 1}.
    """
    kernel: K.KernelSpec
    N: int
    t: float
    lo: int
    values: np.ndarray
    tail_bound: float

    def at(self, x) -> np.ndarray:
        """Evaluate h~ at real points x of shape (..., k)."""
        j = np.floor(self.N * np.asarray(x, dtype=float)).astype(int) - self.lo
        inside = np.all((j >= 0) & (j < self.values.shape[0]), axis=-1)
        jc = np.clip(j, 0, self.values.shape[0] - 1)
        return np.where(inside, self.values[tuple(np.moveaxis(jc, -1, 0))], 0.0)


def _power_ht_norm(gamma: float, t: float) -> float:
    # ||int_0^t (s - x)_+^gamma ds||_{L^2(R)}
    h = gamma + 1.5
    return math.sqrt(t ** (2 * h) * float(special.beta(gamma + 1, -2 * gamma - 1)) / (h * (2 * h - 1)))


def window_tail_bound(kernel: K.KernelSpec, t: float, window: float) -> float:
    """Upper bound on int h_t^2 over {some x_j < -window}, from the envelope.

    On x_j < -T each envelope term c prod (s - x_i)^g_i is at most
    c (-x_j)^g_j times the remaining one-dimensional factor, whose L^2 norm is
    explicit; the terms and coordinates are combined by the triangle inequality.
    """
    env = kernel.envelope
    if env is None or kernel.k > 2:
        return float("inf")
    T = float(window)
    total = 0.0
    for term in env.terms:
        g = list(term.gamma)
        for j, gj in enumerate(g):
            edge = math.sqrt(T ** (2 * gj + 1) / (-2 * gj - 1))
            rest = t if len(g) == 1 else _power_ht_norm(g[1 - j], t)
            total += term.coeff * edge * rest
    return total ** 2


def discretize_limit_kernel(kernel: K.KernelSpec, t: float, N: int, window: float,
                            *, tol: float = None, max_elements: int = 50_000_000) -> DiscretizedKernel:
    """Lattice values of h~_{t,N} for x in [-window, t)^k.

    With ``tol`` the window is rejected when the envelope bound on the h_t mass
    left outside it exceeds tol.
    """
    bound = window_tail_bound(kernel, t, window)
    if tol is not None and not bound <= tol:
        raise ValueError(f"window {window:g} leaves up to {bound:.3g} of ||h_t||^2 outside (tol {tol:g})")
    k, a = kernel.k, kernel.alpha
    nt = int(math.floor(N * t + 1e-9))
    lo = -int(math.ceil(window * N))
    hi = max(int(math.ceil(N * t - 1e-9)), lo + 1)     # h~ vanishes from nt - 1 on, h_t only at t
    size = hi - lo
    if float(size) ** k > max_elements:
        raise C.ResourceCapError(f"lattice of {size}^{k} points exceeds the cap")
    scale = float(N) ** (-a - 1)
    if k == 1:
        # H(j) = sum_{m = max(1, -j)}^{nt - j - 1} g(m)
        m = np.arange(1, nt - lo + 1, dtype=float)
        cs = np.concatenate([[0.0], np.cumsum(K._eval_unchecked(kernel, m[:, None]))])
        j = np.arange(lo, hi)
        upper = np.clip(nt - j - 1, 0, None)
        lower = np.clip(-j, 1, None) - 1
        vals = np.where(upper > lower, cs[upper] - cs[np.minimum(lower, upper)], 0.0)
        values = scale * vals
    elif k == 2:
        values = np.zeros((size, size))
        j = np.arange(lo, hi)
        for d in range(-(size - 1), size):
            # cells (j1, j1 + d): terms g(m, m - d) for m = n - j1 - 1
            j1 = j[max(0, -d): size - max(0, d)]
            m0 = max(1, 1 + d)
            m_hi = nt - j1.min() - 1
            if m_hi < m0:
                continue
            m = np.arange(m0, m_hi + 1, dtype=float)
            gv = K._eval_unchecked(kernel, np.stack([m, m - d], axis=-1))
            cs = np.concatenate([[0.0], np.cumsum(gv)])
            upper = nt - j1 - 1                    # last m
            first = np.maximum(m0, -j1)            # n >= 1  <=>  m >= -j1
            ui = np.clip(upper - m0 + 1, 0, len(gv))
            li = np.clip(first - m0, 0, len(gv))
            vals = np.where(ui > li, cs[ui] - cs[np.minimum(li, ui)], 0.0)
            rows = j1 - lo
            values[rows, rows + d] = vals
        values *= scale
    else:
        raise NotImplementedError("lattice kernels are implemented for k <= 2")
    return DiscretizedKernel(kernel, N, t, lo, values, bound)


def _h_closed_k1(kernel: K.KernelSpec, t: float, x: np.ndarray) -> np.ndarray:
    # k = 1 kernels are g(1) x^alpha
    a1 = kernel.alpha + 1
    g1 = float(K._eval_unchecked(kernel, np.ones(1)))
    with np.errstate(invalid="ignore", divide="ignore"):
        up = np.where(t - x > 0, np.abs(t - x) ** a1, 0.0)
        down = np.where(-x > 0, np.abs(x) ** a1, 0.0)
    return g1 * (up - down) / a1


@dataclass(frozen=True)
class L2Error:
    relative: float
    absolute_sq: float
    norm_sq: float
    window: float
    outside_mass: float


def l2_discretization_error(kernel: K.KernelSpec, t: float, N: int, *, window: float = None,
                            nodes: int = None) -> L2Error:
    """||h~_{t,N} - h_t|| / ||h_t|| by Gauss nodes inside every lattice cell.

    For k = 1 the exact h_t is used in closed form (g = g(1) x^alpha) and the
    window is wide; for k = 2 h_t comes from the vectorized quadrature, with the
    two axes on different node sets so that no node sits on the diagonal.
    ``outside_mass`` is the part of ||h_t||^2 left outside the window; the error
    dropped there is far smaller, since h~ tracks h_t away from the origin.
    """
    k = kernel.k
    if window is None:
        window = 2000.0 * t if k == 1 else 2.0 * t
    if nodes is None:
        nodes = 6 if k == 1 else 3
    dk = discretize_limit_kernel(kernel, t, N, window)
    norm_sq = K.ht_norm_sq(kernel, t)
    xg, wg = gauss_legendre(nodes)
    h = 1.0 / N
    if k == 1:
        cells = dk.lo + np.arange(dk.values.shape[0])
        x = (cells[:, None] + xg[None, :]) * h
        hv = _h_closed_k1(kernel, t, x)
        diff = dk.values[:, None] - hv
        err_sq = float(np.sum(diff ** 2 @ wg) * h)
        inside = float(np.sum(hv ** 2 @ wg) * h)
    elif k == 2:
        xg2, wg2 = gauss_legendre(nodes + 1)
        size = dk.values.shape[0]
        cells = dk.lo + np.arange(size)
        err_sq = inside = 0.0
        for r in range(size):
            x1 = (cells[r] + xg) * h
            x2 = ((cells[:, None] + xg2[None, :]) * h).ravel()
            pts = np.stack(np.broadcast_arrays(x1[:, None], x2[None, :]), axis=-1)
            hv = K.ht_values(kernel, t, pts).reshape(nodes, size, nodes + 1)
            diff = dk.values[r][None, :, None] - hv
            err_sq += float(np.einsum("asb,a,b->", diff ** 2, wg, wg2)) * h * h
            inside += float(np.einsum("asb,a,b->", hv ** 2, wg, wg2)) * h * h
    else:
        raise NotImplementedError("L2 errors are implemented for k <= 2")
    return L2Error(math.sqrt(err_sq / norm_sq), err_sq, norm_sq, window,
                   max(norm_sq - inside, 0.0))


# ---------------------------------------------------------------------------
# ensembles


@dataclass
class EnsembleResult:
    samples: np.ndarray
    R: int
    seed: int
    streams: tuple
    t_grid: np.ndarray
    N: int
    H: float
    summary: dict = field(default_factory=dict)

    def to_dict(self):
        return {"R": self.R, "seed": self.seed, "streams": list(self.streams), "N": self.N,
                "H": self.H, "t_grid": [float(v) for v in self.t_grid], "summary": self.summary}


def summarize(samples, sigma2: float = None) -> dict:
    """Mean, variance, skewness, excess kurtosis and KS distance to a normal.

    With ``sigma2`` the reference is Normal(0, sigma2); otherwise the normal
    fitted by sample mean and standard deviation.
    """
    x = np.asarray(samples, dtype=float).ravel()
    R = len(x)
    if R < 2:
        raise ValueError("need at least two samples")
    mean, var = float(x.mean()), float(x.var(ddof=1))
    if sigma2 is None:
        ks = stats.kstest(x, "norm", args=(mean, math.sqrt(var)))
    else:
        ks = stats.kstest(x, "norm", args=(0.0, math.sqrt(sigma2)))
    skew = float(stats.skew(x))
    kurt = float(stats.kurtosis(x))
    return {"mean": mean, "variance": var, "skewness": skew, "excess_kurtosis": kurt,
            "ks": float(ks.statistic), "ks_pvalue": float(ks.pvalue),
            "skew_z": skew / math.sqrt(6.0 / R), "kurt_z": kurt / math.sqrt(24.0 / R)}


def _check_draws(R: int, width: int, cap: int):
    if float(R) * width > cap:
        raise C.ResourceCapError(f"{R} replications of {width} noise values exceed the cap of {cap}")


def _noise_batch(noise: C.NoiseSpec, streams, start: int, stop: int) -> np.ndarray:
    return np.stack([C.noise_window(noise.substream(r), start, stop) for r in streams])


def ensemble_paths(config: C.ChaosConfig, N: int, R: int, *, mode: str = None, batch: int = 128,
                   first_stream: int = 0, max_draws: int = DEFAULT_MAX_DRAWS):
    """Yield (streams, X) batches with X of shape (b, N); replication r uses stream r."""
    mode = mode or C.default_mode(config)
    M = config.M
    _check_draws(R, N + M, max_draws)
    grid = None if mode == "fast_product" else C.build_coefficients(config)
    for s in range(first_stream, first_stream + R, batch):
        streams = range(s, min(s + batch, first_stream + R))
        e = _noise_batch(config.noise, streams, 1 - M, N)
        yield streams, C.simulate(config, N, mode, grid=grid, eps=e)


def simulate_limit_process(config: C.ChaosConfig, t_grid, N: int, R: int, *, mode: str = None,
                           batch: int = 128) -> EnsembleResult:
    """R replications of Y_N(t) = N^-H sum_{n <= Nt} X(n) under Gaussian noise."""
    if config.noise.law != "gaussian":
        raise ValueError("the Wiener-chaos surrogate needs Gaussian noise")
    if config.is_finite:
        raise ValueError("the limit process needs a kernel (LRD) configuration")
    H = K.hurst(config.kernel)
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=float))
    out = []
    for _, X in ensemble_paths(config, N, R, mode=mode, batch=batch):
        out.append(C.partial_sum_process(X, H, t_grid))
    samples = np.concatenate(out)
    idx1 = int(np.argmin(np.abs(t_grid - 1.0)))
    res = EnsembleResult(samples, R, config.noise.seed, (0, R), t_grid, N, H)
    res.summary = summarize(samples[:, idx1])
    return res


def exact_limit_variance(config: C.ChaosConfig, N: int, t: float = 1.0) -> float:
    """N^-2H Var(sum_{n <= Nt} X(n)) for the truncated process, exactly."""
    H = K.hurst(config.kernel)
    n = int(math.floor(N * t + 1e-9))
    gam = C.acf_exact(config, n).gamma
    return C.exact_partial_sum_variance(gam, n) / N ** (2 * H)


# ---------------------------------------------------------------------------
# scaling fits


@dataclass
class ScalingFit:
    Ns: np.ndarray
    variances: np.ndarray
    slope: float
    intercept: float
    residuals: np.ndarray
    expected_slope: float
    used: np.ndarray

    def to_dict(self):
        return {"N": [int(n) for n in self.Ns], "variances": [float(v) for v in self.variances],
                "slope": self.slope, "intercept": self.intercept,
                "residuals": [float(r) for r in self.residuals],
                "expected_slope": self.expected_slope, "used": [int(n) for n in self.used]}


def ols_loglog(Ns, V, drop_smallest: bool = True):
    Ns, V = np.asarray(Ns, dtype=float), np.asarray(V, dtype=float)
    order = np.argsort(Ns)
    Ns, V = Ns[order], V[order]
    use = slice(1, None) if drop_smallest and len(Ns) > 2 else slice(None)
    x, y = np.log(Ns[use]), np.log(V[use])
    if len(x) < 2 or np.any(~np.isfinite(y)):
        raise ValueError("degenerate grid for a log-log fit")
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept), y - (slope * x + intercept), Ns[use]


def variance_scaling_fit(config: C.ChaosConfig, N_grid, *, filt: FF.FilterSpec = None,
                         tail: str = None, drop_smallest: bool = True,
                         filter_length_factor: int = None) -> ScalingFit:
    """OLS slope of log Var(sum_{n<=N} X(n)) (or of U) against log N.

    The unfiltered variance comes from the exact autocovariance; the filtered
    one from the bilinear form in gamma_X.  For Product kernels the
    autocovariance is the untruncated one (analytic tail) unless ``tail`` says
    otherwise.  Filter truncation at length L changes the filtered variance
    by a factor depending on L/N only, and decays like (L/N)^(H+beta-1), which
    is slow; so unless the FilterSpec carries an explicit length, each N gets
    its own filter of length ``filter_length_factor * N`` and the bias largely drops
    out of the slope.  The default factor is 8 for telescoping filters, whose
    remainder is summable, and 512 for pure power ones.
    """
    Ns = np.asarray(sorted(set(int(n) for n in N_grid)))
    if len(Ns) < 2:
        raise ValueError("degenerate grid for a log-log fit")
    separable = (not config.is_finite and isinstance(config.kernel.form, K.Product)
                 and isinstance(config.perturbation, C.Identity))
    if tail is None:
        tail = "analytic" if separable else "clip"
    if filt is None:
        gam = C.acf_exact(config, int(Ns.max()), tail=tail).gamma
        V = C.partial_sum_variances(gam, Ns)
        expected = 1.0 if config.is_finite else 2 * K.hurst(config.kernel)
    else:
        if config.is_finite:
            raise ValueError("fractional filters pair with kernel configurations")
        FF.check_beta(config.kernel, filt.beta)
        if filter_length_factor is None:
            filter_length_factor = 8 if filt.family == FF.TELESCOPING else 512
        if filt.length == FF.DEFAULT_LENGTH:
            lengths = [filter_length_factor * int(n) for n in Ns]
        else:
            lengths = [filt.length] * len(Ns)
        gam = C.acf_exact(config, int(max(n + L for n, L in zip(Ns, lengths))), tail=tail).gamma
        V = np.array([FF.filtered_partial_sum_variance(gam, FF.build_filter(filt.beta, L, filt.family), int(n))
                      for n, L in zip(Ns, lengths)])
        expected = 2 * FF.filtered_hurst(config.kernel, filt.beta)
    slope, intercept, resid, used = ols_loglog(Ns, V, drop_smallest)
    return ScalingFit(Ns, V, slope, intercept, resid, expected, used)


# ---------------------------------------------------------------------------
# CLT


@dataclass
class NormalityReport:
    sigma2: float
    ks: float
    ks_pvalue: float
    variance_ratio: float
    skew_z: float
    kurt_z: float
    ks_threshold: float


def ks_threshold(R: int, level: float = 0.01) -> float:
    """Critical one-sample KS distance at the given level."""
    return float(stats.kstwo.ppf(1 - level, R))


def clt_ensemble(config: C.ChaosConfig, N: int, R: int, *, batch: int = 256, mode: str = None):
    """R samples of N^-1/2 sum_{n<=N} X(n) and their normality against N(0, sigma^2)."""
    sigma2 = C.long_run_variance(config)   # rejects LRD inputs
    out = []
    for _, X in ensemble_paths(config, N, R, mode=mode, batch=batch):
        out.append(X.sum(axis=-1) / math.sqrt(N))
    samples = np.concatenate(out)
    summ = summarize(samples, sigma2)
    res = EnsembleResult(samples, R, config.noise.seed, (0, R), np.array([1.0]), N, 0.5, summ)
    rep = NormalityReport(sigma2, summ["ks"], summ["ks_pvalue"], summ["variance"] / sigma2,
                          summ["skew_z"], summ["kurt_z"], ks_threshold(R))
    return res, rep


# ---------------------------------------------------------------------------
# moments


def moment_ratio(samples, p: float) -> float:
    """(E|Y|^p)^(1/p) / (E Y^2)^(1/2)."""
    x = np.asarray(samples, dtype=float).ravel()
    if len(x) < 10:
        raise ValueError("need at least 10 samples")
    if not p > 2:
        raise ValueError("p must exceed 2")
    return float(np.mean(np.abs(x) ** p) ** (1 / p) / math.sqrt(np.mean(x ** 2)))


# ---------------------------------------------------------------------------
# multivariate structure


def cross_covariance_limit(cp: C.ChaosConfig, cq: C.ChaosConfig, t1: float, t2: float) -> float:
    """(t1 ^ t2) sum_n gamma_{p,q}(n); zero when the orders differ."""
    if cp.k != cq.k:
        return 0.0
    if not (cp.is_finite and cq.is_finite):
        raise C.NotSRDError("cross covariances need summable (finite-support) pairs")
    n_max = max(cp.M, cq.M)
    g = C.cross_acf(cp, cq, n_max)
    if not np.isfinite(np.abs(g).sum()):
        raise C.NotSRDError("cross autocovariance is not summable")
    return float(min(t1, t2) * g.sum())


def probe_points(dim: int, count: int = 16) -> np.ndarray:
    """Fixed quasi-random probes in (-2, 2)^dim (Halton, first point skipped)."""
    if dim == 0:
        return np.zeros((count, 0))
    pts = qmc.Halton(d=dim, scramble=False).random(count + 1)[1:]
    return -2 + 4 * pts


def _h_point(kernel: K.KernelSpec, t: float, pts: np.ndarray) -> np.ndarray:
    if kernel.k == 1:
        return _h_closed_k1(kernel, t, pts[..., 0])
    return K.ht_values(kernel, t, pts)


def _contraction_at(k1, k2, t, xs, ys, tol):
    def f(z):
        a = float(_h_point(k1, t, np.append(xs, z)[None, :])[0])
        if a == 0.0:
            return 0.0
        return a * float(_h_point(k2, t, np.append(ys, z)[None, :])[0])

    pts = sorted({float(v) for v in np.concatenate([xs, ys, [0.0]]) if v < t})
    lo = min(pts) - 1.0
    breaks = [lo] + pts + [t]
    val, err = adaptive_pieces(f, breaks, epsabs=tol, epsrel=1e-8, limit=200)
    far, err2 = adaptive(f, -np.inf, lo, epsabs=tol, epsrel=1e-8)
    return val + far, err + err2


@dataclass
class ContractionResult:
    values: np.ndarray
    probes: np.ndarray
    max_abs: float
    min_value: float


def contraction_integral(kernel1: K.KernelSpec, kernel2: K.KernelSpec, t: float = 2.0,
                         probes=None, *, tol: float = 1e-10) -> ContractionResult:
    """int dz h1_t(x, z) h2_t(y, z) at probe points (x, y) in (-2, 2)^(p+q-2).

    h_t vanishes once a coordinate reaches t, so the default t = 2 keeps the
    whole probe box inside the support.  For p = q = 1 there is nothing to
    probe and the single value is ||h_t||^2-like.
    """
    p, q = kernel1.k, kernel2.k
    if p > 2 or q > 2:
        raise NotImplementedError("contractions are implemented for orders up to 2")
    if probes is None:
        probes = probe_points(p + q - 2, 16 if p + q > 2 else 1)
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    vals = np.array([_contraction_at(kernel1, kernel2, t, pr[: p - 1], pr[p - 1:], tol)[0]
                     for pr in probes])
    return ContractionResult(vals, probes, float(np.max(np.abs(vals))), float(np.min(vals)))


TAGS = ("S1", "S2", "L", "F")


@dataclass(frozen=True)
class Component:
    config: C.ChaosConfig
    tag: str
    filt: Optional[FF.FilterSpec] = None
    name: str = ""

    def __post_init__(self):
        if self.tag not in TAGS:
            raise ValueError(f"tag must be one of {TAGS}")
        cfg = self.config
        if self.tag in ("S1", "S2"):
            if not cfg.is_finite:
                raise ValueError(f"{self.tag} components need summable (finite) coefficients")
            if (self.tag == "S1") != (cfg.k == 1):
                raise ValueError("S1 components have order 1, S2 components order >= 2")
        if self.tag in ("L", "F") and cfg.is_finite:
            raise ValueError(f"{self.tag} components need a kernel")
        if (self.tag == "F") != (self.filt is not None):
            raise ValueError("exactly the F components carry a filter")
        if self.filt is not None:
            FF.check_beta(cfg.kernel, self.filt.beta)

    @property
    def hurst(self) -> float:
        if self.tag in ("S1", "S2"):
            return 0.5
        if self.tag == "L":
            return K.hurst(self.config.kernel)
        return FF.filtered_hurst(self.config.kernel, self.filt.beta)


def _component_sums(comp: Component, e: np.ndarray, e_start: int, N: int) -> np.ndarray:
    """Normalized sums over n = 1..N from a shared noise window starting at index e_start."""
    cfg, M = comp.config, comp.config.M
    L = comp.filt.length if comp.filt is not None else 0
    # X(n) for n = 1 - L .. N needs eps from 1 - L - M .. N - 1
    first = 1 - L - M
    sl = e[..., first - e_start: N - e_start]
    X = C.simulate(cfg, N + L, C.default_mode(cfg), eps=sl)
    if comp.filt is not None:
        X = FF.apply_filter(X, comp.filt, return_index=False)
    return X.sum(axis=-1) / N ** comp.hurst


def multivariate_mixed_check(components: Sequence[Component], N: int, R: int, *, seed: int = None,
                             batch: int = 128, threshold: float = None) -> dict:
    """Joint ensemble of normalized sums on one noise; S2-block correlations should vanish."""
    comps = list(components)
    if not comps:
        raise ValueError("no components")
    noise = comps[0].config.noise if seed is None else C.NoiseSpec(comps[0].config.noise.law, seed)
    start = min(1 - c.config.M - (c.filt.length if c.filt else 0) for c in comps)
    _check_draws(R, N - start, DEFAULT_MAX_DRAWS)
    sums = []
    for s in range(0, R, batch):
        streams = range(s, min(s + batch, R))
        e = _noise_batch(noise, streams, start, N)
        sums.append(np.stack([_component_sums(c, e, start, N) for c in comps], axis=-1))
    S = np.concatenate(sums)
    names = [c.name or f"{c.tag}{i}" for i, c in enumerate(comps)]
    threshold = 3 / math.sqrt(R) if threshold is None else threshold
    report = {"components": names, "tags": [c.tag for c in comps], "R": R, "N": N,
              "seed": noise.seed, "threshold": threshold, "pairs": [], "degenerate": len(comps) < 2}
    if len(comps) < 2:
        report["passed"] = True
        return report
    corr = np.corrcoef(S, rowvar=False)
    ok = True
    for i in range(len(comps)):
        for j in range(i + 1, len(comps)):
            s2_pair = (comps[i].tag == "S2") != (comps[j].tag == "S2")
            passed = bool(abs(corr[i, j]) < threshold) if s2_pair else None
            ok = ok and (passed is not False)
            report["pairs"].append({"a": names[i], "b": names[j], "corr": float(corr[i, j]),
                                    "independent_in_limit": s2_pair, "passed": passed})
    report["passed"] = ok
    report["samples"] = S
    return report


# ---------------------------------------------------------------------------
# reports


def make_report(experiment: str, params: dict, seeds, metrics: dict, criteria: dict) -> dict:
    return {"schema": SCHEMA_VERSION, "experiment": experiment, "params": params,
            "seeds": seeds, "metrics": metrics,
            "criteria": {k: bool(v) for k, v in criteria.items()},
            "passed": all(bool(v) for v in criteria.values()),
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_report(path, report: dict) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(report), fh, indent=2, sort_keys=True)
        fh.write("\n")
