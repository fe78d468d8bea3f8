"""Truncated discrete chaos processes and their exact second-order structure.

    X(n) = sum' a(i_1, ..., i_k) eps_{n-i_1} ... eps_{n-i_k},   a(i) = g(i) L(i),

where the primed sum runs over distinct indices in (0, M]^k.  The
autocovariance is gamma(n) = k! sum' a~(i) a~(i + |n| 1) with a~ the symmetrization
of a.

Noise is anchored at index 0: values eps_j for j >= 0 come from a forward
stream and values for j < 0 from a backward stream, both derived from
(seed, stream_id).  Any window of noise indices is therefore the same whatever
M or N a caller asks for.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import fft as sfft
from scipy import signal, special

from . import kernels as K


class ResourceCapError(MemoryError):
    """A coefficient grid or ensemble would exceed its configured size cap."""


class NotSRDError(ValueError):
    """The autocovariance of the configuration is not absolutely summable."""


# ---------------------------------------------------------------------------
# noise


LAWS = ("gaussian", "rademacher", "uniform")


@dataclass(frozen=True)
class NoiseSpec:
    """i.i.d. mean-zero, unit-variance noise with a splittable seed."""
    law: str = "gaussian"
    seed: int = 0
    stream_id: int = 0

    def __post_init__(self):
        if self.law not in LAWS:
            raise ValueError(f"noise law must be one of {LAWS}, got {self.law!r}")

    def substream(self, stream_id: int) -> "NoiseSpec":
        return replace(self, stream_id=int(stream_id))


def _generator(noise: NoiseSpec, direction: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(noise.seed), spawn_key=(int(noise.stream_id), direction))
    return np.random.Generator(np.random.PCG64(ss))


def _draw(rng: np.random.Generator, law: str, n: int) -> np.ndarray:
    if law == "gaussian":
        return rng.standard_normal(n)
    if law == "rademacher":
        return np.where(rng.random(n) < 0.5, -1.0, 1.0)
    return rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), n)


def noise_window(noise: NoiseSpec, start: int, stop: int) -> np.ndarray:
    """eps_j for start <= j < stop."""
    if stop <= start:
        return np.zeros(0)
    parts = []
    if start < 0:
        back = _draw(_generator(noise, 1), noise.law, -start)  # eps_{-1}, eps_{-2}, ...
        parts.append(back[::-1][: min(stop, 0) - start])
    if stop > 0:
        fwd = _draw(_generator(noise, 0), noise.law, stop)
        parts.append(fwd[max(start, 0):])
    return np.concatenate(parts)


# ---------------------------------------------------------------------------
# perturbations


@dataclass(frozen=True)
class Identity:
    bound: float = 1.0


@dataclass(frozen=True)
class RationalDecay:
    """L(i) = 1 + c / (i_1 + ... + i_k)."""
    c: float = 1.0


@dataclass(frozen=True)
class CustomPerturbation:
    evaluator: Callable
    bound: float


def perturbation_values(pert, idx: np.ndarray) -> np.ndarray:
    """L on integer points of shape (..., k)."""
    if isinstance(pert, Identity):
        return np.ones(idx.shape[:-1])
    if isinstance(pert, RationalDecay):
        return 1.0 + pert.c / idx.sum(axis=-1)
    return np.asarray(pert.evaluator(idx), dtype=float)


def perturbation_bound(pert, k: int) -> float:
    if isinstance(pert, Identity):
        return 1.0
    if isinstance(pert, RationalDecay):
        return 1.0 + abs(pert.c) / k
    return float(pert.bound)


def certify_perturbation(pert, k: int, *, n_scale: int = 10**6, samples: int = 200,
                         tol: float = 1e-3, seed: int = 0) -> bool:
    """Sampled check that L is bounded and L([n x] + B) is close to 1 for large n."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.1, 10.0, size=(samples, k))
    shift = rng.integers(0, 5, size=(samples, k))
    idx = np.floor(n_scale * x) + shift + 1
    vals = perturbation_values(pert, idx)
    small = perturbation_values(pert, rng.integers(1, 50, size=(samples, k)).astype(float))
    bound = perturbation_bound(pert, k)
    return bool(np.all(np.abs(vals - 1) < tol) and np.all(np.abs(small) <= bound * (1 + 1e-12)))


# ---------------------------------------------------------------------------
# configuration and coefficients


DEFAULT_MAX_ELEMENTS = 50_000_000


@dataclass(frozen=True)
class ChaosConfig:
    """A truncated discrete chaos process.

    Either ``kernel`` (coefficients g(i) L(i) on (0, M]^k) or ``coefficients``
    (an explicit array of shape (M,)*k indexed from 1) must be given.
    """
    kernel: Optional[K.KernelSpec] = None
    M: int = 100
    perturbation: object = field(default_factory=Identity)
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    coefficients: Optional[np.ndarray] = field(default=None, compare=False)
    max_elements: int = DEFAULT_MAX_ELEMENTS

    def __post_init__(self):
        if (self.kernel is None) == (self.coefficients is None):
            raise ValueError("give exactly one of kernel or coefficients")
        if self.coefficients is not None:
            c = np.asarray(self.coefficients, dtype=float)
            if c.ndim < 1 or len(set(c.shape)) != 1:
                raise ValueError("explicit coefficients must be a cube (M,)*k")
            object.__setattr__(self, "coefficients", c)
            object.__setattr__(self, "M", c.shape[0])
        if self.M < self.k:
            raise ValueError(f"M={self.M} leaves no off-diagonal tuple for k={self.k}")

    @property
    def k(self) -> int:
        return self.kernel.k if self.kernel is not None else self.coefficients.ndim

    @property
    def is_finite(self) -> bool:
        return self.kernel is None

    def with_noise(self, noise: NoiseSpec) -> "ChaosConfig":
        return replace(self, noise=noise)


def finite_config(coefficients, noise: NoiseSpec = None) -> ChaosConfig:
    """Config from an explicit cube, or from a dict {(i_1, .., i_k): a} with 1-based indices."""
    if isinstance(coefficients, dict):
        keys = [tuple(int(v) for v in np.atleast_1d(key)) for key in coefficients]
        if not keys or len({len(key) for key in keys}) != 1:
            raise ValueError("coefficient indices must be non-empty tuples of one length")
        if min(min(key) for key in keys) < 1:
            raise ValueError("coefficient indices start at 1")
        k = len(keys[0])
        M = max(k, max(max(key) for key in keys))
        cube = np.zeros((M,) * k)
        for key, v in zip(keys, coefficients.values()):
            cube[tuple(i - 1 for i in key)] = float(v)
        coefficients = cube
    return ChaosConfig(coefficients=np.asarray(coefficients, dtype=float),
                       noise=noise or NoiseSpec())


@dataclass(frozen=True)
class CoefficientGrid:
    a: np.ndarray
    sym: np.ndarray
    tail_bound: float
    envelope_total: float

    @property
    def k(self) -> int:
        return self.a.ndim

    @property
    def M(self) -> int:
        return self.a.shape[0]


def symmetrize_array(a: np.ndarray) -> np.ndarray:
    perms = list(itertools.permutations(range(a.ndim)))
    out = np.zeros_like(a)
    for p in perms:
        out += np.transpose(a, p)
    return out / len(perms)


def _power_sum(p: float, M: int) -> float:
    """sum_{i=1}^M i^p, exact through Hurwitz zeta when p < -1."""
    if p < -1:
        return float(special.zeta(-p, 1) - special.zeta(-p, M + 1))
    return float(np.sum(np.arange(1, M + 1, dtype=float) ** p))


def envelope_square_sums(env: K.Envelope, M: int, scale: float = 1.0):
    """(sum over all i > 0, sum outside (0, M]^k) of (scale * env(i))^2."""
    total, inside = 0.0, 0.0
    for a in env.terms:
        for b in env.terms:
            ps = np.asarray(a.gamma) + np.asarray(b.gamma)
            c = a.coeff * b.coeff
            total += c * float(np.prod(special.zeta(-ps, 1)))
            inside += c * float(np.prod([_power_sum(p, M) for p in ps]))
    s2 = scale ** 2
    return s2 * total, max(s2 * (total - inside), 0.0)


def _check_cap(M: int, k: int, cap: int):
    if float(M) ** k > cap:
        raise ResourceCapError(f"grid of {M}^{k} elements exceeds the cap of {cap}")


def build_coefficients(config: ChaosConfig) -> CoefficientGrid:
    k, M = config.k, config.M
    _check_cap(M, k, config.max_elements)
    if config.is_finite:
        a = np.array(config.coefficients, dtype=float)
        return CoefficientGrid(a, symmetrize_array(a), 0.0, float(np.sum(a ** 2)))
    spec = config.kernel
    idx = np.stack(np.meshgrid(*([np.arange(1, M + 1, dtype=float)] * k), indexing="ij"), axis=-1)
    a = K.evaluate(spec, idx) * perturbation_values(config.perturbation, idx)
    a = np.asarray(a, dtype=float).reshape((M,) * k)
    sym = a if spec.symmetric else symmetrize_array(a)
    if spec.envelope is not None:
        total, tail = envelope_square_sums(spec.envelope, M, perturbation_bound(config.perturbation, k))
    else:
        total, tail = float("nan"), float("inf")
    return CoefficientGrid(a, sym, tail, total)


# ---------------------------------------------------------------------------
# simulation


def _lagged_sum(v: np.ndarray, e: np.ndarray, M: int, N: int) -> np.ndarray:
    """S(n) = sum_{i=1}^M v(i) e_{n-i} for n = 1..N, with e indexed from 1-M.

    ``v`` and ``e`` may carry leading batch axes.
    """
    if M * N <= 2_000_000 and v.ndim == 1 and e.ndim == 1:
        full = np.convolve(e, v)
    else:
        full = signal.fftconvolve(e, np.broadcast_to(v, e.shape[:-1] + v.shape[-1:]), axes=-1)
    return full[..., M - 1: M - 1 + N]


def _window(e: np.ndarray, M: int, N: int) -> np.ndarray:
    """E[..., n-1, i-1] = eps_{n-i}."""
    view = np.lib.stride_tricks.sliding_window_view(e, M, axis=-1)[..., :N, :]
    return view[..., ::-1]


def _simulate_naive(a: np.ndarray, e: np.ndarray, N: int, chunk: int = 4096) -> np.ndarray:
    k, M = a.ndim, a.shape[0]
    if k == 1:
        return _lagged_sum(a, e, M, N)
    if k == 2:
        off = a.copy()
        np.fill_diagonal(off, 0.0)
        out = np.empty(e.shape[:-1] + (N,))
        for s in range(0, N, chunk):
            n = min(chunk, N - s)
            E = _window(e[..., s: s + n + M - 1], M, n)
            out[..., s: s + n] = np.einsum("...ni,ij,...nj->...n", E, off, E)
        return out
    E = _window(e, M, N)
    out = np.zeros(e.shape[:-1] + (N,))
    for i in itertools.product(range(M), repeat=k):
        if len(set(i)) < k or a[i] == 0:
            continue
        term = a[i]
        for j in i:
            term = term * E[..., j]
        out += term
    return out


@lru_cache(maxsize=16)
def set_partitions(k: int):
    """All set partitions of range(k) as tuples of blocks."""
    def rec(items):
        if not items:
            yield ()
            return
        first, rest = items[0], items[1:]
        for part in rec(rest):
            for i in range(len(part)):
                yield part[:i] + ((first,) + part[i],) + part[i + 1:]
            yield ((first,),) + part
    return tuple(rec(tuple(range(k))))


def partition_weight(part) -> int:
    """Moebius weight prod_b (-1)^(|b|-1) (|b|-1)! of the partition lattice."""
    return int(np.prod([(-1) ** (len(b) - 1) * math.factorial(len(b) - 1) for b in part]))


def product_factors(config: ChaosConfig) -> list:
    spec = config.kernel
    if config.is_finite or not isinstance(spec.form, K.Product):
        raise ValueError("fast_product mode needs a Product-form kernel")
    if not isinstance(config.perturbation, Identity):
        raise ValueError("fast_product mode needs the Identity perturbation (separable coefficients)")
    i = np.arange(1, config.M + 1, dtype=float)
    return [i ** g for g in spec.form.gamma]


def _simulate_fast(factors, e: np.ndarray, N: int) -> np.ndarray:
    k, M = len(factors), len(factors[0])
    cache = {}
    out = 0.0
    for part in set_partitions(k):
        term = partition_weight(part)
        for b in part:
            key = tuple(sorted(b))
            if key not in cache:
                v = np.prod([factors[j] for j in key], axis=0)
                cache[key] = _lagged_sum(v, e ** len(key), M, N)
            term = term * cache[key]
        out = out + term
    return out


def simulate(config: ChaosConfig, N: int, mode: str = "naive", *, grid: CoefficientGrid = None,
             noise: NoiseSpec = None, eps: np.ndarray = None) -> np.ndarray:
    """X(1), ..., X(N).

    ``eps`` (indices 1-M .. N-1, optionally with leading batch axes) overrides
    the noise drawn from ``noise`` or ``config.noise``.
    """
    if N < 1:
        raise ValueError("path length must be at least 1")
    M = config.M
    if eps is None:
        eps = noise_window(noise or config.noise, 1 - M, N)
    if eps.shape[-1] != N + M - 1:
        raise ValueError(f"noise window must hold {N + M - 1} values")
    if mode == "fast_product":
        return _simulate_fast(product_factors(config), eps, N)
    if mode != "naive":
        raise ValueError(f"unknown simulation mode {mode!r}")
    grid = grid or build_coefficients(config)
    return _simulate_naive(grid.a, eps, N)


def simulate_joint(configs: Sequence[ChaosConfig], N: int, modes=None) -> np.ndarray:
    """Rows X_j(1..N) driven by one shared noise realization."""
    configs = list(configs)
    if not configs:
        raise ValueError("no configurations")
    noise = configs[0].noise
    if any(c.noise != noise for c in configs):
        raise ValueError("all configurations must share one noise spec")
    Mmax = max(c.M for c in configs)
    e = noise_window(noise, 1 - Mmax, N)
    modes = modes or ["naive"] * len(configs)
    rows = [simulate(c, N, m, eps=e[Mmax - c.M:]) for c, m in zip(configs, modes)]
    return np.vstack(rows)


def default_mode(config: ChaosConfig) -> str:
    if (not config.is_finite and isinstance(config.kernel.form, K.Product)
            and isinstance(config.perturbation, Identity)):
        return "fast_product"
    return "naive"


def partial_sum_process(X, H: float, t_grid) -> np.ndarray:
    """Y_N(t) = N^-H sum_{n <= [N t]} X(n), along the last axis of X."""
    if not 0 < H < 1 + 1e-12:
        raise ValueError("H must lie in (0, 1]")
    X = np.asarray(X, dtype=float)
    t = np.asarray(t_grid, dtype=float)
    if np.any((t < 0) | (t > 1)):
        raise ValueError("t_grid must lie in [0, 1]")
    N = X.shape[-1]
    cs = np.concatenate([np.zeros(X.shape[:-1] + (1,)), np.cumsum(X, axis=-1)], axis=-1)
    idx = np.floor(N * t + 1e-9).astype(int)
    return cs[..., idx] / N ** H


# ---------------------------------------------------------------------------
# exact autocovariance


def xcorr(a: np.ndarray, b: np.ndarray, n_max: int) -> np.ndarray:
    """r(n) = sum_i a(i) b(i + n) for n = 0..n_max (zero beyond the supports)."""
    la, lb = len(a), len(b)
    out = np.zeros(n_max + 1)
    top = min(n_max, lb - 1)
    if top < 0:
        return out
    if la * (top + 1) <= 4_000_000:
        for n in range(top + 1):
            m = min(la, lb - n)
            if m > 0:
                out[n] = np.dot(a[:m], b[n:n + m])
        return out
    L = sfft.next_fast_len(la + lb)
    r = sfft.irfft(sfft.rfft(a[::-1], L) * sfft.rfft(b, L), L)
    out[: top + 1] = r[la - 1: la + top]
    return out


def _cross_dense(A: np.ndarray, B: np.ndarray, n_max: int) -> np.ndarray:
    """sum_i A(i) B(i + n 1) over the box, for n = 0..n_max."""
    k, M = A.ndim, A.shape[0]
    if k == 1:
        return xcorr(A, B, n_max)
    out = np.zeros(n_max + 1)
    top = min(n_max, M - 1)
    if k > 2 or M ** k * (top + 1) <= 20_000_000:
        for n in range(top + 1):
            sl_a = (slice(0, M - n),) * k
            sl_b = (slice(n, M),) * k
            out[n] = np.sum(A[sl_a] * B[sl_b])
        return out
    # k = 2: each diagonal j - i = d is a 1-D sequence and n shifts along it
    L = sfft.next_fast_len(2 * M)
    acc = np.zeros(L // 2 + 1, dtype=complex)
    for d in range(-(M - 1), M):
        da, db = np.diagonal(A, d), np.diagonal(B, d)
        acc += np.conj(sfft.rfft(da, L)) * sfft.rfft(db, L)
    r = sfft.irfft(acc, L)
    out[: top + 1] = r[: top + 1]
    return out


def _offdiag(a: np.ndarray) -> np.ndarray:
    out = a.copy()
    k = a.ndim
    if k < 2:
        return out
    idx = np.indices(a.shape)
    repeated = np.zeros(a.shape, dtype=bool)
    for p, q in itertools.combinations(range(k), 2):
        repeated |= idx[p] == idx[q]
    out[repeated] = 0.0
    return out


def _tail_integral(p: float, q: float, M: float, n: np.ndarray) -> np.ndarray:
    """int_M^inf x^p (x + n)^q dx."""
    c = -p - q - 1
    return M ** (-c) / c * special.hyp2f1(-q, c, c + 1, -n / M)


def rho_separable(p: float, q: float, M: int, n_max: int, tail: str = "clip"):
    """sum_i i^p (i + n)^q for n = 0..n_max with an error bound.

    ``clip`` keeps i + n <= M.  ``analytic`` sums over all i >= 1: exactly up
    to i = M, then an Euler-Maclaurin tail.
    """
    i = np.arange(1, M + 1, dtype=float)
    if tail == "clip":
        return xcorr(i ** p, i ** q, n_max), np.zeros(n_max + 1)
    j = np.arange(1, M + n_max + 1, dtype=float)
    head = xcorr(i ** p, j ** q, n_max)
    n = np.arange(n_max + 1, dtype=float)
    f = M ** p * (M + n) ** q
    f1 = p * M ** (p - 1) * (M + n) ** q + q * M ** p * (M + n) ** (q - 1)
    f3 = (p * (p - 1) * (p - 2) * M ** (p - 3) * (M + n) ** q
          + 3 * p * (p - 1) * q * M ** (p - 2) * (M + n) ** (q - 1)
          + 3 * p * q * (q - 1) * M ** (p - 1) * (M + n) ** (q - 2)
          + q * (q - 1) * (q - 2) * M ** p * (M + n) ** (q - 3))
    rest = _tail_integral(p, q, M, n) - f / 2 - f1 / 12 + f3 / 720
    return head + rest, np.abs(f3) / 720


def _acf_separable(config: ChaosConfig, n_max: int, tail: str):
    g = np.asarray(config.kernel.form.gamma)
    k, M = len(g), config.M
    perms = [np.asarray(p) for p in itertools.permutations(range(k))]
    cache = {}

    def rho(p, q):
        key = (round(p, 14), round(q, 14))
        if key not in cache:
            cache[key] = rho_separable(p, q, M, n_max, tail)
        return cache[key]

    total = np.zeros(n_max + 1)
    err = np.zeros(n_max + 1)
    for part in set_partitions(k):
        w = partition_weight(part)
        for tau in perms:
            for sig in perms:
                term, upper, lower = np.ones(n_max + 1), np.ones(n_max + 1), np.ones(n_max + 1)
                for b in part:
                    v, e = rho(g[tau[list(b)]].sum(), g[sig[list(b)]].sum())
                    term = term * v
                    upper = upper * (np.abs(v) + e)
                    lower = lower * np.abs(v)
                total += w * term
                err += abs(w) * (upper - lower)
    scale = math.factorial(k) / math.factorial(k) ** 2
    return scale * total, scale * err


@dataclass(frozen=True)
class AcfResult:
    gamma: np.ndarray
    trunc_bound: np.ndarray
    route: str
    tail: str


def acf_exact(config: ChaosConfig, n_max: int, *, tail: str = "clip", route: str = "auto",
              grid: CoefficientGrid = None) -> AcfResult:
    """gamma(0..n_max) = k! sum' a~(i) a~(i + n 1).

    ``tail="clip"`` is the truncated process: i + n 1 must stay in the grid and
    ``trunc_bound`` bounds the distance to the untruncated autocovariance via
    the envelope.  ``tail="analytic"`` (Product kernels, Identity perturbation)
    returns the untruncated autocovariance with the Euler-Maclaurin remainder
    as its bound.
    """
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    k = config.k
    separable = (not config.is_finite and isinstance(config.kernel.form, K.Product)
                 and isinstance(config.perturbation, Identity))
    if route == "auto":
        route = "separable" if separable else "dense"
    if tail == "analytic" and route != "separable":
        raise ValueError("the analytic tail is available on the separable route only")
    if route == "separable":
        if not separable:
            raise ValueError("separable route needs a Product kernel with Identity perturbation")
        gam, bound = _acf_separable(config, n_max, tail)
        if tail == "clip":
            bound = _truncation_bound(config, n_max)
        return AcfResult(gam, bound, route, tail)
    grid = grid or build_coefficients(config)
    s = _offdiag(grid.sym)
    gam = math.factorial(k) * _cross_dense(s, s, n_max)
    bound = np.zeros(n_max + 1) if config.is_finite else _truncation_bound(config, n_max, grid)
    return AcfResult(gam, bound, "dense", tail)


def _truncation_bound(config: ChaosConfig, n_max: int, grid: CoefficientGrid = None) -> np.ndarray:
    # |gamma_inf(n) - gamma_M(n)| <= k! sum over pairs leaving the box of |a~ a~|,
    # at most 2 k! sqrt(S_total S_tail) by Cauchy-Schwarz
    if config.is_finite:
        return np.zeros(n_max + 1)
    env = config.kernel.envelope
    total, tail = envelope_square_sums(env, config.M, perturbation_bound(config.perturbation, config.k))
    return np.full(n_max + 1, 2 * math.factorial(config.k) * math.sqrt(total * tail))


def symmetric_c(config_or_kernel) -> float:
    spec = config_or_kernel.kernel if isinstance(config_or_kernel, ChaosConfig) else config_or_kernel
    return K.default_c(K.symmetrize(spec)).value


def acf_asymptote(config: ChaosConfig, n, c_sym: float = None):
    """k! C_g~ n^(2H - 2)."""
    if config.is_finite:
        raise NotSRDError("finite-support coefficients have no power-law asymptote")
    spec = config.kernel
    c = symmetric_c(spec) if c_sym is None else c_sym
    H = K.hurst(spec)
    return math.factorial(spec.k) * c * np.asarray(n, dtype=float) ** (2 * H - 2)


def variance_asymptote(config: ChaosConfig, N, c_sym: float = None):
    """k! C_g~ N^(2H) / (H (2H - 1))."""
    spec = config.kernel
    c = symmetric_c(spec) if c_sym is None else c_sym
    H = K.hurst(spec)
    return math.factorial(spec.k) * c / (H * (2 * H - 1)) * np.asarray(N, dtype=float) ** (2 * H)


def long_run_variance(config: ChaosConfig, *, tol: float = 1e-12) -> float:
    """sigma^2 = sum_n gamma(n) for configurations with summable autocovariance."""
    if not config.is_finite:
        H = K.hurst(config.kernel)
        raise NotSRDError(f"not SRD: gamma(n) decays like n^{2 * H - 2:.3g} with 2H-2 > -1, "
                          "so sum |gamma(n)| diverges")
    grid = build_coefficients(config)
    s = _offdiag(grid.sym)
    # finite support: gamma(n) = 0 once n >= M
    absolute = math.factorial(config.k) * _cross_dense(np.abs(s), np.abs(s), config.M)
    if not np.isfinite(absolute.sum()):
        raise NotSRDError("autocovariance is not absolutely summable on the grid")
    gam = math.factorial(config.k) * _cross_dense(s, s, config.M)
    sigma2 = gam[0] + 2 * gam[1:].sum()
    if sigma2 <= tol:
        raise NotSRDError(f"long-run variance {sigma2:.3g} is not positive")
    return float(sigma2)


def exact_partial_sum_variance(gamma, N: int) -> float:
    """Var(sum_{n=1}^N X(n)) = sum_{|n|<N} (N - |n|) gamma(n)."""
    gamma = np.asarray(gamma, dtype=float)
    if len(gamma) < N:
        raise ValueError(f"need gamma at lags 0..{N - 1}, have {len(gamma)}")
    n = np.arange(1, N)
    return float(N * gamma[0] + 2 * np.dot(N - n, gamma[1:N]))


def partial_sum_variances(gamma, Ns) -> np.ndarray:
    """exact_partial_sum_variance for many N from one lag sequence."""
    gamma = np.asarray(gamma, dtype=float)
    Ns = np.asarray(Ns, dtype=int)
    if len(gamma) < Ns.max():
        raise ValueError(f"need gamma at lags 0..{Ns.max() - 1}, have {len(gamma)}")
    n = np.arange(len(gamma))
    c0 = np.concatenate([[0.0], np.cumsum(gamma[1:])])
    c1 = np.concatenate([[0.0], np.cumsum(n[1:] * gamma[1:])])
    return Ns * gamma[0] + 2 * (Ns * c0[Ns - 1] - c1[Ns - 1])


def _pad_to(a: np.ndarray, M: int) -> np.ndarray:
    if a.shape[0] == M:
        return a
    out = np.zeros((M,) * a.ndim)
    out[tuple(slice(0, s) for s in a.shape)] = a
    return out


def cross_acf(cp: ChaosConfig, cq: ChaosConfig, n_max: int) -> np.ndarray:
    """gamma_{p,q}(n) = E X_p(m) X_q(m + n) for n = -n_max..n_max.

    Exactly zero when the orders differ.
    """
    if cp.k != cq.k:
        return np.zeros(2 * n_max + 1)
    M = max(cp.M, cq.M)
    sp = _pad_to(_offdiag(build_coefficients(cp).sym), M)
    sq = _pad_to(_offdiag(build_coefficients(cq).sym), M)
    f = math.factorial(cp.k)
    pos = f * _cross_dense(sp, sq, n_max)
    neg = f * _cross_dense(sq, sp, n_max)   # gamma_{p,q}(-n) = gamma_{q,p}(n)
    return np.concatenate([neg[:0:-1], pos])


# ---------------------------------------------------------------------------
# export


def write_path_csv(path, X) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "X"])
        for n, x in enumerate(np.asarray(X), start=1):
            w.writerow([n, repr(float(x))])


def write_acf_csv(path, gamma, asymptote, trunc_bound) -> None:
    gamma = np.asarray(gamma)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lag", "gamma_exact", "gamma_asymptote", "ratio", "trunc_bound"])
        for n in range(len(gamma)):
            asym = float(asymptote[n])
            ratio = gamma[n] / asym if asym != 0 and np.isfinite(asym) else float("nan")
            w.writerow([n, repr(float(gamma[n])), repr(asym), repr(float(ratio)),
                        repr(float(trunc_bound[n]))])
