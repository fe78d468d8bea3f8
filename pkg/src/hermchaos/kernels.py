"""Generalized Hermite kernels g and their integrated kernels h_t.

A kernel is a function on the open positive orthant of R^k which is homogeneous
of degree alpha, with alpha in (-(k+1)/2, -k/2).  Every built-in form carries an
envelope: a finite sum of products c * prod x_j^gamma_j with each gamma_j in
(-1, -1/2) and sum gamma_j = alpha.  The envelope certifies integrability and
gives rigorous tail bounds for the truncated sums and integrals elsewhere in
the package.

The integrated kernel is

    h_t(x) = int_0^t g(s*1 - x) 1{s*1 > x} ds,

and the constant C_g = int g(x) g(1 + x) dx fixes its norm through
||h_t||^2 = t^(2H) C_g / (H (2H - 1)) with H = alpha + k/2 + 1.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import special, stats

from ._quad import adaptive, graded_half_line_rule, singular_start_integral


class KernelDomainError(ValueError):
    """A kernel was evaluated outside the open positive orthant."""


class KernelValidationError(ValueError):
    """A kernel spec failed one of its defining conditions."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


# ---------------------------------------------------------------------------
# envelopes


@dataclass(frozen=True)
class EnvelopeTerm:
    coeff: float
    gamma: tuple

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            return self.coeff * np.prod(x ** np.asarray(self.gamma), axis=-1)


@dataclass(frozen=True)
class Envelope:
    """Finite sum of non-symmetric Hermite kernels dominating |g|."""

    terms: tuple

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1])
        for term in self.terms:
            out = out + term(x)
        return out

    @property
    def gamma_min(self) -> float:
        return min(min(t.gamma) for t in self.terms)

    @property
    def gamma_max(self) -> float:
        return max(max(t.gamma) for t in self.terms)

    def cross_integral(self, other: "Envelope" = None) -> float:
        """Closed form of int env(x) other(1 + x) dx over the orthant."""
        other = self if other is None else other
        total = 0.0
        for a in self.terms:
            for b in other.terms:
                ga, gb = np.asarray(a.gamma), np.asarray(b.gamma)
                total += a.coeff * b.coeff * float(np.prod(special.beta(ga + 1, -ga - gb - 1)))
        return total

    def permuted(self, perm) -> "Envelope":
        return Envelope(tuple(EnvelopeTerm(t.coeff, tuple(t.gamma[p] for p in perm))
                              for t in self.terms))

    def to_list(self):
        return [{"coeff": t.coeff, "gamma": list(t.gamma)} for t in self.terms]

    @classmethod
    def from_list(cls, items):
        return cls(tuple(EnvelopeTerm(float(d["coeff"]), tuple(float(g) for g in d["gamma"]))
                         for d in items))


def _merge_terms(terms) -> Envelope:
    merged: dict = {}
    for t in terms:
        key = tuple(round(g, 15) for g in t.gamma)
        merged[key] = merged.get(key, 0.0) + t.coeff
    return Envelope(tuple(EnvelopeTerm(c, g) for g, c in merged.items()))


# ---------------------------------------------------------------------------
# kernel forms


@dataclass(frozen=True)
class Product:
    """g(x) = prod x_j^gamma_j."""
    gamma: tuple


@dataclass(frozen=True)
class NormPower:
    """g(x) = ||x||^alpha."""


@dataclass(frozen=True)
class RatioProduct:
    """g(x) = prod x_j^a_j / sum x_j^b."""
    a: tuple
    b: float


@dataclass(frozen=True)
class MaxCombo:
    """g(x) = max(prod x_j / sum x_j^(k - alpha), prod x_j^(alpha/k))."""


@dataclass(frozen=True)
class Custom:
    """User kernel; ``evaluator`` maps an array of shape (..., k) to shape (...)."""
    evaluator: Callable
    attested_continuous: bool = False


@dataclass(frozen=True)
class Tensor:
    """g(x, y) = g_left(x) g_right(y)."""
    left: "KernelSpec"
    right: "KernelSpec"


Form = Union[Product, NormPower, RatioProduct, MaxCombo, Custom, Tensor]


@dataclass(frozen=True)
class KernelSpec:
    k: int
    alpha: float
    form: Form
    envelope: Optional[Envelope]
    symmetric: bool = False

    def __call__(self, x):
        return evaluate(self, x)

    @property
    def hurst(self) -> float:
        return hurst(self)


def _inherently_symmetric(form) -> bool:
    if isinstance(form, (NormPower, MaxCombo)):
        return True
    if isinstance(form, Product):
        return len(set(form.gamma)) == 1
    if isinstance(form, RatioProduct):
        return len(set(form.a)) == 1
    return False


def product(gamma: Sequence[float], symmetric: bool = False) -> KernelSpec:
    gamma = tuple(float(g) for g in np.atleast_1d(gamma))
    env = Envelope((EnvelopeTerm(1.0, gamma),))
    spec = KernelSpec(len(gamma), float(sum(gamma)), Product(gamma), env, False)
    return symmetrize(spec) if symmetric else spec


def norm_power(k: int, alpha: float) -> KernelSpec:
    # ||x|| >= sqrt(k) (prod x_j)^(1/k) by AM-GM, and alpha < 0
    env = Envelope((EnvelopeTerm(k ** (alpha / 2), (alpha / k,) * k),))
    return KernelSpec(int(k), float(alpha), NormPower(), env, True)


def _ratio_sphere_bound(k: int, b: float) -> float:
    # sup over the unit sphere of 1 / sum x_j^b
    return 1.0 if b <= 2 else k ** (b / 2 - 1)


def ratio_product(a: Sequence[float], b: float) -> KernelSpec:
    a = tuple(float(v) for v in np.atleast_1d(a))
    k = len(a)
    alpha = sum(a) - b
    # prod x_j^a_j <= ||x||^sum(a); then the norm bound as for NormPower
    c = _ratio_sphere_bound(k, b) * k ** (alpha / 2)
    env = Envelope((EnvelopeTerm(c, (alpha / k,) * k),))
    return KernelSpec(k, float(alpha), RatioProduct(a, float(b)), env, len(set(a)) == 1)


def max_combo(k: int, alpha: float) -> KernelSpec:
    c_ratio = _ratio_sphere_bound(k, k - alpha) * k ** (alpha / 2)
    env = Envelope((EnvelopeTerm(max(c_ratio, 1.0), (alpha / k,) * k),))
    return KernelSpec(int(k), float(alpha), MaxCombo(), env, True)


def custom(k: int, alpha: float, evaluator: Callable, envelope=None,
           attested_continuous: bool = False) -> KernelSpec:
    if envelope is not None and not isinstance(envelope, Envelope):
        envelope = Envelope.from_list(envelope)
    return KernelSpec(int(k), float(alpha), Custom(evaluator, attested_continuous), envelope, False)


def hurst(spec: KernelSpec) -> float:
    return spec.alpha + spec.k / 2 + 1


# ---------------------------------------------------------------------------
# evaluation


def _as_points(spec: KernelSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 and spec.k == 1:
        x = x[None]
    if x.shape[-1] != spec.k:
        raise ValueError(f"points must have trailing dimension {spec.k}, got shape {x.shape}")
    return x


def _raw(spec: KernelSpec, x: np.ndarray) -> np.ndarray:
    form = spec.form
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        if isinstance(form, Product):
            return np.prod(x ** np.asarray(form.gamma), axis=-1)
        if isinstance(form, NormPower):
            return np.linalg.norm(x, axis=-1) ** spec.alpha
        if isinstance(form, RatioProduct):
            return np.prod(x ** np.asarray(form.a), axis=-1) / np.sum(x ** form.b, axis=-1)
        if isinstance(form, MaxCombo):
            k, a = spec.k, spec.alpha
            ratio = np.prod(x, axis=-1) / np.sum(x ** (k - a), axis=-1)
            return np.maximum(ratio, np.prod(x ** (a / k), axis=-1))
        if isinstance(form, Tensor):
            k1 = form.left.k
            return _eval_unchecked(form.left, x[..., :k1]) * _eval_unchecked(form.right, x[..., k1:])
        if isinstance(form, Custom):
            return np.asarray(form.evaluator(x), dtype=float)
    raise TypeError(f"unknown kernel form {form!r}")


def _eval_unchecked(spec: KernelSpec, x: np.ndarray) -> np.ndarray:
    if spec.symmetric and not _inherently_symmetric(spec.form):
        perms = list(itertools.permutations(range(spec.k)))
        out = np.zeros(x.shape[:-1])
        for p in perms:
            out = out + _raw(spec, x[..., list(p)])
        return out / len(perms)
    return _raw(spec, x)


def evaluate(spec: KernelSpec, x):
    """g(x) for points x of shape (..., k); every coordinate must be positive."""
    x = _as_points(spec, x)
    if np.any(~(x > 0)):
        raise KernelDomainError("kernel is defined on the open positive orthant only")
    out = _eval_unchecked(spec, x)
    return float(out) if out.ndim == 0 else out


def evaluate_masked(spec: KernelSpec, x) -> np.ndarray:
    """g(x) with the indicator 1{x > 0} folded in: zero off the orthant."""
    x = _as_points(spec, x)
    inside = np.all(x > 0, axis=-1)
    safe = np.where(inside[..., None], x, 1.0)
    return np.where(inside, _eval_unchecked(spec, safe), 0.0)


# ---------------------------------------------------------------------------
# constructions


def symmetrize(spec: KernelSpec) -> KernelSpec:
    """Average g over all argument permutations.  Idempotent."""
    if spec.symmetric:
        return spec
    env = spec.envelope
    if env is not None:
        perms = list(itertools.permutations(range(spec.k)))
        terms = [EnvelopeTerm(t.coeff / len(perms), t.gamma)
                 for p in perms for t in env.permuted(p).terms]
        env = _merge_terms(terms)
    return KernelSpec(spec.k, spec.alpha, spec.form, env, True)


def tensor_product(s1: KernelSpec, s2: KernelSpec) -> KernelSpec:
    k = s1.k + s2.k
    alpha = s1.alpha + s2.alpha
    if not alpha > -(k + 1) / 2:
        raise KernelValidationError(
            f"tensor exponent {alpha:g} is not above -(k+1)/2 = {-(k + 1) / 2:g}")
    if s1.envelope is None or s2.envelope is None:
        env = None
    else:
        env = Envelope(tuple(EnvelopeTerm(a.coeff * b.coeff, a.gamma + b.gamma)
                             for a in s1.envelope.terms for b in s2.envelope.terms))
    if (isinstance(s1.form, Product) and isinstance(s2.form, Product)
            and not s1.symmetric and not s2.symmetric):
        return KernelSpec(k, alpha, Product(s1.form.gamma + s2.form.gamma), env, False)
    return KernelSpec(k, alpha, Tensor(s1, s2), env, False)


# ---------------------------------------------------------------------------
# validation


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def add(self, name, passed, detail=""):
        self.checks.append(Check(name, bool(passed), detail))

    def to_dict(self):
        return {"ok": self.ok,
                "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail}
                           for c in self.checks]}


def validate(spec: KernelSpec, *, seed: int = 0, n_homogeneity: int = 200,
             n_domination: int = 10_000) -> ValidationReport:
    rep = ValidationReport()
    k, alpha = spec.k, spec.alpha
    lo, hi = -(k + 1) / 2, -k / 2
    rep.add("alpha_range", lo < alpha < hi, f"alpha={alpha:g}, need ({lo:g}, {hi:g})")

    form = spec.form
    if isinstance(form, Product):
        g = np.asarray(form.gamma)
        rep.add("product_exponents", bool(np.all((g > -1) & (g < -0.5))),
                f"gamma={list(form.gamma)} must lie in (-1, -1/2)")
        rep.add("product_sum", abs(g.sum() - alpha) < 1e-12, f"sum gamma={g.sum():g}")
    elif isinstance(form, RatioProduct):
        ok = all(a > 0 for a in form.a) and form.b > 0
        rep.add("ratio_parameters", ok, "a_j > 0 and b > 0")
        rep.add("ratio_alpha", abs(sum(form.a) - form.b - alpha) < 1e-12,
                f"sum a - b = {sum(form.a) - form.b:g}")
    elif isinstance(form, Tensor):
        rep.add("tensor_order", form.left.k + form.right.k == k)

    env = spec.envelope
    rep.add("envelope_present", env is not None and len(env.terms) > 0,
            "Custom kernels must declare an envelope" if isinstance(form, Custom) else "")
    if env is not None and env.terms:
        in_range = all(-1 < g < -0.5 for t in env.terms for g in t.gamma)
        rep.add("envelope_exponents", in_range, "each envelope exponent in (-1, -1/2)")
        sums_ok = all(abs(sum(t.gamma) - alpha) < 1e-12 and len(t.gamma) == k for t in env.terms)
        rep.add("envelope_sum", sums_ok, "each envelope term sums to alpha")
        rep.add("envelope_coefficients", all(t.coeff > 0 for t in env.terms))
        bound = env.cross_integral() if in_range else math.inf
        rep.add("condition_b_finite", np.isfinite(bound) and bound > 0,
                f"int |g(x)g(1+x)| <= {bound:.6g}")

    rng = np.random.default_rng(seed)
    x = np.exp(rng.uniform(-3, 3, size=(n_homogeneity, k)))
    try:
        gx = _eval_unchecked(spec, x)
        worst = 0.0
        for lam in (0.5, 2.0, 10.0):
            target = lam ** alpha * gx
            dev = np.abs(_eval_unchecked(spec, lam * x) - target) / (1 + np.abs(target))
            worst = max(worst, float(np.max(dev)))
        rep.add("homogeneity", worst <= 1e-10, f"max scaled deviation {worst:.3g}")
        if env is not None and env.terms:
            y = rng.uniform(0, 10, size=(n_domination, k))
            y = np.where(y > 0, y, 1e-300)
            gy, ey = np.abs(_eval_unchecked(spec, y)), env(y)
            viol = float(np.max(gy - ey * (1 + 1e-12)))
            rep.add("envelope_domination", viol <= 0, f"max excess {max(viol, 0.0):.3g}")
    except Exception as exc:  # a broken evaluator is a validation failure, not a crash
        rep.add("evaluation", False, repr(exc))

    if isinstance(form, Custom):
        rep.add("continuity_attested", form.attested_continuous,
                "a.e. continuity is attested by the user, not checked")
    return rep


def require_valid(spec: KernelSpec, **kw) -> KernelSpec:
    rep = validate(spec, **kw)
    if not rep.ok:
        msg = "; ".join(f"{c.name}: {c.detail}" if c.detail else c.name for c in rep.failures())
        raise KernelValidationError(msg, rep)
    return spec


# ---------------------------------------------------------------------------
# C_g


@dataclass(frozen=True)
class CValue:
    value: float
    error_estimate: float
    method: str


def _c_closed_form(spec: KernelSpec) -> float:
    if not isinstance(spec.form, Product):
        raise ValueError("closed form C_g is available for Product kernels only")
    g = np.asarray(spec.form.gamma)
    if not spec.symmetric:
        return float(np.prod(special.beta(g + 1, -2 * g - 1)))
    perms = list(itertools.permutations(range(spec.k)))
    total = 0.0
    for p in perms:
        gp = g[list(p)]
        total += float(np.prod(special.beta(g + 1, -g - gp - 1)))
    return total / len(perms)


def _c_quad_1d(spec: KernelSpec, panels: int) -> float:
    a = spec.alpha
    g = lambda x: _eval_unchecked(spec, x[..., None])
    # [0, 1]: x^alpha singularity at 0
    head = singular_start_integral(lambda u: g(u) * g(1 + u), np.array(1.0),
                                   1 / (1 + a), panels=panels)
    # [1, inf) through x = 1/w: integrand ~ w^(-2 alpha - 2) at w = 0
    tail = singular_start_integral(
        lambda w: g(1 / w) * g(1 + 1 / w) / w ** 2, np.array(1.0), 1 / (-2 * a - 1), panels=panels)
    return float(head + tail)


def _end_bound(env: Envelope, eps: float, big: float) -> float:
    # mass of env(x) env(1+x) with some coordinate below eps or above big
    total = 0.0
    for a in env.terms:
        for b in env.terms:
            ga, gb = np.asarray(a.gamma), np.asarray(b.gamma)
            full = special.beta(ga + 1, -ga - gb - 1)
            low = eps ** (ga + 1) / (ga + 1)
            high = big ** (ga + gb + 1) / (-ga - gb - 1)
            for j in range(len(ga)):
                others = np.prod(np.delete(full, j))
                total += a.coeff * b.coeff * (low[j] + high[j]) * others
    return float(total)


def _c_quad_2d(spec: KernelSpec, order: int, decades: float, chunk: int = 256) -> float:
    x, w = graded_half_line_rule(decades, 4.0, order)
    total = 0.0
    for s in range(0, len(x), chunk):
        x1 = x[s:s + chunk]
        pts = np.stack(np.broadcast_arrays(x1[:, None], x[None, :]), axis=-1)
        vals = _eval_unchecked(spec, pts) * _eval_unchecked(spec, 1 + pts)
        total += float(w[s:s + chunk] @ vals @ w)
    return total


def _c_monte_carlo(spec: KernelSpec, n: int, seed: int):
    env = spec.envelope
    if env is None:
        raise ValueError("Monte Carlo C_g needs an envelope for its proposal")
    rng = np.random.default_rng(seed)
    terms = env.terms
    weights = np.array([t.coeff ** 2 * np.prod(special.beta(np.asarray(t.gamma) + 1,
                                                            -2 * np.asarray(t.gamma) - 1))
                        for t in terms])
    weights /= weights.sum()
    # beta-prime(gamma+1, -2gamma-1) has density proportional to x^gamma (1+x)^gamma
    comp = rng.choice(len(terms), size=n, p=weights)
    x = np.empty((n, spec.k))
    for c, t in enumerate(terms):
        idx = np.flatnonzero(comp == c)
        for j, gj in enumerate(t.gamma):
            x[idx, j] = stats.betaprime.rvs(gj + 1, -2 * gj - 1, size=idx.size, random_state=rng)
    dens = np.zeros(n)
    for c, t in enumerate(terms):
        ga = np.asarray(t.gamma)
        dens += weights[c] * np.prod(stats.betaprime.pdf(x, ga + 1, -2 * ga - 1), axis=-1)
    f = _eval_unchecked(spec, x) * _eval_unchecked(spec, 1 + x) / dens
    return float(f.mean()), float(f.std(ddof=1) / math.sqrt(n))


def c_constant(spec: KernelSpec, method: str = "closed_form", *, samples: int = 400_000,
               seed: int = 0) -> CValue:
    """C_g = int_{R_+^k} g(x) g(1 + x) dx.

    ``closed_form`` uses the Beta identity (Product kernels).  ``quadrature`` is
    a graded Gauss rule for k <= 2, with the error estimate taken from two rule
    orders plus an envelope bound on the truncated ends.  ``monte_carlo``
    importance-samples from beta-prime proposals fitted to the envelope and
    reports four standard errors.
    """
    if method == "closed_form":
        return CValue(_c_closed_form(spec), 0.0, method)
    if method == "quadrature" and spec.k <= 2:
        if spec.k == 1:
            fine, coarse = _c_quad_1d(spec, 60), _c_quad_1d(spec, 44)
            return CValue(fine, abs(fine - coarse) + 1e-14 * abs(fine), method)
        decades = 60.0
        fine = _c_quad_2d(spec, 12, decades)
        coarse = _c_quad_2d(spec, 9, decades)
        ends = _end_bound(spec.envelope, 10 ** -decades, 10 ** decades) if spec.envelope else 0.0
        return CValue(fine, abs(fine - coarse) + ends + 1e-14 * abs(fine), method)
    if method in ("monte_carlo", "quadrature"):
        mean, se = _c_monte_carlo(spec, samples, seed)
        return CValue(mean, 4 * se, "monte_carlo")
    raise ValueError(f"unknown method {method!r}")


def default_c(spec: KernelSpec) -> CValue:
    method = "closed_form" if isinstance(spec.form, Product) else "quadrature"
    return c_constant(spec, method)


# ---------------------------------------------------------------------------
# integrated kernel h_t


@dataclass(frozen=True)
class IntegratedKernelValue:
    t: float
    x: tuple
    value: float
    abs_error_estimate: float


def ht_evaluate(spec: KernelSpec, t: float, x, *, epsabs: float = 1e-10,
                epsrel: float = 1e-10) -> IntegratedKernelValue:
    """h_t(x) by adaptive quadrature over s in (max(x_j, 0), t]."""
    if not t > 0:
        raise ValueError("t must be positive")
    x = np.asarray(x, dtype=float).reshape(spec.k)
    lo = max(0.0, float(x.max()))
    if lo >= t:
        return IntegratedKernelValue(float(t), tuple(map(float, x)), 0.0, 0.0)
    off = lo - x
    tied = off == 0
    if tied.sum() > 1 and spec.envelope is not None:
        # s -> lo makes the tied coordinates vanish together: u^(sum of their exponents)
        worst = min(sum(np.asarray(term.gamma)[tied]) for term in spec.envelope.terms)
        if worst <= -1:
            return IntegratedKernelValue(float(t), tuple(map(float, x)), math.inf, math.inf)
    f = lambda u: float(_eval_unchecked(spec, off + u))
    span = t - lo
    # near a coordinate tie the integrand changes power law at u ~ gap; geometric
    # breakpoints from the gap outwards keep the adaptive rule from missing it
    gaps = off[off > 0]
    points = None
    if gaps.size and gaps.min() < span:
        d = float(gaps.min())
        points = list(d * 10.0 ** np.arange(int(np.ceil(np.log10(span / d)))))
    val, err = adaptive(f, 0.0, span, points=points, epsabs=epsabs, epsrel=epsrel)
    return IntegratedKernelValue(float(t), tuple(map(float, x)), val, err)


def ht_values(spec: KernelSpec, t: float, x, panels: int = 36, order: int = 8) -> np.ndarray:
    """Vectorized h_t on points of shape (..., k) by a graded Gauss rule.

    Off-diagonal points are accurate to roughly 1e-10 relative; on coordinate
    ties the integrand can be non-integrable and the result is meaningless.
    """
    x = _as_points(spec, x)
    lo = np.maximum(0.0, x.max(axis=-1))
    gmin = spec.envelope.gamma_min if spec.envelope is not None else spec.alpha / spec.k
    power = 1.0 / (1.0 + max(gmin, -0.999))
    off = lo[..., None] - x

    def f(u):
        pts = off[..., None, :] + u[..., None]
        return evaluate_masked(spec, pts)

    return singular_start_integral(f, t - lo, power, panels=panels, order=order)


def ht_norm_sq(spec: KernelSpec, t: float = 1.0, c: Optional[CValue] = None) -> float:
    """||h_t||^2 = t^(2H) C_g / (H (2H - 1))."""
    H = hurst(spec)
    c = default_c(spec) if c is None else c
    return t ** (2 * H) * c.value / (H * (2 * H - 1))


# ---------------------------------------------------------------------------
# serialization


def to_dict(spec: KernelSpec) -> dict:
    form = spec.form
    out = {"k": spec.k, "alpha": spec.alpha, "symmetric": spec.symmetric}
    if isinstance(form, Product):
        out.update(form="product", gamma=list(form.gamma))
    elif isinstance(form, NormPower):
        out.update(form="norm_power")
    elif isinstance(form, RatioProduct):
        out.update(form="ratio_product", a=list(form.a), b=form.b)
    elif isinstance(form, MaxCombo):
        out.update(form="max_combo")
    elif isinstance(form, Tensor):
        out.update(form="tensor", left=to_dict(form.left), right=to_dict(form.right))
    else:
        raise TypeError("custom kernels carry code and cannot be serialized")
    if spec.envelope is not None:
        out["envelope"] = spec.envelope.to_list()
    return out


def from_dict(d: dict) -> KernelSpec:
    kind = str(d["form"]).lower().replace("-", "_")
    if kind == "product":
        spec = product(d["gamma"])
    elif kind in ("norm_power", "normpower"):
        spec = norm_power(int(d["k"]), float(d["alpha"]))
    elif kind in ("ratio_product", "ratioproduct"):
        spec = ratio_product(d["a"], float(d["b"]))
    elif kind in ("max_combo", "maxcombo"):
        spec = max_combo(int(d["k"]), float(d["alpha"]))
    elif kind == "tensor":
        spec = tensor_product(from_dict(d["left"]), from_dict(d["right"]))
    else:
        raise ValueError(f"unknown kernel form {d['form']!r}")
    if "k" in d and int(d["k"]) != spec.k:
        raise ValueError(f"declared k={d['k']} does not match the form (k={spec.k})")
    if "alpha" in d and abs(float(d["alpha"]) - spec.alpha) > 1e-12:
        raise ValueError(f"declared alpha={d['alpha']} does not match the form ({spec.alpha:g})")
    if d.get("symmetric"):
        spec = symmetrize(spec)
    if d.get("envelope") is not None:
        spec = KernelSpec(spec.k, spec.alpha, spec.form, Envelope.from_list(d["envelope"]),
                          spec.symmetric)
    return spec
