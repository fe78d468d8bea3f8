"""Quadrature helpers shared by the kernel, filter and spectral modules.

Two families live here:

* scalar adaptive integration (QUADPACK through :func:`scipy.integrate.quad`)
  with warnings folded into the returned error estimate, and
* fixed, vectorized graded Gauss-Legendre rules for batches of integrals whose
  integrands carry an integrable power singularity at one endpoint.
"""

from __future__ import annotations

import warnings
from functools import lru_cache

import numpy as np
from scipy import integrate


class QuadratureError(RuntimeError):
    """Raised when an integral cannot be brought under its tolerance."""


@lru_cache(maxsize=32)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the ``order``-point rule mapped to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=64)
def graded_unit_rule(panels: int = 36, order: int = 8, ratio: float = 0.5):
    """Composite rule on (0, 1] with geometric panels refined toward 0.

    Panels are [r^(j+1), r^j] for j < panels, followed by [0, r^panels].
    Exact for piecewise polynomials on the panels and robust for integrands
    that are bounded but non-smooth at the origin.
    """
    x, w = gauss_legendre(order)
    edges = ratio ** np.arange(panels + 1, dtype=float)
    lo = np.append(edges[1:], 0.0)
    hi = edges
    nodes = (lo[:, None] + (hi - lo)[:, None] * x[None, :]).ravel()
    weights = ((hi - lo)[:, None] * w[None, :]).ravel()
    return nodes, weights


@lru_cache(maxsize=16)
def graded_half_line_rule(decades: float = 40.0, ratio: float = 4.0, order: int = 12):
    """Rule for integrals over (0, inf) with power behaviour at both ends.

    Geometric panels of ratio ``ratio`` cover [10^-decades, 10^decades]; the two
    leftover ends are dropped, so callers must bound them separately.
    """
    x, w = gauss_legendre(order)
    n_panels = int(np.ceil(2 * decades * np.log(10.0) / np.log(ratio)))
    edges = np.logspace(-decades, decades, n_panels + 1)
    lo, hi = edges[:-1], edges[1:]
    nodes = (lo[:, None] + (hi - lo)[:, None] * x[None, :]).ravel()
    weights = ((hi - lo)[:, None] * w[None, :]).ravel()
    return nodes, weights


def singular_start_integral(f, span, power: float, panels: int = 36, order: int = 8):
    """Vectorized integral of ``f`` over [0, span] with a singularity at 0.

    Uses the substitution u = span * w**power.  With ``power >= 1 / (1 + gamma)``
    an endpoint behaviour u**gamma becomes a bounded function of w, which the
    graded rule then integrates accurately.  ``f`` is called with the offsets
    ``u`` (shape ``span.shape + (q,)``) rather than absolute abscissae, so callers
    can form differences like ``(lo - x) + u`` without cancellation.

    Entries with ``span <= 0`` integrate to zero.
    """
    span = np.clip(np.asarray(span, dtype=float), 0.0, None)
    w, wt = graded_unit_rule(panels, order)
    u = span[..., None] * w**power
    jac = power * span[..., None] * w ** (power - 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = f(u)
    vals = np.where(span[..., None] > 0, vals, 0.0)
    return np.sum(vals * jac * wt, axis=-1)


def adaptive(f, a: float, b: float, *, points=None, epsabs: float = 1e-10,
             epsrel: float = 1e-10, limit: int = 400, weight=None, wvar=None):
    """``scipy.integrate.quad`` returning ``(value, abs_error)``.

    Integration warnings are not raised; a failed subdivision shows up as an
    error estimate above the requested tolerance, which callers inspect.
    """
    kwargs = {"epsabs": epsabs, "epsrel": epsrel, "limit": limit}
    if points is not None and np.isfinite(a) and np.isfinite(b):
        pts = sorted({float(p) for p in points if a < p < b})
        if pts:
            kwargs["points"] = pts
    if weight is not None:
        kwargs["weight"] = weight
        kwargs["wvar"] = wvar
        kwargs.pop("points", None)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, err = integrate.quad(f, a, b, **kwargs)[:2]
    return float(value), float(abs(err))


def adaptive_pieces(f, breaks, **kw):
    """Sum of :func:`adaptive` over consecutive intervals ``breaks[i], breaks[i+1]``."""
    total, err = 0.0, 0.0
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b <= a:
            continue
        v, e = adaptive(f, a, b, **kw)
        total += v
        err += e
    return total, err
