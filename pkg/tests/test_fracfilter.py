import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from hermchaos import chaos as C
from hermchaos import fracfilter as FF
from hermchaos import kernels as K

from _oracles import h_beta_k1_closed, h_beta_norm_sq_double_quad, h_beta_norm_sq_k1

G1 = K.product([-0.7])
G2 = K.product([-0.75, -0.625])

# h_beta_norm_sq for x^-0.7 at t = 1, from the Mandelbrot-Van Ness closed form
NORM_K1 = {0.1: 1563.4926982194964, -0.45: 142.57730173157816,
           0.15: 1211.3273759728619, -0.25: 208.03304804937654}


# ---------------------------------------------------------------------------
# window and coefficients


def test_beta_window():
    assert FF.beta_window(G1) == pytest.approx((-0.8, 0.2))
    assert FF.beta_window(G2) == pytest.approx((-0.625, 0.375))


@given(st.floats(0.01, 0.99))
def test_filtered_hurst_in_unit_interval(frac):
    for g in (G1, G2, K.product([-0.6, -0.6])):
        lo, hi = FF.beta_window(g)
        b = lo + frac * (hi - lo)
        if b == 0:
            continue
        assert 0 < FF.filtered_hurst(g, b) < 1


def test_check_beta():
    FF.check_beta(G1, 0.1)
    for b in (0.0, 0.2, -0.8, 0.5):
        with pytest.raises(ValueError):
            FF.check_beta(G1, b)


def test_family_selection_and_errors():
    assert FF.FilterSpec(0.3).family == FF.PURE_POWER
    assert FF.FilterSpec(-0.3).family == FF.TELESCOPING
    with pytest.raises(ValueError):
        FF.FilterSpec(-0.3, FF.PURE_POWER)
    with pytest.raises(ValueError):
        FF.FilterSpec(0.3, FF.TELESCOPING)
    with pytest.raises(ValueError):
        FF.FilterSpec(0.0)
    with pytest.raises(ValueError):
        FF.FilterSpec(0.3, length=0)


def test_pure_power_coefficients():
    c = FF.build_filter(0.3, 5)
    np.testing.assert_allclose(c, np.arange(1, 6) ** -0.7)
    assert c[0] == 1.0


def test_telescoping_partial_sum_example():
    c = FF.build_filter(-0.25, 10_000)
    assert np.sum(c) == pytest.approx(-4 * 10_000 ** -0.25, rel=1e-12)


@pytest.mark.parametrize("beta", [-0.05, -0.25, -0.45, -0.79])
def test_telescoping_partial_sums_exact(beta):
    c = FF.build_filter(beta, 20_000)
    ps = np.cumsum(c)
    ref = FF.partial_sums(beta, 20_000)
    assert np.max(np.abs(ps - ref) / np.abs(ref)) < 1e-12


@pytest.mark.parametrize("beta", [0.05, 0.3, -0.25, -0.6])
def test_regular_variation(beta):
    c = FF.build_filter(beta, 50_000)
    n = np.arange(10_000, 50_001, 5000)
    r = c[n - 1] * n ** (1.0 - beta)
    assert np.all((r >= 0.98) & (r <= 1.02))


def test_tail_bound():
    pure = FF.filter_tail_bound(FF.FilterSpec(0.1, length=100))
    c = FF.build_filter(0.1, 200_000)
    assert np.sum(c[100:] ** 2) <= pure["square_tail"]
    tele = FF.filter_tail_bound(FF.FilterSpec(-0.25, length=100))
    c = FF.build_filter(-0.25, 200_000)
    assert np.sum(c[100:] ** 2) <= tele["square_tail"]
    assert tele["residual"] == pytest.approx(4 * 100 ** -0.25)


# ---------------------------------------------------------------------------
# application


def test_apply_filter_shift_and_difference():
    X = np.arange(1.0, 11.0) ** 2
    U, idx = FF.apply_filter(X, [1.0, 0.0, 0.0])
    np.testing.assert_array_equal(idx, np.arange(4, 11))
    np.testing.assert_allclose(U, X[idx - 2])
    U, idx = FF.apply_filter(X, [1.0, -1.0])
    np.testing.assert_allclose(U, X[idx - 2] - X[idx - 3])


def test_apply_filter_batched_matches_rows(rng):
    X = rng.normal(size=(3, 400))
    c = FF.build_filter(0.2, 50)
    U = FF.apply_filter(X, c, return_index=False)
    for r in range(3):
        np.testing.assert_allclose(U[r], FF.apply_filter(X[r], c, return_index=False), atol=1e-12)


def test_apply_filter_too_short():
    with pytest.raises(ValueError):
        FF.apply_filter(np.ones(5), np.ones(5))


def brute_filtered_acf(gamma_x, c, n):
    L = len(c)
    return sum(c[m] * c[mp] * gamma_x[abs(n + m - mp)] for m in range(L) for mp in range(L))


def test_filtered_acf_bilinear_identity():
    cfg = C.finite_config({(1, 2): 0.5, (2, 1): 0.5, (1, 4): 0.2, (4, 1): 0.2})
    c = np.array([1.0, -0.4, 0.25, 0.1])
    gx = C.acf_exact(cfg, 20).gamma
    gu = FF.filtered_acf(gx, c, 8)
    for n in range(9):
        assert gu[n] == pytest.approx(brute_filtered_acf(gx, c, n), abs=1e-10)


def test_filtered_variance_matches_simulation():
    cfg = C.finite_config({(1,): 1.0, (2,): -0.5, (3,): 0.25})
    c = FF.build_filter(-0.3, 6)
    gx = C.acf_exact(cfg, 60).gamma
    N, R = 32, 2000
    exact = FF.filtered_partial_sum_variance(gx, c, N)
    assert exact == pytest.approx(C.exact_partial_sum_variance(FF.filtered_acf(gx, c, N), N), rel=1e-10)
    e = np.stack([C.noise_window(cfg.noise.substream(r), 1 - cfg.M, N + 6) for r in range(R)])
    X = C.simulate(cfg, N + 6, eps=e)
    S = FF.apply_filter(X, c, return_index=False).sum(axis=-1)
    assert abs(S.var(ddof=1) / exact - 1) < 5 * math.sqrt(2.0 / R)


@given(st.lists(st.floats(-1, 1), min_size=3, max_size=6), st.integers(1, 12))
def test_filtered_partial_sum_variance_bilinear(c, N):
    cfg = C.finite_config({(1,): 1.0, (2,): 0.7, (3,): -0.2})
    gx = C.acf_exact(cfg, 40).gamma
    c = np.asarray(c)
    lhs = FF.filtered_partial_sum_variance(gx, c, N)
    rhs = C.exact_partial_sum_variance(FF.filtered_acf(gx, c, N), N)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)


def test_filtered_acf_needs_lags():
    with pytest.raises(ValueError):
        FF.filtered_acf(np.ones(5), np.ones(4), 3)


# ---------------------------------------------------------------------------
# continuous objects


def test_l_beta_examples():
    assert FF.l_beta(0.5, 1.0, 0.75) == pytest.approx(1.0)
    assert FF.l_beta(0.5, 1.0, 1.5) == 0.0
    assert FF.l_beta(-0.3, 1.0, 2.0) == 0.0
    with pytest.raises(ValueError):
        FF.l_beta(0.0, 1.0, 0.5)


@given(st.floats(-0.9, 0.9).filter(lambda b: abs(b) > 1e-3), st.floats(-5, 3))
def test_l_beta_scaling(beta, s):
    lam, t = 2.0, 1.0
    lhs = FF.l_beta(beta, lam * t, s)
    rhs = lam ** beta * FF.l_beta(beta, t, s / lam)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("beta", [0.1, -0.45, 0.15])
@pytest.mark.parametrize("x", [-3.0, -0.2, 0.0, 0.4, 0.99])
def test_h_beta_k1_closed_form(beta, x):
    val = FF.h_beta_evaluate(G1, beta, 1.0, [x]).value
    assert val == pytest.approx(float(h_beta_k1_closed(beta, -0.7, 1.0, x)), rel=1e-8)


def test_h_beta_vanishes_beyond_t():
    assert FF.h_beta_evaluate(G2, 0.1, 1.0, [1.2, 0.3]).value == 0.0


def test_h_beta_decays_far_out():
    xs = (10, 100, 1000, 10_000, 100_000)
    vals = [abs(FF.h_beta_evaluate(G1, 0.1, 1.0, [-x]).value) for x in xs]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    # for x -> -inf the kernel varies slowly over the support of l, so h decays like |x|^(beta+gamma)
    assert vals[-1] / vals[-2] == pytest.approx(10 ** (0.1 - 0.7), rel=1e-3)


def test_h_beta_linear_in_kernel():
    doubled = K.custom(1, -0.7, lambda x: 2 * x[..., 0] ** -0.7,
                       envelope=K.Envelope((K.EnvelopeTerm(2.0, (-0.7,)),)))
    for x in (-1.0, 0.3):
        a = FF.h_beta_evaluate(G1, 0.1, 1.0, [x]).value
        b = FF.h_beta_evaluate(doubled, 0.1, 1.0, [x]).value
        assert b == pytest.approx(2 * a, rel=1e-10)


def double_integral_form(gamma, beta, t, x):
    """int_0^t dr int (r - s)_+^(beta-1) g(s 1 - x) ds for a k = 2 product kernel.

    The inner integral carries the two endpoint singularities as algebraic
    weights, the other coordinate is a smooth factor.
    """
    x = np.asarray(x, dtype=float)
    j = int(np.argmax(x))
    lo, other = x[j], x[1 - j]
    gj, go = gamma[j], gamma[1 - j]

    def inner(r):
        if r <= lo:
            return 0.0
        f = lambda s: (s - other) ** go
        return integrate.quad(f, lo, r, weight="alg", wvar=(gj, beta - 1),
                              epsabs=1e-13, epsrel=1e-11)[0]

    pts = [p for p in (lo,) if 0 < p < t]
    return integrate.quad(inner, max(0.0, lo), t, points=pts or None,
                          epsabs=1e-12, epsrel=1e-10, limit=200)[0]


@pytest.mark.parametrize("x", [(0.2, -0.5), (-0.3, -1.1), (0.6, 0.1)])
def test_h_beta_matches_double_integral_k2(x):
    beta = 0.2
    val = FF.h_beta_evaluate(G2, beta, 1.0, x).value
    ref = double_integral_form((-0.75, -0.625), beta, 1.0, x)
    assert val == pytest.approx(ref, rel=1e-6)


@pytest.mark.parametrize("beta", sorted(NORM_K1))
def test_h_beta_norm_sq_frozen(beta):
    assert FF.h_beta_norm_sq(G1, beta) == pytest.approx(NORM_K1[beta], rel=1e-10)


@given(st.floats(-0.79, 0.19).filter(lambda b: abs(b) > 0.01))
def test_h_beta_norm_sq_closed_form_property(beta):
    assert FF.h_beta_norm_sq(G1, beta) == pytest.approx(h_beta_norm_sq_k1(beta, -0.7), rel=1e-8)


def test_frozen_values_match_closed_form_oracle():
    for beta, v in NORM_K1.items():
        assert h_beta_norm_sq_k1(beta, -0.7) == pytest.approx(v, rel=1e-13)


@pytest.mark.parametrize("kernel,beta", [(G1, 0.1), (G1, -0.45), (G2, 0.2), (G2, -0.3)])
def test_h_beta_norm_sq_scaling(kernel, beta):
    H = FF.filtered_hurst(kernel, beta)
    base = FF.h_beta_norm_sq(kernel, beta, 1.0)
    for t in (2.0, 4.0):
        assert FF.h_beta_norm_sq(kernel, beta, t) / base == pytest.approx(t ** (2 * H), rel=1e-10)


@pytest.mark.slow
def test_h_beta_norm_sq_double_quadrature():
    assert FF.h_beta_norm_sq(G1, 0.1) == pytest.approx(h_beta_norm_sq_double_quad(G1, 0.1), rel=1e-4)


def test_h_beta_norm_sq_window_edge():
    with pytest.raises(ValueError):
        FF.h_beta_norm_sq(G1, 0.2)
    with pytest.raises(ValueError):
        FF.h_beta_norm_sq(G1, -0.8)


def test_filter_csv(tmp_path):
    FF.write_filter_csv(tmp_path / "f.csv", FF.FilterSpec(-0.25, length=4))
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert lines[0] == "n,C_n,partial_sum"
    assert float(lines[4].split(",")[2]) == pytest.approx(-4 * 4 ** -0.25)
