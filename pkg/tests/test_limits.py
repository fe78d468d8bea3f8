import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from hermchaos import chaos as C
from hermchaos import fracfilter as FF
from hermchaos import kernels as K
from hermchaos import limits as L

from _oracles import contraction_tensor_quad

G1 = K.product([-0.7])
G2 = K.product([-0.75, -0.625])
G2S = K.product([-0.7, -0.7], symmetric=True)

# N^-0.3 sum_{m=1}^{63} m^-0.7: the lattice kernel at x = 0 for N = 64
DISCRETE_AT_ZERO_N64 = 2.52762403282525927

# regression values of the k = 1 relative L2 error (t = 1), N = 64..512
L2_K1 = {64: 0.24436078490805946, 128: 0.19853741453187743,
         256: 0.16128356607952785, 512: 0.13101111496450915}

SRD_K2 = {(1, 2): 0.5, (2, 1): 0.5, (1, 3): 0.3, (3, 1): 0.3}


# ---------------------------------------------------------------------------
# discretized kernel


def test_discrete_kernel_at_origin():
    dk = L.discretize_limit_kernel(G1, 1.0, 64, 10.0)
    m = np.arange(1, 64, dtype=float)
    assert float(dk.at(np.array([0.0]))) == pytest.approx(DISCRETE_AT_ZERO_N64, rel=1e-13)
    assert float(dk.at(np.array([0.0]))) == pytest.approx(64 ** -0.3 * np.sum(m ** -0.7), rel=1e-13)


@pytest.mark.xfail(strict=True, reason="h~ at x=0 sums n over 1..[Nt] with the indicator "
                   "n > [Nx]+1, so the first term drops: the sum runs to N-1, not N")
def test_discrete_kernel_at_origin_full_sum():
    dk = L.discretize_limit_kernel(G1, 1.0, 64, 10.0)
    n = np.arange(1, 65, dtype=float)
    assert float(dk.at(np.array([0.0]))) == pytest.approx(64 ** -0.3 * np.sum(n ** -0.7), rel=1e-10)


def brute_discrete_kernel(kernel, t, N, j):
    """N^(-alpha-1) sum_{n=1}^{[Nt]} g(n 1 - j - 1) 1{n 1 > j + 1} by a plain loop."""
    j = np.asarray(j)
    total = 0.0
    for n in range(1, int(math.floor(N * t)) + 1):
        arg = n - j - 1
        if np.all(arg > 0):
            total += float(K.evaluate(kernel, arg.astype(float)))
    return N ** (-kernel.alpha - 1) * total


@pytest.mark.parametrize("kernel", [G2, G2S, K.max_combo(2, -1.2)])
def test_discrete_kernel_k2_brute_force(kernel):
    N = 16
    dk = L.discretize_limit_kernel(kernel, 1.0, N, 1.0)
    for j in [(-3, 5), (0, 0), (2, -16), (-16, -16), (7, 7), (14, 13)]:
        x = (np.array(j) + 0.5) / N
        assert float(dk.at(x)) == pytest.approx(brute_discrete_kernel(kernel, 1.0, N, j), rel=1e-12)


def test_discrete_kernel_vanishes_late():
    N = 32
    dk = L.discretize_limit_kernel(G2, 1.0, N, 1.0)
    for j in (N - 1, N, N + 5):
        assert float(dk.at(np.array([j, j]) / N + 1e-9)) == 0.0
    dk1 = L.discretize_limit_kernel(G1, 1.0, N, 1.0)
    assert float(dk1.at(np.array([1.0]))) == 0.0


def test_discrete_kernel_symmetric():
    dk = L.discretize_limit_kernel(G2S, 1.0, 16, 1.0)
    np.testing.assert_allclose(dk.values, dk.values.T, rtol=1e-13)


def test_window_tail_bound_dominates():
    h2 = lambda x: ((1 - x) ** 0.3 - (-x) ** 0.3) ** 2 / 0.09
    for window in (10.0, 100.0, 2000.0):
        true = integrate.quad(h2, -np.inf, -window, epsabs=0, epsrel=1e-8)[0]
        bound = L.window_tail_bound(G1, 1.0, window)
        assert true <= bound
        assert true / bound > 0.95       # h_t(x) ~ t g(-x) far out, so the bound is nearly tight
    with pytest.raises(ValueError):
        L.discretize_limit_kernel(G1, 1.0, 64, 10.0, tol=1e-3)
    assert L.window_tail_bound(K.product([-0.55, -0.3, -0.3]), 1.0, 5.0) == math.inf


def test_window_tail_bound_k2():
    # envelope bound against the mass the lattice integration leaves outside [-T, t)^2
    err = L.l2_discretization_error(G2, 1.0, 32, window=2.0)
    assert err.outside_mass <= L.window_tail_bound(G2, 1.0, 2.0)


def test_lattice_cap():
    with pytest.raises(C.ResourceCapError):
        L.discretize_limit_kernel(G2, 1.0, 512, 4.0, max_elements=10**5)


def test_l2_error_k1_regression():
    for N, v in L2_K1.items():
        assert L.l2_discretization_error(G1, 1.0, N).relative == pytest.approx(v, rel=1e-6)


def test_l2_error_k1_rate():
    # the error decays like N^(alpha+1) = N^-0.3
    e = [L.l2_discretization_error(G1, 1.0, N).relative for N in (256, 512, 1024)]
    assert e[1] / e[0] == pytest.approx(2 ** -0.3, rel=0.02)
    assert e[2] / e[1] == pytest.approx(2 ** -0.3, rel=0.02)


@pytest.mark.parametrize("kernel", [G1, K.norm_power(1, -0.6), K.product([-0.9])])
def test_l2_error_monotone_k1(kernel):
    e = [L.l2_discretization_error(kernel, 1.0, N).relative for N in (64, 128, 256, 512)]
    assert all(b <= a * 1.01 for a, b in zip(e, e[1:]))


@pytest.mark.slow
@pytest.mark.parametrize("kernel", [G2, G2S, K.norm_power(2, -1.2),
                                    K.ratio_product([0.3, 0.3], 1.8), K.max_combo(2, -1.2)])
def test_l2_error_monotone_k2(kernel):
    e = [L.l2_discretization_error(kernel, 1.0, N).relative for N in (8, 16, 32)]
    assert all(b <= a * 1.01 for a, b in zip(e, e[1:]))


@pytest.mark.xfail(strict=True, reason="the error decays like N^-0.3 and is still 0.131 at N=512")
def test_l2_error_below_five_percent():
    assert L.l2_discretization_error(G1, 1.0, 512).relative < 0.05


def test_l2_error_time_reparameterization():
    a = L.l2_discretization_error(G1, 1.0, 256).relative
    b = L.l2_discretization_error(G1, 2.0, 128).relative
    assert b == pytest.approx(a, rel=1e-6)


# ---------------------------------------------------------------------------
# ensembles


def test_summarize_recomputable(rng):
    x = rng.normal(size=500)
    s = L.summarize(x)
    assert s["variance"] == pytest.approx(np.var(x, ddof=1))
    assert s == L.summarize(x.copy())
    with pytest.raises(ValueError):
        L.summarize([1.0])


def test_ensemble_variance_matches_exact():
    cfg = C.ChaosConfig(kernel=G2S, M=200, noise=C.NoiseSpec("gaussian", 17))
    N, R = 256, 2000
    res = L.simulate_limit_process(cfg, [0.5, 1.0], N, R)
    assert res.samples.shape == (R, 2)
    exact = L.exact_limit_variance(cfg, N)
    sample_var = res.samples[:, 1].var(ddof=1)
    kurt = L.summarize(res.samples[:, 1])["excess_kurtosis"]
    se = exact * math.sqrt((2 + kurt) / R)
    assert abs(sample_var - exact) < 5 * se


def test_ensemble_is_reproducible_and_batch_independent():
    cfg = C.ChaosConfig(kernel=G2, M=40, noise=C.NoiseSpec("gaussian", 4))
    a = L.simulate_limit_process(cfg, [1.0], 64, 50, batch=7).samples
    b = L.simulate_limit_process(cfg, [1.0], 64, 50, batch=50).samples
    np.testing.assert_array_equal(a, b)


def test_limit_process_requires_gaussian_kernel():
    with pytest.raises(ValueError):
        L.simulate_limit_process(C.ChaosConfig(kernel=G1, M=10, noise=C.NoiseSpec("rademacher")),
                                 [1.0], 16, 5)
    with pytest.raises(ValueError):
        L.simulate_limit_process(C.finite_config({(1,): 1.0}), [1.0], 16, 5)


def test_order_one_limit_is_normal():
    cfg = C.ChaosConfig(kernel=G1, M=2000, noise=C.NoiseSpec("gaussian", 8))
    res = L.simulate_limit_process(cfg, [1.0], 512, 2000)
    assert res.summary["ks_pvalue"] > 0.001
    assert abs(res.summary["skew_z"]) < 4 and abs(res.summary["kurt_z"]) < 4


@pytest.mark.parametrize("t", [0.5, 0.25])
def test_self_similarity_k1(t):
    cfg = C.ChaosConfig(kernel=G1, M=100_000)
    H = K.hurst(G1)
    ratio = L.exact_limit_variance(cfg, 4096, t) / L.exact_limit_variance(cfg, 4096)
    assert ratio == pytest.approx(t ** (2 * H), rel=0.05)


@pytest.mark.xfail(strict=True, reason="the diagonal-removal term is an N^-0.4 relative "
                   "correction; at N=2^12 the ratio is still about 8% low")
def test_self_similarity_k2():
    cfg = C.ChaosConfig(kernel=G2S, M=1500)
    gam = C.acf_exact(cfg, 4096, tail="analytic").gamma
    v = C.partial_sum_variances(gam, [2048, 4096])
    assert v[0] / v[1] == pytest.approx(0.5 ** (2 * K.hurst(G2S)), rel=0.05)


def test_self_similarity_k2_improves():
    cfg = C.ChaosConfig(kernel=G2S, M=1500)
    gam = C.acf_exact(cfg, 16384, tail="analytic").gamma
    target = 0.5 ** (2 * K.hurst(G2S))
    dev = []
    for N in (256, 1024, 4096, 16384):
        v = C.partial_sum_variances(gam, [N // 2, N])
        dev.append(abs(v[0] / v[1] / target - 1))
    assert all(b < a for a, b in zip(dev, dev[1:]))


def test_draw_cap():
    cfg = C.ChaosConfig(kernel=G1, M=100)
    with pytest.raises(C.ResourceCapError):
        next(L.ensemble_paths(cfg, 1000, 10, max_draws=1000))


# ---------------------------------------------------------------------------
# scaling


def test_ols_loglog_exact_power():
    Ns = 2 ** np.arange(4, 10)
    slope, intercept, resid, used = L.ols_loglog(Ns, 3.0 * Ns ** 1.3)
    assert slope == pytest.approx(1.3, abs=1e-12)
    assert intercept == pytest.approx(math.log(3.0), abs=1e-10)
    assert len(used) == len(Ns) - 1
    with pytest.raises(ValueError):
        L.ols_loglog([4], [1.0])


def test_scaling_srd():
    fit = L.variance_scaling_fit(C.finite_config(SRD_K2), 2 ** np.arange(8, 15))
    assert 0.97 <= fit.slope <= 1.03
    assert fit.expected_slope == 1.0


@pytest.mark.xfail(strict=True, reason="lattice bias of relative order N^-0.3 tilts the exact "
                   "slope to about 1.64 on 2^8..2^14")
def test_scaling_k1_in_band():
    fit = L.variance_scaling_fit(C.ChaosConfig(kernel=G1, M=100_000), 2 ** np.arange(8, 15))
    assert 1.57 <= fit.slope <= 1.63


def test_scaling_k1_approaches_two_h():
    cfg = C.ChaosConfig(kernel=G1, M=100_000)
    lo = L.variance_scaling_fit(cfg, 2 ** np.arange(6, 10)).slope
    hi = L.variance_scaling_fit(cfg, 2 ** np.arange(13, 17)).slope
    assert abs(hi - 1.6) < abs(lo - 1.6)


def test_scaling_filtered_antipersistent():
    fit = L.variance_scaling_fit(C.ChaosConfig(kernel=G1, M=100_000), 2 ** np.arange(8, 15),
                                 filt=FF.FilterSpec(-0.45))
    assert fit.expected_slope == pytest.approx(0.7)
    assert 0.6 <= fit.slope <= 0.8


def test_scaling_errors():
    with pytest.raises(ValueError):
        L.variance_scaling_fit(C.finite_config(SRD_K2), [256])
    with pytest.raises(ValueError):
        L.variance_scaling_fit(C.finite_config(SRD_K2), [256, 512], filt=FF.FilterSpec(0.1))
    with pytest.raises(ValueError):
        L.variance_scaling_fit(C.ChaosConfig(kernel=G1, M=100), [256, 512], filt=FF.FilterSpec(0.3))


# ---------------------------------------------------------------------------
# CLT and moments


def test_clt_small():
    cfg = C.finite_config(SRD_K2, C.NoiseSpec("gaussian", 3))
    res, rep = L.clt_ensemble(cfg, 512, 2000)
    assert rep.sigma2 == pytest.approx(C.long_run_variance(cfg))
    assert rep.ks < rep.ks_threshold
    assert abs(rep.variance_ratio - 1) < 5 * math.sqrt(3.0 / 2000)


def test_clt_iid_case():
    cfg = C.finite_config({(1,): 1.0}, C.NoiseSpec("rademacher", 2))
    res, rep = L.clt_ensemble(cfg, 256, 2000)
    assert rep.sigma2 == 1.0
    assert rep.ks < rep.ks_threshold
    assert abs(rep.skew_z) < 4 and abs(rep.kurt_z) < 4


def test_clt_rejects_lrd():
    with pytest.raises(C.NotSRDError):
        L.clt_ensemble(C.ChaosConfig(kernel=G1, M=100), 64, 10)


def test_clt_ks_decreases_with_n():
    # a skewed order-2 chaos: normality improves as N doubles
    cfg = C.finite_config({(1, 2): 0.5, (2, 1): 0.5}, C.NoiseSpec("gaussian", 12))
    ks = [L.clt_ensemble(cfg, N, 4000)[1].ks for N in (4, 16, 64)]
    assert ks[2] < ks[0]
    assert all(b <= a + 0.01 for a, b in zip(ks, ks[1:]))


def test_ks_threshold():
    assert L.ks_threshold(10_000) == pytest.approx(1.628 / math.sqrt(10_000), rel=0.01)


def test_moment_ratio_gaussian(rng):
    x = rng.normal(size=200_000)
    assert L.moment_ratio(x, 4) == pytest.approx(3 ** 0.25, rel=0.01)


@given(st.floats(0.01, 100), st.floats(2.1, 6))
@settings(max_examples=20)
def test_moment_ratio_scale_free(c, p):
    x = np.random.default_rng(1).standard_t(5, size=200)
    assert L.moment_ratio(c * x, p) == pytest.approx(L.moment_ratio(x, p), rel=1e-10)


def test_moment_ratio_errors():
    with pytest.raises(ValueError):
        L.moment_ratio(np.ones(5), 3)
    with pytest.raises(ValueError):
        L.moment_ratio(np.ones(50), 2)


def test_moment_ratio_band_k2():
    cfg = C.ChaosConfig(kernel=G2S, M=150, noise=C.NoiseSpec("gaussian", 6))
    for N in (256, 1024):
        r = L.moment_ratio(L.simulate_limit_process(cfg, [1.0], N, 1000).samples, 3)
        assert 0.5 <= r <= 8


# ---------------------------------------------------------------------------
# multivariate structure


def test_cross_covariance_limit():
    p = C.finite_config({(1,): 1.0, (2,): 2.0})
    q = C.finite_config({(2,): 1.0, (3,): 2.0})
    # sum over all lags of sum_i a(i) b(i + n) = (sum a)(sum b) = 9
    assert L.cross_covariance_limit(p, q, 0.5, 2.0) == pytest.approx(0.5 * 9.0)
    assert L.cross_covariance_limit(p, C.finite_config(SRD_K2), 1, 1) == 0.0
    lrv = C.long_run_variance(C.finite_config(SRD_K2))
    assert L.cross_covariance_limit(C.finite_config(SRD_K2), C.finite_config(SRD_K2), 0.3, 0.7) \
        == pytest.approx(0.3 * lrv)
    with pytest.raises(C.NotSRDError):
        L.cross_covariance_limit(C.ChaosConfig(kernel=G1, M=10), p, 1, 1)


def test_probe_points_fixed():
    a, b = L.probe_points(2), L.probe_points(2)
    np.testing.assert_array_equal(a, b)
    assert a.shape == (16, 2)
    assert np.all((a > -2) & (a < 2))
    assert len({tuple(r) for r in a}) == 16


def test_contraction_self_k1_is_norm():
    res = L.contraction_integral(G1, G1)
    assert res.values.shape == (1,)
    assert res.values[0] == pytest.approx(K.ht_norm_sq(G1, 2.0), rel=1e-8)


def test_contraction_scaled_kernel():
    scaled = K.custom(1, -0.7, lambda x: 3 * x[..., 0] ** -0.7,
                      envelope=K.Envelope((K.EnvelopeTerm(3.0, (-0.7,)),)))
    pr = L.probe_points(1)[:4]
    base = L.contraction_integral(G2S, G1, probes=pr).values
    np.testing.assert_allclose(L.contraction_integral(G2S, scaled, probes=pr).values, 3 * base, rtol=1e-8)
    assert np.all(base > 0)


def test_contraction_positive_kernels_positive():
    res = L.contraction_integral(G1, G2S)
    assert res.values.shape == (16,)
    assert res.min_value > 0


@pytest.mark.slow
@pytest.mark.parametrize("g1,g2", [((-0.7,), (-0.7, -0.7)), ((-0.75, -0.625), (-0.7, -0.7))])
def test_contraction_against_tensor_quadrature(g1, g2):
    k1 = K.product(list(g1), symmetric=len(g1) > 1)
    k2 = K.product(list(g2), symmetric=True)
    dim = len(g1) + len(g2) - 2
    probes = L.probe_points(dim)[:3]
    vals = L.contraction_integral(k1, k2, probes=probes).values
    for pr, v in zip(probes, vals):
        ref = contraction_tensor_quad(g1, g2, 2.0, pr[: len(g1) - 1], pr[len(g1) - 1:])
        assert v == pytest.approx(ref, rel=1e-4)


def test_contraction_orders_limited():
    with pytest.raises(NotImplementedError):
        L.contraction_integral(K.product([-0.55, -0.3, -0.3]), G1)


def test_component_validation():
    lin = C.finite_config({(1,): 1.0})
    with pytest.raises(ValueError):
        L.Component(lin, "S2")
    with pytest.raises(ValueError):
        L.Component(C.finite_config(SRD_K2), "S1")
    with pytest.raises(ValueError):
        L.Component(lin, "L")
    with pytest.raises(ValueError):
        L.Component(C.ChaosConfig(kernel=G1, M=10), "F")
    with pytest.raises(ValueError):
        L.Component(C.ChaosConfig(kernel=G1, M=10), "F", FF.FilterSpec(0.3))
    with pytest.raises(ValueError):
        L.Component(lin, "X")
    assert L.Component(C.ChaosConfig(kernel=G1, M=10), "F", FF.FilterSpec(-0.45)).hurst == pytest.approx(0.35)


def test_multivariate_s1_s2_independent():
    noise = C.NoiseSpec("gaussian", 99)
    comps = [L.Component(C.finite_config({(1,): 1.0, (2,): 0.5}, noise), "S1"),
             L.Component(C.finite_config(SRD_K2, noise), "S2")]
    rep = L.multivariate_mixed_check(comps, 256, 4000)
    assert rep["pairs"][0]["independent_in_limit"]
    assert rep["passed"]


def test_multivariate_positive_l_pair_dependent():
    noise = C.NoiseSpec("gaussian", 5)
    comps = [L.Component(C.ChaosConfig(kernel=G1, M=200, noise=noise), "L"),
             L.Component(C.ChaosConfig(kernel=K.product([-0.6]), M=200, noise=noise), "L"),
             L.Component(C.ChaosConfig(kernel=G1, M=200, noise=noise), "F", FF.FilterSpec(-0.3, length=50))]
    rep = L.multivariate_mixed_check(comps, 256, 500)
    assert rep["pairs"][0]["corr"] > 0.5
    assert rep["pairs"][0]["passed"] is None


def test_multivariate_single_component():
    rep = L.multivariate_mixed_check([L.Component(C.finite_config({(1,): 1.0}), "S1")], 32, 20)
    assert rep["degenerate"] and rep["pairs"] == [] and rep["passed"]


# ---------------------------------------------------------------------------
# reports


def test_report_round_trip(tmp_path):
    rep = L.make_report("demo", {"N": np.int64(4)}, [1], {"slope": np.float64(1.5), "x": [np.nan]},
                        {"ok": np.True_, "other": True})
    assert rep["schema"] == 1 and rep["passed"] is True
    L.write_report(tmp_path / "r.json", rep)
    back = json.loads((tmp_path / "r.json").read_text())
    assert back["metrics"]["slope"] == 1.5
    assert back["metrics"]["x"] == ["nan"]
    assert back["params"]["N"] == 4
    assert not L.make_report("d", {}, [], {}, {"a": False})["passed"]
