"""Command-line driver: ``hermchaos run <kind> [flags]`` and ``hermchaos presets``.

Every run writes the fully resolved configuration (config.json), a JSON report
with pass/fail per criterion (report.json) and CSV series into --out.  Exit
codes: 0 ok, 2 schema or kernel-validation error, 3 numerical failure, 4
resource cap.  A failed criterion is reported, not an error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from copy import deepcopy

import numpy as np
import yaml

from . import chaos as C
from . import fracfilter as FF
from . import kernels as K
from . import limits as LM
from . import spectral as SP
from ._quad import QuadratureError

KINDS = ("validate", "simulate", "acf", "scaling", "clt", "filter", "limit-kernel",
         "spectral", "multivariate")
KERNEL_FORMS = ("product", "norm_power", "ratio_product", "max_combo", "finite")

EXIT_OK, EXIT_SCHEMA, EXIT_NUMERIC, EXIT_CAP = 0, 2, 3, 4

PRESETS = {
    "hermite-k1-d03": {"kernel": "product", "gamma": [-0.7], "M": 100000,
                       "about": "order-1 power kernel, H = 0.8"},
    "nonsym-rosenblatt": {"kernel": "product", "gamma": [-0.75, -0.625], "M": 1500,
                          "about": "non-symmetric order-2 product kernel, H = 0.625"},
    "hermite-k2-sym": {"kernel": "product", "gamma": [-0.7, -0.7], "symmetric": True, "M": 1500,
                       "about": "Rosenblatt-type symmetric product kernel, H = 0.6"},
    "maxcombo-k2": {"kernel": "max_combo", "k": 2, "alpha": -1.2, "M": 400,
                    "about": "max of ratio and product forms, H = 0.8"},
    "normpower-k2": {"kernel": "norm_power", "k": 2, "alpha": -1.2, "M": 400,
                     "about": "Euclidean-norm power kernel, H = 0.8"},
    "ratio-k2": {"kernel": "ratio_product", "a": [0.3, 0.3], "b": 1.8, "M": 400,
                 "about": "product over sum of powers, H = 0.8"},
    "srd-linear-k1": {"kernel": "finite", "coefficients": [[1, 1.0]],
                      "about": "i.i.d. noise, the order-1 SRD block"},
    "srd-finite-k2": {"kernel": "finite", "coefficients": [[1, 2, 0.5], [2, 1, 0.5]],
                      "about": "finite-support order-2 SRD, sigma^2 = 1"},
}

DEFAULTS = {
    "kind": None, "preset": None, "kernel": None, "gamma": None, "alpha": None, "k": None,
    "a": None, "b": None, "symmetric": False, "coefficients": None, "M": 100,
    "N": [1024], "reps": 1000, "seed": 0, "noise": "gaussian", "beta": None,
    "filter_family": None, "filter_length": None, "out": None, "tol": None, "lags": 200,
    "t": 1.0, "tail": "clip", "components": None, "max_elements": 50_000_000,
}

DEFAULT_TOL = {"acf": 0.05, "scaling": 0.03, "scaling_filtered": 0.1, "clt": 0.02,
               "limit-kernel": 0.05, "spectral": 1e-3, "multivariate": 0.03}


class SchemaError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration


def parse_grid(text):
    """'256..16384' (powers of two), '64,128,256' or a single integer."""
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    if isinstance(text, int):
        return [text]
    s = str(text).strip()
    try:
        if ".." in s:
            lo, hi = (int(v) for v in s.split(".."))
            if lo < 1 or hi < lo:
                raise SchemaError(f"bad grid {s!r}")
            out, n = [], lo
            while n <= hi:
                out.append(n)
                n *= 2
            return out
        return [int(v) for v in s.split(",") if v]
    except ValueError as exc:
        raise SchemaError(f"bad grid {s!r}") from exc


def _floats(v):
    if v is None:
        return None
    if isinstance(v, (int, float)):
        return [float(v)]
    if isinstance(v, str):
        return [float(x) for x in v.split(",") if x]
    return [float(x) for x in v]


def load_config_file(path) -> dict:
    with open(path) as fh:
        text = fh.read()
    data = json.loads(text) if path.endswith(".json") else yaml.safe_load(text)
    if not isinstance(data, dict):
        raise SchemaError("config file must hold a mapping")
    return data


def resolve(overrides: dict) -> dict:
    """defaults < preset < config file < flags."""
    cfg = deepcopy(DEFAULTS)
    file_part = {}
    if overrides.get("config"):
        file_part = load_config_file(overrides["config"])
    preset = overrides.get("preset") or file_part.get("preset")
    if preset is not None:
        if preset not in PRESETS:
            raise SchemaError(f"unknown preset {preset!r}")
        cfg.update({k: v for k, v in PRESETS[preset].items() if k != "about"})
    for part in (file_part, overrides):
        for key, v in part.items():
            if key == "config" or v is None:
                continue
            if key not in DEFAULTS:
                raise SchemaError(f"unknown config key {key!r}")
            cfg[key] = v
    cfg["preset"] = preset
    validate_schema(cfg)
    return cfg


def validate_schema(cfg: dict) -> None:
    if cfg["kind"] not in KINDS:
        raise SchemaError(f"kind must be one of {KINDS}")
    cfg["N"] = parse_grid(cfg["N"])
    cfg["gamma"] = _floats(cfg["gamma"])
    cfg["a"] = _floats(cfg["a"])
    for key in ("M", "reps", "seed", "lags", "max_elements"):
        try:
            cfg[key] = int(cfg[key])
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"{key} must be an integer") from exc
    for key in ("alpha", "b", "beta", "tol", "t"):
        if cfg[key] is not None:
            try:
                cfg[key] = float(cfg[key])
            except (TypeError, ValueError) as exc:
                raise SchemaError(f"{key} must be a number") from exc
    if cfg["k"] is not None:
        cfg["k"] = int(cfg["k"])
    if cfg["filter_length"] is not None:
        cfg["filter_length"] = int(cfg["filter_length"])
    if min(cfg["N"]) < 1 or cfg["M"] < 1 or cfg["reps"] < 1 or cfg["lags"] < 1:
        raise SchemaError("N, M, reps and lags must be positive")
    if cfg["noise"] not in C.LAWS:
        raise SchemaError(f"noise must be one of {C.LAWS}")
    if cfg["tail"] not in ("clip", "analytic"):
        raise SchemaError("tail must be clip or analytic")
    if cfg["filter_family"] not in (None, FF.PURE_POWER, FF.TELESCOPING):
        raise SchemaError("filter_family must be pure_power or telescoping")
    form = cfg["kernel"]
    needs_kernel = cfg["kind"] not in ("multivariate",) and not (
        cfg["kind"] == "filter" and cfg["beta"] is not None and form is None)
    if form is None:
        if needs_kernel:
            raise SchemaError("no kernel given (use --kernel or --preset)")
        return
    if form not in KERNEL_FORMS:
        raise SchemaError(f"kernel must be one of {KERNEL_FORMS}")
    if form == "product" and not cfg["gamma"]:
        raise SchemaError("product kernels need --gamma")
    if form in ("norm_power", "max_combo") and (cfg["k"] is None or cfg["alpha"] is None):
        raise SchemaError(f"{form} kernels need --k and --alpha")
    if form == "ratio_product" and (not cfg["a"] or cfg["b"] is None):
        raise SchemaError("ratio_product kernels need a and b")
    if form == "finite" and not cfg["coefficients"]:
        raise SchemaError("finite configurations need coefficients [[i_1, .., i_k, value], ..]")


def build_kernel(cfg: dict) -> K.KernelSpec:
    form = cfg["kernel"]
    if form == "product":
        return K.product(cfg["gamma"], symmetric=bool(cfg["symmetric"]))
    if form == "norm_power":
        return K.norm_power(cfg["k"], cfg["alpha"])
    if form == "ratio_product":
        spec = K.ratio_product(cfg["a"], cfg["b"])
        return K.symmetrize(spec) if cfg["symmetric"] else spec
    if form == "max_combo":
        return K.max_combo(cfg["k"], cfg["alpha"])
    raise SchemaError(f"{form} is not a kernel form")


def build_chaos(cfg: dict) -> C.ChaosConfig:
    noise = C.NoiseSpec(cfg["noise"], cfg["seed"])
    if cfg["kernel"] == "finite":
        try:
            coeffs = {tuple(int(i) for i in row[:-1]): float(row[-1]) for row in cfg["coefficients"]}
        except (TypeError, ValueError, IndexError) as exc:
            raise SchemaError("coefficients must be rows [i_1, .., i_k, value]") from exc
        return C.finite_config(coeffs, noise)
    kernel = K.require_valid(build_kernel(cfg))
    return C.ChaosConfig(kernel=kernel, M=cfg["M"], noise=noise, max_elements=cfg["max_elements"])


def build_filter_spec(cfg: dict):
    if cfg["beta"] is None:
        return None
    length = cfg["filter_length"] or FF.DEFAULT_LENGTH
    try:
        return FF.FilterSpec(cfg["beta"], cfg["filter_family"], length)
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc


def _tol(cfg, key):
    return cfg["tol"] if cfg["tol"] is not None else DEFAULT_TOL[key]


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


# ---------------------------------------------------------------------------
# experiments; each returns (metrics, criteria)


def run_validate(cfg, out):
    spec = build_kernel(cfg)
    rep = K.validate(spec, seed=cfg["seed"])
    metrics = {"checks": rep.to_dict(), "hurst": K.hurst(spec) if rep.ok else None}
    if rep.ok:
        c = K.default_c(spec)
        metrics.update(C_g=c.value, C_g_error=c.error_estimate, C_g_method=c.method)
    return metrics, {"valid": rep.ok}


def run_simulate(cfg, out):
    config = build_chaos(cfg)
    if cfg["reps"] <= 1 or config.is_finite:
        N = cfg["N"][0]
        X = C.simulate(config, N, C.default_mode(config))
        C.write_path_csv(os.path.join(out, "path.csv"), X)
        return {"N": N, "mean": float(X.mean()), "variance": float(X.var())}, {}
    # ensembles of Y_N(1) and their p = 3 moment ratio
    rows, ratios = [], []
    for N in cfg["N"]:
        res = LM.simulate_limit_process(config, [1.0], N, cfg["reps"])
        r = LM.moment_ratio(res.samples[:, 0], 3)
        ratios.append(r)
        rows.append((N, res.summary["variance"], LM.exact_limit_variance(config, N), r))
    _write_rows(os.path.join(out, "moments.csv"), ["N", "variance", "exact_variance", "ratio_p3"], rows)
    metrics = {"N": cfg["N"], "variances": [r[1] for r in rows], "exact_variances": [r[2] for r in rows],
               "ratios": ratios}
    return metrics, {"moment_ratio_in_band": all(0.5 <= r <= 8 for r in ratios)}


def run_acf(cfg, out):
    config = build_chaos(cfg)
    n = cfg["lags"]
    res = C.acf_exact(config, n, tail=cfg["tail"])
    lags = np.arange(n + 1)
    if config.is_finite:
        asym = np.full(n + 1, np.nan)
        ratio = np.full(n + 1, np.nan)
    else:
        with np.errstate(divide="ignore"):
            asym = np.asarray(C.acf_asymptote(config, np.maximum(lags, 1)), dtype=float)
        asym[0] = np.nan
        ratio = res.gamma / asym
    C.write_acf_csv(os.path.join(out, "acf.csv"), res.gamma, asym, res.trunc_bound)
    metrics = {"route": res.route, "tail": res.tail, "gamma0": float(res.gamma[0])}
    crit = {}
    if not config.is_finite:
        window = slice(max(1, n // 4), n + 1)
        r = ratio[window]
        tol = _tol(cfg, "acf")
        metrics["ratios"] = [float(v) for v in r]
        metrics["ratio_range"] = [float(r.min()), float(r.max())]
        crit["ratio_within_tol"] = bool(np.all(np.abs(r - 1) <= tol))
    return metrics, crit


def run_scaling(cfg, out):
    config = build_chaos(cfg)
    filt = build_filter_spec(cfg)
    tail = cfg["tail"] if cfg["tail"] != "clip" else None
    fit = LM.variance_scaling_fit(config, cfg["N"], filt=filt, tail=tail)
    tol = _tol(cfg, "scaling_filtered" if filt else "scaling")
    _write_rows(os.path.join(out, "scaling.csv"), ["N", "variance"], zip(fit.Ns, fit.variances))
    metrics = fit.to_dict()
    return metrics, {"slope_within_tol": abs(fit.slope - fit.expected_slope) <= tol}


def run_clt(cfg, out):
    config = build_chaos(cfg)
    N = cfg["N"][0]
    res, rep = LM.clt_ensemble(config, N, cfg["reps"])
    _write_rows(os.path.join(out, "samples.csv"), ["r", "Y"], enumerate(res.samples))
    metrics = dict(res.summary, sigma2=rep.sigma2, variance_ratio=rep.variance_ratio,
                   ks_threshold_1pct=rep.ks_threshold, N=N, R=cfg["reps"])
    return metrics, {"ks_below_tol": rep.ks < _tol(cfg, "clt"),
                     "variance_within_5pct": abs(rep.variance_ratio - 1) < 0.05}


def run_filter(cfg, out):
    spec = build_filter_spec(cfg)
    if spec is None:
        raise SchemaError("filter runs need --beta")
    FF.write_filter_csv(os.path.join(out, "filter.csv"), spec)
    coeffs = spec.coefficients
    n = min(10_000, spec.length)
    rv = float(coeffs[n - 1] * n ** (1 - spec.beta))
    metrics = {"family": spec.family, "length": spec.length, "regular_variation_at": n,
               "regular_variation": rv, "tail": FF.filter_tail_bound(spec)}
    crit = {"regular_variation_within_2pct": abs(rv - 1) <= 0.02}
    if spec.family == FF.TELESCOPING:
        ps = np.cumsum(coeffs)
        exact = FF.partial_sums(spec.beta, spec.length)
        err = float(np.max(np.abs(ps - exact) / np.abs(exact)))
        metrics["partial_sum_rel_error"] = err
        crit["partial_sums_exact"] = err < 1e-12
    if cfg["kernel"] not in (None, "finite"):
        kernel = K.require_valid(build_kernel(cfg))
        FF.check_beta(kernel, spec.beta)
        metrics["hurst"] = FF.filtered_hurst(kernel, spec.beta)
        metrics["h_beta_norm_sq"] = FF.h_beta_norm_sq(kernel, spec.beta, cfg["t"])
    return metrics, crit


def run_limit_kernel(cfg, out):
    kernel = K.require_valid(build_kernel(cfg))
    rows, errs = [], []
    for N in cfg["N"]:
        e = LM.l2_discretization_error(kernel, cfg["t"], N)
        errs.append(e.relative)
        rows.append((N, e.relative, e.outside_mass))
    _write_rows(os.path.join(out, "l2_error.csv"), ["N", "relative_error", "outside_mass"], rows)
    mono = all(b <= a * 1.01 for a, b in zip(errs, errs[1:]))
    return ({"N": cfg["N"], "errors": errs},
            {"nonincreasing": mono, "final_below_tol": errs[-1] < _tol(cfg, "limit-kernel")})


def run_spectral(cfg, out):
    kernel = K.require_valid(build_kernel(cfg))
    k = kernel.k
    rng = np.random.default_rng(cfg["seed"])
    U = np.round(rng.uniform(-4, 4, size=(32, k)), 6)
    U[np.abs(U) < 1e-3] = 0.5
    closed = SP.has_closed_form(kernel)
    if closed:
        g = SP.ghat(kernel, U)
    else:
        g = np.array([SP.ghat_stabilized(kernel, u, 1e4) for u in U])
    SP.write_spectral_csv(os.path.join(out, "spectral.csv"), kernel, cfg["t"], U, g)
    homog = SP.ghat_homogeneity_check(kernel, U[:4], numeric=not closed)
    tol = _tol(cfg, "spectral") if k == 1 else max(_tol(cfg, "spectral"), 1e-2)
    metrics = {"closed_form": closed, "homogeneity_deviation": homog}
    crit = {"homogeneity": homog < (1e-10 if closed else 0.02)}
    if k <= 2:
        pl = SP.plancherel_check(kernel, cfg["t"], cfg["beta"])
        metrics["plancherel_rel_error"] = pl
        crit["plancherel_within_tol"] = pl < tol
    return metrics, crit


def run_multivariate(cfg, out):
    comps_cfg = cfg["components"] or [{"preset": "srd-linear-k1", "tag": "S1"},
                                      {"preset": "srd-finite-k2", "tag": "S2"}]
    comps = []
    for i, item in enumerate(comps_cfg):
        if not isinstance(item, dict) or "tag" not in item:
            raise SchemaError("components are mappings with a tag and a preset or kernel fields")
        sub = deepcopy(DEFAULTS)
        if item.get("preset"):
            if item["preset"] not in PRESETS:
                raise SchemaError(f"unknown preset {item['preset']!r}")
            sub.update({k: v for k, v in PRESETS[item["preset"]].items() if k != "about"})
        sub.update({k: v for k, v in item.items() if k in DEFAULTS and k != "preset"})
        sub.update(kind="simulate", seed=cfg["seed"], noise=cfg["noise"])
        validate_schema(sub)
        try:
            comps.append(LM.Component(build_chaos(sub), item["tag"], build_filter_spec(sub),
                                      name=item.get("name") or f"{item['tag']}{i}"))
        except ValueError as exc:
            raise SchemaError(str(exc)) from exc
    rep = LM.multivariate_mixed_check(comps, cfg["N"][0], cfg["reps"], seed=cfg["seed"],
                                      threshold=_tol(cfg, "multivariate"))
    samples = rep.pop("samples", None)
    if samples is not None:
        _write_rows(os.path.join(out, "sums.csv"), ["r"] + rep["components"],
                    ([r] + list(row) for r, row in enumerate(samples)))
    return rep, {"independence": rep["passed"]}


RUNNERS = {"validate": run_validate, "simulate": run_simulate, "acf": run_acf,
           "scaling": run_scaling, "clt": run_clt, "filter": run_filter,
           "limit-kernel": run_limit_kernel, "spectral": run_spectral,
           "multivariate": run_multivariate}


def execute(cfg: dict) -> tuple:
    """Run a resolved config; returns (exit code, report)."""
    out = cfg["out"] or os.path.join("runs", cfg["kind"])
    os.makedirs(out, exist_ok=True)
    LM.write_report(os.path.join(out, "config.json"), cfg)
    params = {k: v for k, v in cfg.items() if k not in ("out",)}
    seeds = {"seed": cfg["seed"], "streams": [0, cfg["reps"]]}
    try:
        metrics, criteria = RUNNERS[cfg["kind"]](cfg, out)
        code = EXIT_OK
    except K.KernelValidationError as exc:
        metrics, criteria, code = {"error": str(exc), "checks": exc.report.to_dict()}, {"valid": False}, EXIT_SCHEMA
    except C.ResourceCapError as exc:
        metrics, criteria, code = {"error": str(exc)}, {}, EXIT_CAP
    except (SchemaError, K.KernelDomainError, NotImplementedError) as exc:
        metrics, criteria, code = {"error": str(exc)}, {}, EXIT_SCHEMA
    except (QuadratureError, SP.SpectralConvergenceError, C.NotSRDError, FloatingPointError,
            ArithmeticError) as exc:
        metrics, criteria, code = {"error": f"{type(exc).__name__}: {exc}"}, {}, EXIT_NUMERIC
    except ValueError as exc:
        metrics, criteria, code = {"error": str(exc)}, {}, EXIT_SCHEMA
    if cfg["kind"] == "validate" and not criteria.get("valid", True):
        code = EXIT_SCHEMA
    report = LM.make_report(cfg["kind"], params, seeds, metrics, criteria)
    LM.write_report(os.path.join(out, "report.json"), report)
    return code, report


# ---------------------------------------------------------------------------
# entry point


def list_presets() -> list:
    return [(name, {k: v for k, v in p.items() if k != "about"}, p["about"])
            for name, p in PRESETS.items()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hermchaos", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("presets", help="list named configurations")
    r = sub.add_parser("run", help="run one experiment")
    r.add_argument("kind", nargs="?", choices=KINDS)
    r.add_argument("--config", help="JSON or YAML file mirroring the flags")
    r.add_argument("--preset")
    r.add_argument("--kernel", choices=KERNEL_FORMS)
    r.add_argument("--gamma", help="comma-separated exponents")
    r.add_argument("--alpha", type=float)
    r.add_argument("--k", type=int)
    r.add_argument("--a", help="comma-separated numerator exponents (ratio_product)")
    r.add_argument("--b", type=float)
    r.add_argument("--symmetric", action="store_true", default=None)
    r.add_argument("--M", type=int)
    r.add_argument("--N", help="grid: 256..16384, 64,128 or a single value")
    r.add_argument("--reps", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--noise", choices=C.LAWS)
    r.add_argument("--beta", type=float)
    r.add_argument("--filter-family", dest="filter_family", choices=(FF.PURE_POWER, FF.TELESCOPING))
    r.add_argument("--filter-length", dest="filter_length", type=int)
    r.add_argument("--tail", choices=("clip", "analytic"))
    r.add_argument("--lags", type=int)
    r.add_argument("--max-elements", dest="max_elements", type=int)
    r.add_argument("--t", type=float)
    r.add_argument("--tol", type=float)
    r.add_argument("--out")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "presets":
        for name, params, about in list_presets():
            print(f"{name:20s} {about}\n{'':20s} {json.dumps(params, sort_keys=True)}")
        return EXIT_OK
    overrides = {k: v for k, v in vars(args).items() if k != "command"}
    try:
        cfg = resolve(overrides)
    except (SchemaError, OSError, yaml.YAMLError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    code, report = execute(cfg)
    status = "error" if code else ("pass" if report["passed"] else "fail")
    print(f"{cfg['kind']}: {status}")
    for name, ok in report["criteria"].items():
        print(f"  {name}: {'pass' if ok else 'FAIL'}")
    if "error" in report["metrics"]:
        print(f"  error: {report['metrics']['error']}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
