"""The closed registry of experiments driven by the command line.

Each experiment returns an :class:`ExperimentResult` holding a table of rows,
a list of named checks and summary values.  Writing files is left to
:mod:`hilbertsgd.cli`.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import __version__
from .analysis import (
    BoundCheck,
    avg_upper_bound,
    check_avg_upper_bound,
    f_lambda_extended_verify,
    f_lambda_verify,
    fit_decay_rate,
    gamma_series_verify,
    holder_verify,
    lower_bound_probe,
    moment_bound_verify,
    neutral_recursion_verify,
    sgd_rate_report,
)
from .core import InvalidParameterError, make_spectrum, phi_norm, power_law_vector, regularity
from .dynamics import (
    IterationConfig,
    ensemble,
    geometric_schedule,
    martingale_diagnostic,
    mean_iterate,
    recursion_check,
)
from .sampler import KINDS, SamplerSpec, assumption3_constant, fourth_moments

EXPERIMENTS = ("mean-rate", "sgd-rate", "recursion", "lemmas", "as-convergence", "assumption3")

SERIES_COLUMNS = ("n", "beta", "mean", "stderr", "bound", "replicas")
LEMMA_COLUMNS = ("check", "violations", "worst_margin", "passed")

_DEFAULTS = {
    "mean-rate": dict(d=5000, gamma=1.0, n_steps=10_000, betas=[0.0],
                      bound_betas=[0.5, 1.0, 1.4]),
    "sgd-rate": dict(d=100, sampler="gamma-sym", n_steps=10_000, n_replicas=100,
                     betas=[0.0, 1.0]),
    "recursion": dict(d=200, sampler="gff", gamma=0.5, betas=[0.0]),
    "lemmas": dict(d=20, sampler="gamma-sym"),
    "as-convergence": dict(d=20, sampler="coordinate-bounded", n_steps=100_000,
                           n_replicas=50, betas=[0.0]),
    "assumption3": dict(d=20, sampler="gamma-sym", betas=[0.0, 0.3, 0.45]),
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str
    family: str = "power-law"
    c: float = 0.4
    p: float = 2.0
    r: float = 0.5
    eigenvalues: list = field(default_factory=list)
    d: int | None = None
    s: float = 2.0
    sampler: str | None = None
    gamma: float | None = None
    gamma_scale: float = 1.0
    n_steps: int = 10_000
    n_replicas: int = 1
    seed: int = 0
    betas: list | None = None
    bound_betas: list = field(default_factory=lambda: [0.5, 1.0, 1.4])
    kappa: float = 0.0
    beta_target: float = 1.0
    window: list = field(default_factory=lambda: [100, 10_000])
    n_max: int = 100_000
    n_samples: int = 100_000
    martingale_replicas: int = 10_000
    out: str | None = None

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        exp = data.get("experiment")
        if exp not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {', '.join(EXPERIMENTS)}; got {exp!r}")
        # a [<experiment>] table overrides top-level keys
        for name in EXPERIMENTS:
            section = data.pop(name, None)
            if name == exp and section is not None:
                if not isinstance(section, dict):
                    raise ConfigError(f"[{name}] must be a table")
                data.update(section)
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        merged = dict(_DEFAULTS[exp])
        merged.update(data)
        cfg = cls(**merged)
        cfg.validate()
        if cfg.betas is not None:
            cfg.betas = [float(b) for b in cfg.betas]
        cfg.bound_betas = [float(b) for b in cfg.bound_betas]
        return cfg

    def validate(self):
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(self.family in ("power-law", "geometric", "explicit"),
             f"family must be power-law, geometric or explicit; got {self.family!r}")
        need(self.d is not None and int(self.d) >= 1, "d must be an integer >= 1")
        need(self.gamma is None or (_is_num(self.gamma) and self.gamma > 0),
             f"gamma must be > 0 (got {self.gamma})")
        need(_is_num(self.gamma_scale) and self.gamma_scale > 0, "gamma_scale must be > 0")
        need(int(self.n_steps) >= 1, "n_steps must be >= 1")
        need(int(self.n_replicas) >= 1, "n_replicas must be >= 1")
        need(0 <= int(self.seed) < 2**64, "seed must be a 64-bit unsigned integer")
        need(self.sampler is None or self.sampler in KINDS,
             f"sampler must be one of {', '.join(KINDS)}")
        need(_is_num(self.s) and self.s > 0.5, "s must be > 1/2")
        need(int(self.n_samples) >= 100, "n_samples must be >= 100")
        for b in (self.betas or []) + list(self.bound_betas):
            need(_is_num(b) and math.isfinite(b), f"beta values must be finite numbers; got {b!r}")
        need(len(self.window) == 2 and self.window[0] < self.window[1],
             "window must be [n_min, n_max] with n_min < n_max")
        if self.family == "power-law":
            need(self.c > 0 and self.p > 0, "power-law needs c > 0 and p > 0")
        elif self.family == "geometric":
            need(self.c > 0 and 0 < self.r <= 1, "geometric needs c > 0 and 0 < r <= 1")
        else:
            need(len(self.eigenvalues) >= int(self.d), "explicit family needs d eigenvalues")

    def resolved(self) -> dict:
        return asdict(self)

    def spectrum(self):
        if self.family == "power-law":
            params = (self.c, self.p)
        elif self.family == "geometric":
            params = (self.c, self.r)
        else:
            params = tuple(self.eigenvalues)
        try:
            return make_spectrum(self.family, params, int(self.d))
        except InvalidParameterError as exc:
            raise ConfigError(str(exc)) from None

    def sampler_spec(self, kind=None, spectrum=None, seed=None):
        return SamplerSpec(kind or self.sampler, spectrum or self.spectrum(),
                           int(self.seed if seed is None else seed))

    def theta0(self, spectrum):
        return power_law_vector(self.s, spectrum.dim)


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    target: str
    passed: bool


@dataclass
class ExperimentResult:
    experiment: str
    columns: tuple
    rows: list
    checks: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def failed(self):
        return [c for c in self.checks if not c.passed]


def _check(result, name, value, target, passed):
    result.checks.append(Check(name, float(value), target, bool(passed)))


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    return _RUNNERS[cfg.experiment](cfg)


def _mean_rate(cfg):
    sp = cfg.spectrum()
    th = cfg.theta0(sp)
    gamma = cfg.gamma
    res = ExperimentResult("mean-rate", SERIES_COLUMNS, [])
    steps = geometric_schedule(int(cfg.n_steps))
    betas = cfg.betas or [0.0]
    for kappa in betas:
        for n in steps:
            n = int(n)
            val = phi_norm(mean_iterate(th, sp, gamma, n), sp, kappa)
            cands = [avg_upper_bound(th, sp, gamma, b, kappa, n)
                     for b in cfg.bound_betas if b > kappa]
            bound = min(cands) if cands else math.nan
            res.rows.append((n, kappa, val, 0.0, bound, 0))

    kappa = cfg.kappa
    series = {int(n): phi_norm(mean_iterate(th, sp, gamma, int(n)), sp, kappa) for n in steps}
    rate = fit_decay_rate(series, window=tuple(cfg.window))
    res.summary.update(exponent=rate.exponent, exponent_stderr=rate.stderr,
                       points_used=rate.points_used)
    rep = regularity(sp, cfg.s, betas=())
    if rep.alpha_theta is not None and math.isfinite(rep.alpha_theta):
        target = -(rep.alpha_theta - kappa)
        _check(res, "fitted_exponent", rate.exponent, f"{target:.6g} +- 0.15",
               abs(rate.exponent - target) <= 0.15)
    bc = check_avg_upper_bound(th, sp, gamma, cfg.bound_betas, kappa, steps[1:])
    _check(res, "avg_upper_bound_violations", bc.violations, "0", bc.passed)
    if rep.alpha_theta is not None:
        above = rep.alpha_theta + 0.5
        below = max(kappa + 0.1, rep.alpha_theta - 0.5)
        for beta, want in ((above, "unbounded"), (below, "bounded")):
            probe = lower_bound_probe(th, sp, gamma, beta, kappa, "power", cfg.n_max)
            _check(res, f"lower_bound_probe_beta={beta:g}", probe.growth,
                   want, probe.verdict == want)
    return res


def _iteration_config(cfg, sp, kind, gamma, n_replicas=None, betas=None):
    return IterationConfig(gamma, int(cfg.n_steps), cfg.theta0(sp), cfg.sampler_spec(kind, sp),
                           n_replicas=int(n_replicas or cfg.n_replicas),
                           record_betas=tuple(betas if betas is not None else (cfg.betas or [0.0])))


def _sgd_rate(cfg):
    sp = cfg.spectrum()
    bt = cfg.beta_target
    gamma = cfg.gamma or cfg.gamma_scale / (sp.K(bt) + 1.0)
    betas = sorted(set((cfg.betas or [0.0]) + [cfg.kappa]))
    it = _iteration_config(cfg, sp, cfg.sampler, gamma, betas=betas)
    stats = ensemble(it)
    res = ExperimentResult("sgd-rate", SERIES_COLUMNS, [])
    for b in stats.mean:
        for k, n in enumerate(stats.steps):
            bound = phi_norm(mean_iterate(it.theta0, sp, gamma, int(n)), sp, b)
            res.rows.append((int(n), b, stats.mean[b][k], stats.stderr[b][k], bound,
                             int(stats.count[k])))
    _check(res, "diverged_replicas", stats.n_diverged,
           "0" if not stats.diverged else "0; diverged: " + " ".join(map(str, stats.diverged)),
           stats.n_diverged == 0)
    rep = sgd_rate_report(stats, bt, tuple(cfg.window), kappa=cfg.kappa)
    res.summary.update(gamma=gamma, exponent=rep.rate.exponent,
                       exponent_stderr=rep.rate.stderr,
                       mean_iterate_exponent=rep.mean_iterate_rate.exponent)
    _check(res, "fitted_exponent", rep.rate.exponent,
           f"<= {-(bt - cfg.kappa - rep.slack):.6g}", rep.rate_ok)
    _check(res, "jensen_min_z", rep.jensen_min_z, ">= -4", rep.jensen_ok)
    if bt in stats.mean:
        _, m, se = stats.series(bt)
        slack = np.diff(m) - 2 * np.hypot(se[1:], se[:-1])
        worst = float(slack.max()) if slack.size else 0.0
        _check(res, f"phi_{bt:g}_non_increasing", worst, "<= 0 (2 SE)", worst <= 0)
    return res


def _recursion(cfg):
    sp = cfg.spectrum()
    spec = cfg.sampler_spec(cfg.sampler, sp)
    th = cfg.theta0(sp)
    res = ExperimentResult("recursion", SERIES_COLUMNS, [])
    for b in cfg.betas or [0.0]:
        rc = recursion_check(th, spec, cfg.gamma, b, int(cfg.n_samples))
        res.rows.append((int(cfg.n_samples), b, rc.lhs, rc.lhs_se, rc.rhs, 0))
        if rc.exact:
            _check(res, f"recursion_beta={b:g}_relative", rc.relative_discrepancy,
                   "<= 1e-10", rc.relative_discrepancy <= 1e-10)
        else:
            _check(res, f"recursion_beta={b:g}_se", rc.discrepancy_se, "<= 3",
                   rc.discrepancy_se <= 3)
    return res


def _as_convergence(cfg):
    sp = cfg.spectrum()
    M = sp.trace()
    kind = cfg.sampler
    res = ExperimentResult("as-convergence", SERIES_COLUMNS, [])
    if kind == "coordinate-bounded":
        gamma = cfg.gamma or cfg.gamma_scale / M
    else:
        rep4 = _fourth_norm_moment(cfg.sampler_spec(kind, sp))
        gamma = cfg.gamma or cfg.gamma_scale * 0.5 * sp.eigenvalues[-1] / rep4
    it = _iteration_config(cfg, sp, kind, gamma, betas=[0.0])
    stats = ensemble(it)
    n0 = phi_norm(it.theta0, sp, 0.0)
    for k, n in enumerate(stats.steps):
        res.rows.append((int(n), 0.0, stats.mean[0.0][k], stats.stderr[0.0][k], n0,
                         int(stats.count[k])))
    res.summary.update(gamma=gamma, gamma_times_M=gamma * M)
    _check(res, "diverged_replicas", stats.n_diverged, "0", stats.n_diverged == 0)
    if kind == "coordinate-bounded" and gamma <= 2 / M:
        n_mono = int(np.count_nonzero(stats.monotone))
        _check(res, "pathwise_monotone_replicas", n_mono, f"{it.n_replicas}",
               n_mono == it.n_replicas)
    ratio = stats.mean[0.0][-1] / n0
    _check(res, "final_norm_ratio", ratio, "< 1e-3", ratio < 1e-3)

    mcfg = IterationConfig(gamma=0.5 / M, n_steps=101, theta0=it.theta0,
                           sampler=cfg.sampler_spec("gff", sp),
                           n_replicas=int(cfg.martingale_replicas), record_betas=())
    mart = martingale_diagnostic(mcfg, steps=[1, 10, 100])
    for n, m, se in zip(mart.steps, mart.mean, mart.stderr):
        z = abs(m) / se if se > 0 else (0.0 if m == 0 else math.inf)
        _check(res, f"martingale_mean_n={int(n)}", z, "<= 3 SE", z <= 3)
    return res


def _fourth_norm_moment(spec):
    # E||x||**4 = sum_i E x_i**4 + sum_{i != j} lambda_i lambda_j (independent coordinates)
    lam = spec.spectrum.eigenvalues
    t = spec.spectrum.trace()
    return math.fsum(fourth_moments(spec)) + t * t - math.fsum(lam * lam)


def _assumption3(cfg):
    sp = cfg.spectrum()
    spec = cfg.sampler_spec(cfg.sampler, sp)
    res = ExperimentResult("assumption3", SERIES_COLUMNS, [])
    for b in cfg.betas or [0.0]:
        est = assumption3_constant(spec, b, n_samples=int(cfg.n_samples))
        bound = est.analytic if est.analytic is not None else math.nan
        res.rows.append((int(cfg.n_samples), b, est.ratio, est.stderr, bound,
                         len(est.probe_ratios)))
        exact_sup = float(est.probe_exact.max())
        z = abs(est.ratio - exact_sup) / est.stderr if est.stderr > 0 else 0.0
        _check(res, f"sup_ratio_beta={b:g}_vs_exact", z, "<= 4 SE", z <= 4)
        if est.analytic is not None:
            ok = (est.ratio <= est.analytic + 4 * est.stderr
                  and exact_sup <= est.analytic * (1 + 1e-12))
            _check(res, f"sup_ratio_beta={b:g}_below_K+1", est.ratio,
                   f"<= {est.analytic:.6g} + 4 SE", ok)
    return res


def lemma_checks(cfg):
    """All lemma verifiers with their default grids, as ``BoundCheck`` objects."""
    checks = []
    for m in (2, 5, 20, 100, 1000):
        for tau in (0.1, 0.5, 1.0, 1.5, 2.0):
            checks.append(f_lambda_verify(m, tau, 100_000))
    checks.append(f_lambda_extended_verify(200, 2.0, 0.5))
    checks.append(f_lambda_extended_verify(200, 1.0, 0.5))
    gs = gamma_series_verify(n_terms=20_000)
    gs2 = gamma_series_verify(n_terms=40_000)
    checks.append(gs)
    lo, hi = gs.extras["min_ratio"], gs.extras["max_ratio"]
    lo2, hi2 = gs2.extras["min_ratio"], gs2.extras["max_ratio"]
    drift = max(abs(lo2 / lo - 1), abs(hi2 / hi - 1))
    checks.append(BoundCheck("gamma_series_stability", (20_000, 40_000),
                             int(drift > 0.01), 0.01 - drift, {"drift": drift}))
    checks.append(neutral_recursion_verify(0.9, 0.5, 100_000))
    checks.append(holder_verify(make_spectrum("power-law", (cfg.c, cfg.p), 100), 1000))
    for kind, d in (("gamma-sym", 100), ("gff", 50), ("coordinate-bounded", 50)):
        spec = SamplerSpec(kind, make_spectrum("power-law", (cfg.c, cfg.p), d), int(cfg.seed))
        bc = moment_bound_verify(spec, int(cfg.n_samples))
        checks.append(BoundCheck(f"moment_bound[{kind}]", bc.grid, bc.violations,
                                 bc.worst_margin, bc.extras))
    sp = make_spectrum("power-law", (cfg.c, cfg.p), int(cfg.d))
    spec = SamplerSpec("gamma-sym", sp, int(cfg.seed))
    for b in (0.3, 0.45):
        est = assumption3_constant(spec, b, n_samples=int(cfg.n_samples))
        exact_sup = float(est.probe_exact.max())
        margin_exact = 4 * est.stderr - abs(est.ratio - exact_sup)
        margin_bound = est.analytic + 4 * est.stderr - est.ratio
        viol = int(margin_exact < 0) + int(margin_bound < 0)
        viol += int(exact_sup > est.analytic * (1 + 1e-12))
        checks.append(BoundCheck(f"assumption3[gamma-sym,beta={b:g}]", (b, int(cfg.n_samples)),
                                 viol, min(margin_exact, margin_bound),
                                 {"ratio": est.ratio, "stderr": est.stderr,
                                  "K+1": est.analytic, "exact_sup": exact_sup}))
    return checks


def _lemmas(cfg):
    res = ExperimentResult("lemmas", LEMMA_COLUMNS, [])
    for bc in lemma_checks(cfg):
        name = bc.name
        if name.startswith("f_lambda"):
            name = f"{name}[" + ",".join(f"{v:g}" for v in bc.grid[0]) + "]"
        res.rows.append((name, bc.violations, bc.worst_margin, bc.passed))
        _check(res, name, bc.violations, "0", bc.passed)
    return res


_RUNNERS = {
    "mean-rate": _mean_rate,
    "sgd-rate": _sgd_rate,
    "recursion": _recursion,
    "lemmas": _lemmas,
    "as-convergence": _as_convergence,
    "assumption3": _assumption3,
}


def manifest(cfg: ExperimentConfig, result: ExperimentResult) -> dict:
    out = {"version": __version__}
    for k, v in cfg.resolved().items():
        out[f"config.{k}"] = v
    for k, v in result.summary.items():
        out[f"summary.{k}"] = v
    out["passed"] = result.passed
    return out
