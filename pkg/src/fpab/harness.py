"""Regret measurement, benchmark reproduction, bound curves and sweeps.

Regret of a learner against the oracle benchmark is measured with common
random numbers: both policies run on the same value / rival-bid streams,
each with its own budget trajectory, and every round contributes the
analytic reward gap (v - b*) F(b*) - (v - b) F(b) under the true rival
CDF (integrating the rival bid out cuts the Monte Carlo variance by an
order of magnitude and matches the definition of regret, which takes the
rival expectation inside the per-round reward).
"""

from __future__ import annotations

import math
import multiprocessing
import os
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.stats

from .auction import CENSORED, FULL, AuctionConfig, SimResult, run_auction
from .distributions import Distribution, RngStream, spec_from_dict
from .policies import Alg1Policy, Alg2Policy, BidderParams, HalfValuePolicy, OraclePolicy

__all__ = [
    "ConfigError",
    "PolicyDef",
    "ExperimentSpec",
    "SlopeFit",
    "HorizonResult",
    "RegretReport",
    "Example1Report",
    "expected_reward",
    "measure_regret",
    "example1_report",
    "thm1_bound",
    "thm2_bound",
    "fit_slope",
    "make_policy",
    "load_experiment",
    "run_sweep",
    "bounds_table",
]

OUT_DIR_ENV = "FPAB_OUT"


class ConfigError(ValueError):
    """Malformed experiment configuration."""


def expected_reward(v: float, b: float, f: Distribution) -> float:
    """Per-round expected utility (v - b) F(b) of bidding b at value v."""
    return (v - b) * float(f.cdf(b))


def thm1_bound(T: int, lam: float) -> float:
    """Closed-form worst-case regret curve, full feedback with known value
    distribution (truncation constant 1):

        (4 sqrt(ln(2 T^2)/2) (1+lam)/(1-lam)^2 + 5 - lam) sqrt(T)
        + (lam/2) log_{1/lam}(T/(1-lam)^2) + 1
    """
    _check_bound_args(T, lam)
    lead = 4.0 * math.sqrt(0.5 * math.log(2.0 * T * T)) * (1.0 + lam) / (1.0 - lam) ** 2
    tail = 0.5 * lam * math.log(T / (1.0 - lam) ** 2) / math.log(1.0 / lam)
    return (lead + 5.0 - lam) * math.sqrt(T) + tail + 1.0


def thm2_bound(T: int, lam: float) -> float:
    """Closed-form worst-case regret curve, full feedback with both
    distributions estimated (truncation constant 1):

        (sqrt(ln(4 T^2)/2) 6(1+lam)/(1-lam)^2 + 5 - lam) sqrt(T)
        + (lam/2) log_{1/lam}(T/(1-lam)^2) + 1
    """
    _check_bound_args(T, lam)
    lead = math.sqrt(0.5 * math.log(4.0 * T * T)) * 6.0 * (1.0 + lam) / (1.0 - lam) ** 2
    tail = 0.5 * lam * math.log(T / (1.0 - lam) ** 2) / math.log(1.0 / lam)
    return (lead + 5.0 - lam) * math.sqrt(T) + tail + 1.0


def _check_bound_args(T, lam):
    if T < 2:
        raise ValueError(f"bound curves need T >= 2, got {T!r}")
    if not (0.0 < lam < 1.0):
        raise ValueError(f"bound curves need lam in (0, 1), got {lam!r}")


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    confidence: float  # 95% half-width on the slope


def fit_slope(points) -> SlopeFit:
    """Least squares of ln(regret) on ln(T); non-positive regrets are dropped."""
    kept = [(T, r) for T, r in points if r > 0]
    dropped = len(list(points)) - len(kept)
    if dropped:
        warnings.warn(f"fit_slope: excluded {dropped} non-positive regret point(s)")
    if len(kept) < 3:
        raise ValueError(f"need at least 3 positive points for a slope fit, got {len(kept)}")
    x = np.log([T for T, _ in kept])
    y = np.log([r for _, r in kept])
    res = scipy.stats.linregress(x, y)
    half = float(res.stderr) * float(scipy.stats.t.ppf(0.975, len(kept) - 2))
    return SlopeFit(slope=float(res.slope), intercept=float(res.intercept), confidence=half)


@dataclass(frozen=True)
class Example1Report:
    """Monte Carlo estimates for the uniform benchmark instance
    (values Uniform(0.4, 1), rival bids Uniform(0, 0.5), budget T/2)."""

    first_best_per_round: float
    half_value_per_round: float
    first_best_payment: float
    half_value_payment: float
    samples: int

    @property
    def budget_slack_ok(self) -> bool:
        # per-round budget is 0.5; both strategies must spend below it
        return self.first_best_payment <= 0.5 and self.half_value_payment <= 0.5


def example1_report(samples: int, rng: RngStream | None = None) -> Example1Report:
    """Estimate the hindsight first-best and half-value per-round utilities.

    First-best pays the rival bid on every profitable round, giving
    E[(V - M)^+] per round; bidding V/2 gives E[1{V/2 >= M} V/2].
    """
    if samples < 10**5:
        raise ValueError("need at least 1e5 samples for stable estimates")
    rng = rng if rng is not None else RngStream(0)
    v = 0.4 + 0.6 * rng.uniforms(samples)
    m = 0.5 * rng.uniforms(samples)
    win_fb = v >= m
    first_best = float(np.mean((v - m) * win_fb))
    fb_pay = float(np.mean(m * win_fb))
    win_hv = (v / 2.0) >= m
    half_value = float(np.mean((v / 2.0) * win_hv))
    return Example1Report(
        first_best_per_round=first_best,
        half_value_per_round=half_value,
        first_best_payment=fb_pay,
        half_value_payment=half_value,
        samples=samples,
    )


# ---------------------------------------------------------------------------
# experiment configuration


_POLICY_PARAM_KEYS = {
    "oracle": {"c1", "bid_grid_step"},
    "alg1": {"c1", "bid_grid_step", "recompute_every", "know_g"},
    "alg2": {"c1", "bid_grid_step", "recompute_every", "know_g", "bandwidth_const", "feature_dim"},
    "half_value": {"bid_grid_step"},
}


@dataclass(frozen=True)
class PolicyDef:
    name: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in _POLICY_PARAM_KEYS:
            raise ConfigError(f"unknown policy {self.name!r}")
        unknown = set(self.params) - _POLICY_PARAM_KEYS[self.name]
        if unknown:
            raise ConfigError(f"unknown keys {sorted(unknown)} for policy {self.name!r}")

    def label(self) -> str:
        return self.name

    def feedback_mode(self) -> str:
        return CENSORED if self.name == "alg2" else FULL

    def bidder_params(self, lam: float) -> BidderParams:
        p = self.params
        return BidderParams(
            lam=lam,
            c1=float(p.get("c1", 1.0)),
            bid_grid_step=float(p.get("bid_grid_step", 0.01)),
            recompute_every=int(p.get("recompute_every", 1)),
            feature_dim=int(p.get("feature_dim", 4)),
            bandwidth_const=float(p.get("bandwidth_const", 1.0)),
        )


def make_policy(pdef: PolicyDef, lam: float, budget: float, f: Distribution, g: Distribution):
    params = pdef.bidder_params(lam)
    know_g = bool(pdef.params.get("know_g", False))
    if pdef.name == "oracle":
        return OraclePolicy(params, budget, f, g)
    if pdef.name == "alg1":
        return Alg1Policy(params, budget, true_g=g if know_g else None)
    if pdef.name == "alg2":
        return Alg2Policy(params, budget, true_g=g if know_g else None)
    if pdef.name == "half_value":
        return HalfValuePolicy(budget, grid_step=params.bid_grid_step)
    raise ConfigError(f"unknown policy {pdef.name!r}")


@dataclass(frozen=True)
class ExperimentSpec:
    f: Distribution
    g: Distribution
    lam: float
    horizons: tuple
    budget_rule: tuple  # ("fraction", beta) or ("fixed", value)
    replications: int
    master_seed: int
    policies: tuple
    out_dir: str = "out"

    def __post_init__(self):
        if self.replications < 1:
            raise ConfigError("replication count must be >= 1")
        hs = list(self.horizons)
        if any(h2 <= h1 for h1, h2 in zip(hs, hs[1:])) or not hs:
            raise ConfigError("horizons must be non-empty and strictly increasing")

    def budget_for(self, T: int) -> float:
        rule, value = self.budget_rule
        return value * T if rule == "fraction" else value


def _require_keys(section: dict, allowed: set, where: str):
    if not isinstance(section, dict):
        raise ConfigError(f"{where} must be a mapping")
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} in {where}")


def load_experiment(doc: dict) -> ExperimentSpec:
    """Build an ExperimentSpec from a parsed config document.

    Sections: `auction` (f, g, lambda), `sweep` (horizons, budget,
    replications, seed), `policies` (list of {name, ...}), `out_dir`.
    Unknown keys anywhere are a hard error.
    """
    _require_keys(doc, {"auction", "sweep", "policies", "out_dir", "run"}, "config")
    if "auction" not in doc or "sweep" not in doc or "policies" not in doc:
        raise ConfigError("config needs 'auction', 'sweep' and 'policies' sections")

    auction = doc["auction"]
    _require_keys(auction, {"f", "g", "lambda", "feedback"}, "auction")
    try:
        f = spec_from_dict(auction["f"])
        g = spec_from_dict(auction["g"])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad distribution spec: {exc}") from exc
    lam = float(auction.get("lambda", 0.0))

    sweep = doc["sweep"]
    _require_keys(sweep, {"horizons", "budget", "replications", "seed"}, "sweep")
    budget = sweep.get("budget", {"rule": "fraction", "beta": 0.5})
    _require_keys(budget, {"rule", "beta", "value"}, "sweep.budget")
    rule = budget.get("rule", "fraction")
    if rule == "fraction":
        budget_rule = ("fraction", float(budget.get("beta", 0.5)))
    elif rule == "fixed":
        if "value" not in budget:
            raise ConfigError("fixed budget rule needs a 'value'")
        budget_rule = ("fixed", float(budget["value"]))
    else:
        raise ConfigError(f"unknown budget rule {rule!r}")

    policies = doc["policies"]
    if not isinstance(policies, list) or not policies:
        raise ConfigError("'policies' must be a non-empty list")
    pdefs = []
    for entry in policies:
        if not isinstance(entry, dict) or "name" not in entry:
            raise ConfigError(f"policy entry must be a mapping with a 'name', got {entry!r}")
        entry = dict(entry)
        name = entry.pop("name")
        pdefs.append(PolicyDef(name, entry))

    try:
        return ExperimentSpec(
            f=f,
            g=g,
            lam=lam,
            horizons=tuple(int(h) for h in sweep["horizons"]),
            budget_rule=budget_rule,
            replications=int(sweep.get("replications", 1)),
            master_seed=int(sweep.get("seed", 0)),
            policies=tuple(pdefs),
            out_dir=str(doc.get("out_dir", "out")),
        )
    except KeyError as exc:
        raise ConfigError(f"missing config key: {exc}") from exc


@dataclass(frozen=True)
class RunSpec:
    """One simulation run, parsed from the `auction` + `run` sections."""

    f: Distribution
    g: Distribution
    lam: float
    T: int
    budget: float
    seed: int
    policy: PolicyDef


def load_run(doc: dict) -> RunSpec:
    _require_keys(doc, {"auction", "sweep", "policies", "out_dir", "run"}, "config")
    if "auction" not in doc or "run" not in doc:
        raise ConfigError("a single run needs 'auction' and 'run' sections")
    auction = doc["auction"]
    _require_keys(auction, {"f", "g", "lambda", "feedback"}, "auction")
    run = doc["run"]
    _require_keys(run, {"T", "budget", "seed", "policy"}, "run")
    try:
        f = spec_from_dict(auction["f"])
        g = spec_from_dict(auction["g"])
        entry = dict(run["policy"])
        pdef = PolicyDef(entry.pop("name"), entry)
        return RunSpec(
            f=f,
            g=g,
            lam=float(auction.get("lambda", 0.0)),
            T=int(run["T"]),
            budget=float(run["budget"]),
            seed=int(run.get("seed", 0)),
            policy=pdef,
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad run config: {exc}") from exc


def run_single(spec: RunSpec, *, replication: int = 0):
    """Simulate one run of the configured policy; returns (SimResult, config)."""
    pdef = spec.policy
    policy = make_policy(pdef, spec.lam, spec.budget, spec.f, spec.g)
    step = pdef.bidder_params(spec.lam).bid_grid_step
    cfg = AuctionConfig(
        T=spec.T,
        B=spec.budget,
        f=spec.f,
        g=spec.g,
        feedback=pdef.feedback_mode(),
        lam=spec.lam,
        seed=spec.seed,
        min_effective_bid=step,
    )
    return run_auction(cfg, policy, replication=replication), cfg


# ---------------------------------------------------------------------------
# regret measurement


def _policy_rewards(result: SimResult, f: Distribution, T: int) -> float:
    """Sum over rounds of the analytic reward (v - b) F(b); rounds after the
    stop time contribute zero (the bidder no longer participates)."""
    if not result.rounds:
        return 0.0
    v = np.array([rec.v for rec in result.rounds])
    b = np.array([rec.b for rec in result.rounds])
    return float(np.sum((v - b) * np.asarray(f.cdf(b), dtype=float)))


def _coupled_regret(exp: ExperimentSpec, pdef: PolicyDef, T: int, rep: int) -> float:
    budget = exp.budget_for(T)
    uv = RngStream.for_replication(exp.master_seed, rep, stream=0).uniforms(T)
    um = RngStream.for_replication(exp.master_seed, rep, stream=1).uniforms(T)
    v_seq = np.asarray(exp.g.quantile(uv), dtype=float)
    m_seq = np.asarray(exp.f.quantile(um), dtype=float)

    learner = make_policy(pdef, exp.lam, budget, exp.f, exp.g)
    oracle_def = PolicyDef(
        "oracle",
        {k: v for k, v in pdef.params.items() if k in _POLICY_PARAM_KEYS["oracle"]},
    )
    oracle = make_policy(oracle_def, exp.lam, budget, exp.f, exp.g)
    step = oracle_def.bidder_params(exp.lam).bid_grid_step

    def cfg(mode):
        return AuctionConfig(
            T=T, B=budget, f=exp.f, g=exp.g, feedback=mode, lam=exp.lam,
            seed=exp.master_seed, min_effective_bid=step,
        )

    res_learner = run_auction(cfg(pdef.feedback_mode()), learner, v_seq=v_seq, m_seq=m_seq)
    res_oracle = run_auction(cfg(FULL), oracle, v_seq=v_seq, m_seq=m_seq)
    return _policy_rewards(res_oracle, exp.f, T) - _policy_rewards(res_learner, exp.f, T)


def _regret_task(args):
    doc_f, doc_g, lam, horizons, budget_rule, reps, seed, pname, pparams, T, rep = args
    exp = ExperimentSpec(
        f=spec_from_dict(doc_f),
        g=spec_from_dict(doc_g),
        lam=lam,
        horizons=tuple(horizons),
        budget_rule=tuple(budget_rule),
        replications=reps,
        master_seed=seed,
        policies=(),
    )
    return _coupled_regret(exp, PolicyDef(pname, dict(pparams)), T, rep)


@dataclass(frozen=True)
class HorizonResult:
    T: int
    mean: float
    stderr: float
    reps: int
    regrets: tuple


@dataclass(frozen=True)
class RegretReport:
    policy: str
    horizons: tuple
    slope: SlopeFit | None
    bounds: dict


def _task_args(exp: ExperimentSpec, pdef: PolicyDef, T: int, rep: int):
    return (
        exp.f.to_dict(), exp.g.to_dict(), exp.lam, tuple(exp.horizons),
        tuple(exp.budget_rule), exp.replications, exp.master_seed,
        pdef.name, tuple(sorted(pdef.params.items())), T, rep,
    )


def _run_tasks(tasks, threads: int):
    if threads <= 1:
        return [_regret_task(t) for t in tasks]
    with multiprocessing.Pool(processes=threads) as pool:
        return pool.map(_regret_task, tasks, chunksize=1)


def measure_regret(exp: ExperimentSpec, policy, reps: int | None = None, *, threads: int = 1) -> RegretReport:
    """Mean regret per horizon with standard errors and a log-log slope.

    `policy` is a PolicyDef or the name of a policy listed in the spec.
    The oracle benchmark runs on the same coupled streams with its own
    budget; oracle-vs-oracle regret is exactly zero.
    """
    if isinstance(policy, str):
        matches = [p for p in exp.policies if p.name == policy]
        if not matches:
            raise ConfigError(f"policy {policy!r} not present in the experiment spec")
        pdef = matches[0]
    else:
        pdef = policy
    reps = exp.replications if reps is None else reps

    tasks = [_task_args(exp, pdef, T, rep) for T in exp.horizons for rep in range(reps)]
    flat = _run_tasks(tasks, threads)

    horizons = []
    idx = 0
    for T in exp.horizons:
        regs = np.array(flat[idx : idx + reps])
        idx += reps
        stderr = float(regs.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
        horizons.append(HorizonResult(T=T, mean=float(regs.mean()), stderr=stderr, reps=reps, regrets=tuple(regs)))

    slope = None
    positive = [(h.T, h.mean) for h in horizons if h.mean > 0]
    if len(positive) >= 3:
        slope = fit_slope(positive)

    bounds = {}
    if 0.0 < exp.lam < 1.0:
        for h in horizons:
            bounds[h.T] = (thm1_bound(h.T, exp.lam), thm2_bound(h.T, exp.lam))
    return RegretReport(policy=pdef.label(), horizons=tuple(horizons), slope=slope, bounds=bounds)


# ---------------------------------------------------------------------------
# sweep orchestration and persistence


def run_sweep(exp: ExperimentSpec, *, threads: int = 1, out_dir: str | None = None):
    """Run every policy of the spec, write regret.csv and summary.csv.

    Output is byte-identical across runs and worker counts: tasks are
    deterministic and the reduce is ordered by (policy, T, rep).
    """
    out = out_dir or os.environ.get(OUT_DIR_ENV) or exp.out_dir
    os.makedirs(out, exist_ok=True)

    reports = [measure_regret(exp, pdef, threads=threads) for pdef in exp.policies]

    regret_path = os.path.join(out, "regret.csv")
    with open(regret_path, "w") as fh:
        fh.write("T,policy,rep,regret\n")
        for report in reports:
            for h in report.horizons:
                for rep, reg in enumerate(h.regrets):
                    fh.write(f"{h.T},{report.policy},{rep},{reg!r}\n")

    summary_path = os.path.join(out, "summary.csv")
    with open(summary_path, "w") as fh:
        fh.write("policy,T,reps,mean_regret,stderr,thm1_bound,thm2_bound,slope,slope_confidence,intercept\n")
        for report in reports:
            s = report.slope
            slope_cols = (
                f"{s.slope!r},{s.confidence!r},{s.intercept!r}" if s is not None else ",,"
            )
            for h in report.horizons:
                b1, b2 = report.bounds.get(h.T, (None, None))
                fh.write(
                    f"{report.policy},{h.T},{h.reps},{h.mean!r},{h.stderr!r},"
                    f"{'' if b1 is None else repr(b1)},{'' if b2 is None else repr(b2)},"
                    f"{slope_cols}\n"
                )
    return reports, regret_path, summary_path


def bounds_table(horizons, lam: float) -> str:
    """CSV of the two closed-form regret curves over the given horizons."""
    lines = ["T,thm1_bound,thm2_bound"]
    for T in horizons:
        lines.append(f"{T},{thm1_bound(T, lam)!r},{thm2_bound(T, lam)!r}")
    return "\n".join(lines) + "\n"
