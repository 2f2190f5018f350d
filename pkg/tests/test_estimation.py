import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fpab import (
    CensoredSample,
    EmpiricalCdf,
    KernelSpec,
    RngStream,
    Uniform,
    bandwidth,
    censored_cdf_eval,
    cox_fit,
    dkw_radius,
    zeng_estimate,
)
from fpab.estimation import GRID, _cox_ingredients

from oracles import km_survival_at, ks_to_uniform, partial_loglik_1d


# ----------------------------------------------------------------- ecdf


def test_ecdf_insert_examples():
    e = EmpiricalCdf([0.2, 0.8])
    e.insert(0.4)
    assert e.cdf(0.4) == pytest.approx(2.0 / 3.0)
    assert e.count == 3

    single = EmpiricalCdf().insert(0.5)
    assert single.cdf(0.5) == 1.0
    assert single.cdf(0.9) == 1.0
    assert single.cdf(0.49) == 0.0


def test_ecdf_domain_error():
    with pytest.raises(ValueError):
        EmpiricalCdf().insert(1.2)
    with pytest.raises(ValueError):
        EmpiricalCdf().insert(-0.1)


def test_ecdf_empty_eval_raises():
    with pytest.raises(ValueError):
        EmpiricalCdf().cdf(0.5)


@given(st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=1, max_size=60))
def test_ecdf_matches_naive_count(values):
    e = EmpiricalCdf()
    for v in values:
        e.insert(v)
    arr = np.array(values)
    for x in [0.0, 0.25, 0.5, 0.75, 1.0] + values[:5]:
        assert e.cdf(x) == pytest.approx(np.mean(arr <= x))


@pytest.mark.slow
def test_ecdf_monte_carlo_dkw():
    # 1000 inserts of Uniform(0,1) vs the identity CDF, 1000 trials;
    # the 1e-3 band is near-tight, allow a single violation.
    radius = dkw_radius(1000, 1e-3)
    rng = RngStream(31)
    draws = rng.uniforms(1000 * 1000).reshape(1000, 1000)
    d = ks_to_uniform(np.sort(draws, axis=1))
    assert np.count_nonzero(d > radius) <= 1

    # spot-check that the vectorized trial agrees with the insert path
    e = EmpiricalCdf()
    for x in draws[0]:
        e.insert(x)
    grid = np.linspace(0, 1, 101)
    assert np.max(np.abs(e.cdf(grid) - np.searchsorted(np.sort(draws[0]), grid, side="right") / 1000)) == 0.0


# ----------------------------------------------------------------- dkw radius


def test_dkw_radius_values():
    assert dkw_radius(200, 0.05) == pytest.approx(0.09603227913199208, rel=1e-12)
    assert dkw_radius(1, 2 * math.exp(-2)) == pytest.approx(1.0, rel=1e-12)
    assert dkw_radius(123, 2.0) == 0.0


def test_dkw_radius_domain():
    with pytest.raises(ValueError):
        dkw_radius(200, 0.0)
    with pytest.raises(ValueError):
        dkw_radius(200, -1.0)
    with pytest.raises(ValueError):
        dkw_radius(0, 0.1)


# ----------------------------------------------------------------- bandwidth


def test_bandwidth_values():
    assert bandwidth(1000, 1.0) == pytest.approx(0.1, rel=1e-12)
    assert bandwidth(8, 0.5) == pytest.approx(0.25, rel=1e-12)


def test_bandwidth_schedule_condition():
    t = np.arange(1, 10**6 + 1, dtype=float)
    ta4 = t * (t ** (-1.0 / 3.0)) ** 4  # equals t^(-1/3)
    assert np.all(np.diff(ta4) < 0)


def test_bandwidth_domain():
    with pytest.raises(ValueError):
        bandwidth(0, 1.0)
    with pytest.raises(ValueError):
        bandwidth(10, 0.0)


# ----------------------------------------------------------------- cox fit


def test_cox_zero_features_converges_at_zero():
    samples = [
        CensoredSample(0.3, True, (0.0, 0.0)),
        CensoredSample(0.5, True, (0.0, 0.0)),
        CensoredSample(0.7, False, (0.0, 0.0)),
    ]
    fit = cox_fit(samples, "event")
    assert np.array_equal(fit.coefficients, np.zeros(2))
    assert fit.converged


def test_cox_too_few_targets():
    samples = [
        CensoredSample(0.3, False, (0.5,)),
        CensoredSample(0.6, True, (0.2,)),
    ]
    fit = cox_fit(samples, "event")  # one event only
    assert np.array_equal(fit.coefficients, np.zeros(1))
    assert not fit.converged

    none = [CensoredSample(0.3, False, (0.5,)), CensoredSample(0.6, False, (0.2,))]
    fit2 = cox_fit(none, "event")
    assert not fit2.converged
    assert np.array_equal(fit2.coefficients, np.zeros(1))


def test_cox_matches_grid_search_oracle():
    # d = 1, three hand-specified samples; the oracle scans beta on
    # [-10, 10] with step 1e-4 using an independent likelihood.
    samples = [
        CensoredSample(0.25, True, (0.6,)),
        CensoredSample(0.5, True, (-0.4,)),
        CensoredSample(0.8, False, (0.2,)),
    ]
    fit = cox_fit(samples, "event")
    assert fit.converged

    betas = np.arange(-10.0, 10.0 + 1e-9, 1e-4)
    y = [s.y for s in samples]
    delta = [s.event for s in samples]
    h = [s.features[0] for s in samples]
    ll = partial_loglik_1d(betas, y, delta, h)
    beta_star = betas[int(np.argmax(ll))]
    assert abs(fit.coefficients[0] - beta_star) <= 1e-4
    # and the reported likelihood matches the oracle's at the optimum
    assert fit.log_likelihood == pytest.approx(ll.max(), abs=1e-8)


def test_cox_gradient_small_when_converged():
    rng = RngStream(88)
    n = 40
    y = rng.uniforms(n)
    feats = rng.uniforms(3 * n).reshape(n, 3) - 0.5
    events = rng.uniforms(n) < 0.6
    samples = [CensoredSample(float(y[i]), bool(events[i]), tuple(feats[i])) for i in range(n)]
    for side in ("event", "censor"):
        fit = cox_fit(samples, side)
        assert fit.converged
        delta = events if side == "event" else ~events
        _, grad, _ = _cox_ingredients(y, delta, feats, fit.coefficients)
        assert np.max(np.abs(grad)) <= 1e-8


def test_cox_hessian_negative_semidefinite():
    # concavity of the partial log-likelihood, probed at random points
    rng = RngStream(13)
    n = 25
    y = rng.uniforms(n)
    feats = rng.uniforms(2 * n).reshape(n, 2) - 0.5
    delta = rng.uniforms(n) < 0.5
    for _ in range(10):
        beta = 4.0 * (np.array([rng.uniform(), rng.uniform()]) - 0.5)
        _, _, hess = _cox_ingredients(y, delta, feats, beta)
        eig = np.linalg.eigvalsh(hess)
        assert np.all(eig <= 1e-9)


def test_cox_rejects_bad_input():
    with pytest.raises(ValueError):
        cox_fit([], "event")
    with pytest.raises(ValueError):
        cox_fit([CensoredSample(0.5, True, (1.0,))], "both")
    with pytest.raises(ValueError):
        CensoredSample(0.5, True, (float("nan"),))
    with pytest.raises(ValueError):
        cox_fit(
            [CensoredSample(0.5, True, (1.0,)), CensoredSample(0.2, True, (1.0, 2.0))],
            "event",
        )


# ----------------------------------------------------------------- zeng estimator


def _const_feature_samples(y, event):
    return [CensoredSample(float(yi), bool(ei), (1.0,)) for yi, ei in zip(y, event)]


def _km_fits(samples):
    return cox_fit(samples, "event"), cox_fit(samples, "censor")


def test_zeng_no_censoring_matches_empirical_survival():
    rng = RngStream(41)
    y = rng.uniforms(40)
    samples = _const_feature_samples(y, np.ones(40, dtype=bool))
    beta, gamma = _km_fits(samples)
    est = zeng_estimate(samples, beta, gamma, KernelSpec(bandwidth_const=1e6))
    target = (y[None, :] > GRID[:, None]).mean(axis=1)
    assert np.max(np.abs(est.grid_values - target)) <= 1e-6
    assert not est.low_confidence


def test_zeng_zero_events_is_flat_one():
    samples = _const_feature_samples([0.2, 0.5, 0.9], [False, False, False])
    beta, gamma = _km_fits(samples)
    est = zeng_estimate(samples, beta, gamma, KernelSpec())
    assert np.all(est.grid_values == 1.0)
    assert est.low_confidence


def test_zeng_hand_kaplan_meier():
    # risk sets {3, 2, 1}: survival 2/3 after the event at 0.2, then 0
    samples = _const_feature_samples([0.2, 0.4, 0.6], [True, False, True])
    beta, gamma = _km_fits(samples)
    est = zeng_estimate(samples, beta, gamma, KernelSpec(bandwidth_const=1e6))
    assert est.survival_at(0.5) == pytest.approx(2.0 / 3.0, abs=1e-12)
    assert est.survival_at(0.7) == pytest.approx(0.0, abs=1e-12)
    # CDF-side evaluation: estimate at 1 - b
    assert est.cdf(0.5) == pytest.approx(2.0 / 3.0, abs=1e-12)
    assert censored_cdf_eval(est, 0.5) == est.cdf(0.5)


def test_censored_eval_of_flat_estimate():
    samples = _const_feature_samples([0.2], [False])
    beta, gamma = _km_fits(samples)
    est = zeng_estimate(samples, beta, gamma, KernelSpec())
    for b in np.linspace(0, 1, 11):
        assert censored_cdf_eval(est, float(b)) == 1.0


def test_zeng_monotone_after_repair():
    rng = RngStream(4097)
    n = 60
    y = rng.uniforms(n)
    event = rng.uniforms(n) < 0.5
    feats = rng.uniforms(2 * n).reshape(n, 2)
    samples = [CensoredSample(float(y[i]), bool(event[i]), tuple(feats[i])) for i in range(n)]
    beta, gamma = _km_fits(samples)
    est = zeng_estimate(samples, beta, gamma, KernelSpec(bandwidth_const=0.5))
    assert np.all(np.diff(est.grid_values) <= 0)  # nonincreasing in grid x
    bs = np.linspace(0, 1, 101)
    cdf_vals = est.cdf(bs)
    assert np.all(np.diff(cdf_vals) >= 0)  # nondecreasing in b
    assert np.all((est.grid_values >= 0) & (est.grid_values <= 1))


@pytest.mark.parametrize("seed", range(10))
def test_zeng_reduces_to_kaplan_meier(seed):
    # constant features + huge bandwidth = classical product limit
    rng = RngStream(900 + seed)
    n = 30 + 5 * seed
    y = rng.uniforms(n)  # continuous draws: ties have measure zero
    event = rng.uniforms(n) < 0.6
    samples = _const_feature_samples(y, event)
    beta, gamma = _km_fits(samples)
    est = zeng_estimate(samples, beta, gamma, KernelSpec(bandwidth_const=1e6))
    target = km_survival_at(y, event, GRID)
    assert np.max(np.abs(est.grid_values - target)) <= 1e-6


def _censored_instance_sup_error(n, rng):
    """Synthetic rival bids Uniform(0, 0.5) censored by independent
    Uniform(0, 0.6) bids; returns sup-norm CDF error of the estimate."""
    m = 0.5 * rng.uniforms(n)
    b = 0.6 * rng.uniforms(n)
    event = m >= b
    y = np.minimum(1.0 - m, 1.0 - b)
    feats = np.zeros((n, 4))
    feats[1:, 0] = b[:-1]
    feats[1:, 1] = np.maximum(b, m)[:-1]
    feats[:, 2] = 1.0 - np.arange(n) / n
    feats[1:, 3] = np.cumsum(~event)[:-1] / np.arange(1, n)
    samples = [CensoredSample(float(y[i]), bool(event[i]), tuple(feats[i])) for i in range(n)]
    beta, gamma = cox_fit(samples, "event"), cox_fit(samples, "censor")
    est = zeng_estimate(samples, beta, gamma, KernelSpec(bandwidth_const=1.0))
    true_f = Uniform(0.0, 0.5)
    bs = np.linspace(0, 1, 1001)
    return float(np.max(np.abs(est.cdf(bs) - np.asarray(true_f.cdf(bs)))))


@pytest.mark.slow
def test_zeng_consistency_small_scale():
    # reduced-size version of the acceptance consistency check
    reps = 8
    med = {}
    for n in (256, 1024):
        errs = [_censored_instance_sup_error(n, RngStream(5000 + r, stream=n)) for r in range(reps)]
        med[n] = float(np.median(errs))
    assert med[1024] < med[256]
    assert med[1024] <= 0.15
