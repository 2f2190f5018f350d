"""Statistical estimation for the bidding agents.

Two feedback regimes are covered:

* full feedback: plain empirical CDFs with Dvoretzky--Kiefer--Wolfowitz
  (DKW) uniform error radii;
* censored feedback: the winning-bid observation right-censors the rival
  bid, so the CDF is recovered with proportional-hazards scores fitted by
  Cox partial likelihood on each side (event / censor) and a
  kernel-smoothed product-limit average in the style of Zeng's estimator
  for dependent censoring.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "EmpiricalCdf",
    "CensoredSample",
    "CoxFit",
    "KernelSpec",
    "CensoredCdfEstimate",
    "dkw_radius",
    "bandwidth",
    "cox_fit",
    "zeng_estimate",
    "censored_cdf_eval",
]

GRID_STEP = 1e-3
GRID = np.linspace(0.0, 1.0, 1001)


class EmpiricalCdf:
    """Streaming empirical CDF: eval(x) = (1/t) #{observations <= x}.

    Observations live in a sorted buffer with amortized growth, so
    inserts are one C-level shift and evaluations one searchsorted.
    """

    __slots__ = ("_buf", "_n")

    def __init__(self, values=()):
        vals = np.sort(np.asarray(list(values), dtype=float))
        if vals.size and (vals[0] < 0.0 or vals[-1] > 1.0):
            raise ValueError("observations must lie in [0, 1]")
        self._buf = np.empty(max(16, 2 * vals.size))
        self._buf[: vals.size] = vals
        self._n = vals.size

    @property
    def count(self) -> int:
        return self._n

    def insert(self, x: float) -> "EmpiricalCdf":
        """Add one observation, keeping the sorted order; returns self."""
        x = float(x)
        if not (0.0 <= x <= 1.0):
            raise ValueError(f"observation {x!r} outside [0, 1]")
        if self._n == self._buf.size:
            grown = np.empty(2 * self._buf.size)
            grown[: self._n] = self._buf[: self._n]
            self._buf = grown
        pos = int(np.searchsorted(self._buf[: self._n], x, side="right"))
        self._buf[pos + 1 : self._n + 1] = self._buf[pos : self._n]
        self._buf[pos] = x
        self._n += 1
        return self

    def cdf(self, x):
        if self._n == 0:
            raise ValueError("empirical CDF has no observations")
        out = np.searchsorted(self._buf[: self._n], np.asarray(x, dtype=float), side="right") / self._n
        return float(out) if np.ndim(x) == 0 else out

    def values(self) -> np.ndarray:
        return self._buf[: self._n].copy()

    def __repr__(self):
        return f"EmpiricalCdf(count={self.count})"


def dkw_radius(t: int, delta: float) -> float:
    """Uniform empirical-CDF error radius sqrt(ln(2/delta)/2) / sqrt(t).

    With probability at least 1 - delta the sup-norm distance between the
    empirical CDF of t i.i.d. draws and the truth is below this radius.
    """
    if t < 1 or int(t) != t:
        raise ValueError(f"t must be a positive integer, got {t!r}")
    if not (0.0 < delta <= 2.0):
        raise ValueError(f"delta must lie in (0, 2], got {delta!r}")
    return math.sqrt(0.5 * math.log(2.0 / delta)) / math.sqrt(t)


def bandwidth(t: int, c: float) -> float:
    """Kernel bandwidth schedule a_t = c * t^(-1/3).

    This rate satisfies log^2(a_t)/(t a_t^2) -> 0, t a_t^2 -> infinity and
    t a_t^4 -> 0, the three conditions the smoothed product-limit
    estimator needs.
    """
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t!r}")
    if c <= 0:
        raise ValueError(f"bandwidth constant must be positive, got {c!r}")
    return c * float(t) ** (-1.0 / 3.0)


@dataclass(frozen=True)
class CensoredSample:
    """One round's censored observation.

    y is min(1 - rival_bid, 1 - own_bid); event is True when the rival
    bid was observed exactly (a lost round), False when it was censored
    by the own bid (a won round).  features is the fixed-length history
    vector used by the proportional-hazards fits.
    """

    y: float
    event: bool
    features: tuple

    def __post_init__(self):
        if not (0.0 <= self.y <= 1.0):
            raise ValueError(f"y must lie in [0, 1], got {self.y!r}")
        object.__setattr__(self, "features", tuple(float(f) for f in self.features))
        if any(not math.isfinite(f) for f in self.features):
            raise ValueError(f"non-finite feature vector {self.features!r}")


@dataclass(frozen=True)
class CoxFit:
    """Result of a partial-likelihood maximization."""

    coefficients: np.ndarray
    converged: bool
    log_likelihood: float


def _split_samples(samples):
    if len(samples) == 0:
        raise ValueError("need at least one sample")
    d = len(samples[0].features)
    y = np.array([s.y for s in samples], dtype=float)
    event = np.array([s.event for s in samples], dtype=bool)
    feats = np.array([s.features for s in samples], dtype=float)
    if feats.shape[1] != d or any(len(s.features) != d for s in samples):
        raise ValueError("inconsistent feature dimension across samples")
    if not np.all(np.isfinite(feats)):
        raise ValueError("non-finite features in sample set")
    return y, event, feats


def _cox_ingredients(y, delta, x, beta):
    """Log partial likelihood (scaled by 1/n), gradient and Hessian.

    Breslow tie handling: each target observation contributes its own
    term and the risk set {i : y_i >= y_tau} keeps all tied members.
    """
    n, d = x.shape
    order = np.argsort(y, kind="stable")
    ys, deltas, xs = y[order], delta[order], x[order]

    lin = xs @ beta
    lin_shift = lin - lin.max()
    w = np.exp(lin_shift)  # shifted so w <= 1; only underflow is possible

    # suffix sums over the ascending-y order give risk-set aggregates
    s0 = np.cumsum(w[::-1])[::-1]
    s1 = np.cumsum((w[:, None] * xs)[::-1], axis=0)[::-1]
    s2 = np.cumsum((w[:, None, None] * (xs[:, :, None] * xs[:, None, :]))[::-1], axis=0)[::-1]

    # map each observation to the first index of its risk set (ties included)
    start = np.searchsorted(ys, ys, side="left")
    ev = np.nonzero(deltas)[0]
    if ev.size == 0:
        return 0.0, np.zeros(d), np.zeros((d, d))
    rs = start[ev]

    with np.errstate(divide="ignore", invalid="ignore"):
        # log of the unshifted risk-set sum is log(s0) + max(lin)
        loglik = float(np.sum(lin[ev] - (np.log(s0[rs]) + lin.max()))) / n
        xbar = s1[rs] / s0[rs][:, None]
        grad = (xs[ev] - xbar).sum(axis=0) / n
        second = s2[rs] / s0[rs][:, None, None]
        hess = -(second - xbar[:, :, None] * xbar[:, None, :]).sum(axis=0) / n
    if not math.isfinite(loglik):
        # an extreme line-search candidate underflowed a whole risk set;
        # report -inf so the caller rejects the step
        return -math.inf, np.zeros(d), np.zeros((d, d))
    return loglik, grad, hess


def cox_fit(samples, target: str) -> CoxFit:
    """Maximize the Cox partial likelihood over one indicator side.

    target selects which observations enter as events: ``"event"``
    weights the exactly-observed samples, ``"censor"`` the censored ones.
    Damped Newton ascent (step halving), gradient tolerance 1e-8 in
    sup-norm, at most 100 iterations, ridge 1e-8 on the Hessian.
    Fewer than two target observations give coefficients 0 with
    converged=False.
    """
    if target not in ("event", "censor"):
        raise ValueError(f"target must be 'event' or 'censor', got {target!r}")
    y, event, feats = _split_samples(samples)
    delta = event if target == "event" else ~event
    d = feats.shape[1]

    if delta.sum() < 2:
        ll, _, _ = _cox_ingredients(y, delta, feats, np.zeros(d))
        return CoxFit(np.zeros(d), False, ll)

    beta = np.zeros(d)
    ll, grad, hess = _cox_ingredients(y, delta, feats, beta)
    converged = False
    for _ in range(100):
        if np.max(np.abs(grad)) <= 1e-8:
            converged = True
            break
        direction = np.linalg.solve(-hess + 1e-8 * np.eye(d), grad)
        step = 1.0
        for _ in range(40):
            cand = beta + step * direction
            ll_new, grad_new, hess_new = _cox_ingredients(y, delta, feats, cand)
            if ll_new >= ll - 1e-14:
                break
            step *= 0.5
        else:
            break  # no ascent step found; report the current point
        beta, ll, grad, hess = cand, ll_new, grad_new, hess_new
    if np.max(np.abs(grad)) <= 1e-8:
        converged = True
    return CoxFit(beta, converged, ll)


@dataclass(frozen=True)
class KernelSpec:
    """Smoothing kernel and bandwidth constant for the censored estimator.

    Only the bivariate Gaussian kernel is provided: symmetric, strictly
    positive, twice continuously differentiable with bounded gradient.
    """

    kernel: str = "gaussian"
    bandwidth_const: float = 1.0

    def __post_init__(self):
        if self.kernel != "gaussian":
            raise ValueError(f"unsupported kernel {self.kernel!r}")
        if self.bandwidth_const <= 0:
            raise ValueError("bandwidth constant must be positive")


@dataclass
class CensoredCdfEstimate:
    """CDF estimate from censored data, stored on a fixed survival grid.

    grid_values[k] approximates the survival of the transformed variable
    1 - m at grid point k * 1e-3, which equals F(1 - x) there; `cdf`
    performs the x -> 1 - b mapping.  Values are clamped to [0, 1] and
    repaired to be nonincreasing along the grid.
    """

    grid_values: np.ndarray
    sample_count: int
    low_confidence: bool = False

    def survival_at(self, x) -> float:
        """Step evaluation at the grid point nearest to x from below."""
        idx = np.floor(np.asarray(x, dtype=float) / GRID_STEP + 1e-9).astype(int)
        idx = np.clip(idx, 0, GRID.size - 1)
        out = self.grid_values[idx]
        return float(out) if np.ndim(x) == 0 else out

    def cdf(self, b):
        """F-hat(b): the survival grid evaluated at 1 - b."""
        b_arr = np.asarray(b, dtype=float)
        out = self.survival_at(1.0 - b_arr)
        return float(out) if np.ndim(b) == 0 else out


def censored_cdf_eval(est: CensoredCdfEstimate, b: float) -> float:
    """CDF value of the rival-bid distribution at b (see CensoredCdfEstimate)."""
    return est.cdf(b)


def _gaussian_weights(z_chunk, z_all, a):
    # K((z_i - z_m) / a) with bivariate standard Gaussian K; the constant
    # prefactor cancels in every ratio the estimator forms.
    diff = (z_chunk[:, None, :] - z_all[None, :, :]) / a
    return np.exp(-0.5 * np.einsum("ijk,ijk->ij", diff, diff))


def zeng_estimate(samples, beta_fit: CoxFit, gamma_fit: CoxFit, kernel: KernelSpec) -> CensoredCdfEstimate:
    """Kernel-smoothed product-limit estimate from censored samples.

    Each sample i carries a score pair Z_i = (beta' h_i, gamma' h_i).
    For every exactly-observed y_j the factor
    ``1 - K((Z_i-Z_j)/a_t) / sum_m K((Z_i-Z_m)/a_t) 1{y_m >= y_j}``
    enters a product over y_j <= x, and the estimate averages the product
    over i.  With constant scores the weights cancel and the estimate
    reduces to the classical Kaplan-Meier product limit.
    """
    y, event, feats = _split_samples(samples)
    t = y.size
    a_t = bandwidth(t, kernel.bandwidth_const)

    order = np.argsort(y, kind="stable")
    ys, evs = y[order], event[order]
    z = np.column_stack([feats @ beta_fit.coefficients, feats @ gamma_fit.coefficients])[order]

    ev_idx = np.nonzero(evs)[0]
    if ev_idx.size == 0:
        return CensoredCdfEstimate(np.ones(GRID.size), t, low_confidence=True)

    # risk-set start of each event position (ties kept in the risk set)
    rs = np.searchsorted(ys, ys[ev_idx], side="left")

    running = np.zeros(ev_idx.size)
    chunk = max(1, min(t, int(4e6) // max(t, 1)))
    for lo in range(0, t, chunk):
        w = _gaussian_weights(z[lo : lo + chunk], z, a_t)
        denom = np.cumsum(w[:, ::-1], axis=1)[:, ::-1]
        num = w[:, ev_idx]
        den = denom[:, rs]
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
        if np.any((den == 0) & (num > 0)):
            raise ArithmeticError("degenerate kernel weights in product-limit estimate")
        factors = np.clip(1.0 - ratio, 0.0, 1.0)
        running += np.cumprod(factors, axis=1).sum(axis=0)

    survival_after_k = running / t  # survival after the first k events, k = 1..n_ev
    steps = np.concatenate([[1.0], survival_after_k])

    k_at_grid = np.searchsorted(ys[ev_idx], GRID, side="right")
    values = steps[k_at_grid]
    values = np.minimum.accumulate(np.clip(values, 0.0, 1.0))
    return CensoredCdfEstimate(values, t, low_confidence=False)
