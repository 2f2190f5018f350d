"""Independent reference implementations used as test oracles.

These deliberately avoid the library code paths they are checking:
the Kaplan-Meier product limit is built from an explicit event table,
the partial likelihood is evaluated directly from its definition, and
the KS distance comes from order statistics.
"""

import numpy as np


def kaplan_meier(y, event):
    """Classical product-limit estimator.

    Returns (event_times, survival_after) where survival_after[k] is the
    estimate just after the k-th distinct event time: the product of
    (1 - d_u / n_u) over distinct event times u, with n_u the number of
    subjects (censored or not) with y >= u.
    """
    y = np.asarray(y, dtype=float)
    event = np.asarray(event, dtype=bool)
    times = np.unique(y[event])
    surv = []
    s = 1.0
    for u in times:
        n_u = np.count_nonzero(y >= u)
        d_u = np.count_nonzero((y == u) & event)
        s *= 1.0 - d_u / n_u
        surv.append(s)
    return times, np.array(surv)


def km_survival_at(y, event, xs):
    """Kaplan-Meier survival evaluated at each x in xs."""
    times, surv = kaplan_meier(y, event)
    padded = np.concatenate([[1.0], surv])
    idx = np.searchsorted(times, np.asarray(xs, dtype=float), side="right")
    return padded[idx]


def partial_loglik_1d(betas, y, delta, h):
    """Cox partial log-likelihood on a 1-d covariate, vectorized over betas.

    Direct definition: sum over target observations tau of
    beta*h_tau - log sum_{i: y_i >= y_tau} exp(beta*h_i), scaled by 1/n.
    """
    betas = np.asarray(betas, dtype=float)
    y = np.asarray(y, dtype=float)
    delta = np.asarray(delta, dtype=bool)
    h = np.asarray(h, dtype=float)
    out = np.zeros_like(betas)
    for tau in np.nonzero(delta)[0]:
        risk = y >= y[tau]
        terms = np.exp(np.outer(betas, h[risk]))
        out += betas * h[tau] - np.log(terms.sum(axis=1))
    return out / y.size


def ks_to_uniform(sorted_rows, lo=0.0, hi=1.0):
    """Sup-norm distance of each row's empirical CDF to the Uniform(lo, hi) CDF.

    Rows must be sorted ascending.  Standard order-statistics form:
    D = max_i max(i/n - U_(i), U_(i) - (i-1)/n) with U the rescaled values.
    """
    u = (sorted_rows - lo) / (hi - lo)
    n = u.shape[-1]
    i = np.arange(1, n + 1)
    d_plus = (i / n - u).max(axis=-1)
    d_minus = (u - (i - 1) / n).max(axis=-1)
    return np.maximum(d_plus, d_minus)
