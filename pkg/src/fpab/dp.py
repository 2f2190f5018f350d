"""Finite-truncation dynamic programming for budget-constrained bidding.

The value recursion runs backward from a truncation time t0 chosen so the
discounted tail lambda^(t0-t)/(1-lambda) is below c1/sqrt(t); the base row
at t0 is zero (or any bounded row, see `solve_value_table`).  Bids and
budgets share one grid so that budget-minus-bid stays on-grid exactly.

State values satisfy

    V(B, tau) = E_v[ max_{b <= min(B,1)} Q(v, B, tau, b) ],
    Q(v, B, tau, b) = [(v-b) + lam*V(B-b, tau+1)]*F(b) + lam*V(B, tau+1)*(1-F(b)),

with the bid maximization inside the value expectation: the bidder sees
her value before bidding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import DiscreteAtoms, Distribution, EmpiricalStep
from .estimation import EmpiricalCdf

__all__ = [
    "DpConfig",
    "ValueTable",
    "TinyInstance",
    "InstanceTooLargeError",
    "InfeasibleBidError",
    "horizon_t0",
    "q_value",
    "solve_value_table",
    "optimal_bid",
    "enumerate_policy_value",
    "myopic_grid_bid",
]

_N_QUAD = 200  # quantile-quadrature points for continuous value distributions


class InfeasibleBidError(ValueError):
    """A bid above the remaining budget was requested."""


class InstanceTooLargeError(ValueError):
    """Brute-force enumeration refused: the decision tree is too big."""


@dataclass(frozen=True)
class DpConfig:
    """Discount, truncation constant and the shared bid/budget grid step."""

    lam: float
    c1: float = 1.0
    bid_grid_step: float = 0.01

    def __post_init__(self):
        if not (0.0 <= self.lam < 1.0):
            raise ValueError(f"lam must lie in [0, 1), got {self.lam!r}")
        if self.c1 <= 0:
            raise ValueError(f"c1 must be positive, got {self.c1!r}")
        n = round(1.0 / self.bid_grid_step)
        if n < 1 or abs(n * self.bid_grid_step - 1.0) > 1e-9:
            raise ValueError(f"bid grid step {self.bid_grid_step!r} must divide 1 exactly")

    @property
    def n_bid_steps(self) -> int:
        return round(1.0 / self.bid_grid_step)

    def bid_grid(self) -> np.ndarray:
        n = self.n_bid_steps
        return np.arange(n + 1) * self.bid_grid_step

    def budget_index(self, budget: float, *, strict: bool = True) -> int:
        idx = round(budget / self.bid_grid_step)
        if strict and abs(idx * self.bid_grid_step - budget) > 1e-9:
            raise ValueError(f"budget {budget!r} is not on the grid (step {self.bid_grid_step})")
        return max(idx, 0)

    def value_cap(self) -> float:
        return 1.0 if self.lam == 0.0 else 1.0 / (1.0 - self.lam)


def horizon_t0(t: int, lam: float, c1: float) -> int:
    """Smallest t0 >= t with lam^(t0-t)/(1-lam) < c1/sqrt(t); t itself for lam = 0."""
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t!r}")
    if c1 <= 0:
        raise ValueError(f"c1 must be positive, got {c1!r}")
    if lam == 0.0:
        return t
    if not (0.0 < lam < 1.0):
        raise ValueError(f"lam must lie in [0, 1), got {lam!r}")
    target = c1 * (1.0 - lam) / math.sqrt(t)
    if 1.0 < target:
        return t
    # closed-form guess, then exact integer scan around it for float safety
    k = max(0, math.floor(math.log(target) / math.log(lam)))
    while lam**k >= target:
        k += 1
    while k > 0 and lam ** (k - 1) < target:
        k -= 1
    return t + k


def q_value(v, budget, b, f_hat, v_next_win, v_next_lose, lam) -> float:
    """One-step lookahead value of bidding b at value v and budget B."""
    if b > budget + 1e-9:
        raise InfeasibleBidError(f"bid {b!r} exceeds budget {budget!r}")
    fb = float(f_hat.cdf(b))
    return ((v - b) + lam * v_next_win) * fb + lam * v_next_lose * (1.0 - fb)


def _expectation_atoms(g, n_quad: int = _N_QUAD):
    """Value-distribution atoms for the expectation over v.

    Exact atoms for discrete and empirical inputs; midpoint quantile
    quadrature with `n_quad` nodes otherwise.
    """
    if isinstance(g, DiscreteAtoms):
        return g.points.copy(), g.masses.copy()
    if isinstance(g, EmpiricalCdf):
        vals, counts = np.unique(g.values(), return_counts=True)
        return vals, counts / counts.sum()
    if isinstance(g, EmpiricalStep):
        vals, counts = np.unique(g.values, return_counts=True)
        return vals, counts / counts.sum()
    if isinstance(g, Distribution):
        ps = (np.arange(n_quad) + 0.5) / n_quad
        return np.asarray(g.quantile(ps), dtype=float), np.full(n_quad, 1.0 / n_quad)
    raise TypeError(f"cannot take a value expectation against {type(g).__name__}")


@dataclass
class ValueTable:
    """Backward-induction solution on the (budget, time) grid.

    Row r of `values` is time t + r; the last row is the base row at t0.
    `bids` stores, per (budget, time), the bid maximizing the
    value-averaged lookahead (a reporting summary; the bid actually
    placed at an observed value comes from `optimal_bid`).
    """

    t: int
    t0: int
    cfg: DpConfig
    budget_values: np.ndarray
    values: np.ndarray  # shape (t0 - t + 1, n_budget)
    bids: np.ndarray  # shape (max(t0 - t, 0), n_budget), grid indices

    def row(self, tau: int) -> np.ndarray:
        if not (self.t <= tau <= self.t0):
            raise ValueError(f"time {tau} outside table range [{self.t}, {self.t0}]")
        return self.values[tau - self.t]

    def value(self, budget: float, tau: int) -> float:
        i = min(self.cfg.budget_index(budget), self.budget_values.size - 1)
        return float(self.row(tau)[i])

    def summary_bid(self, budget: float, tau: int) -> float:
        if not (self.t <= tau < self.t0):
            raise ValueError(f"time {tau} has no bid row")
        i = min(self.cfg.budget_index(budget), self.budget_values.size - 1)
        return float(self.bids[tau - self.t, i] * self.cfg.bid_grid_step)


def _win_window(v_next: np.ndarray, nb: int) -> np.ndarray:
    """Matrix W[i, j] = v_next[i - j] for j <= i (zeros elsewhere, masked later)."""
    pad = np.concatenate([np.zeros(nb - 1), v_next])
    return np.lib.stride_tricks.sliding_window_view(pad, nb)[:, ::-1]


def solve_value_table(
    f_hat,
    g_hat,
    t: int,
    budget_max: float,
    cfg: DpConfig,
    *,
    t0: int | None = None,
    base: np.ndarray | None = None,
) -> ValueTable:
    """Solve the backward recursion on budgets {0, step, ..., budget_max}.

    The base row at t0 defaults to zeros; any row with entries in
    [0, 1/(1-lam)] may be supplied instead (the recursion is a
    lambda-contraction in the base, which the tests exercise).
    """
    if t0 is None:
        t0 = horizon_t0(t, cfg.lam, cfg.c1)
    if t0 < t:
        raise ValueError(f"t0 {t0} precedes t {t}")
    step = cfg.bid_grid_step
    n_budget = cfg.budget_index(budget_max) + 1
    budgets = np.arange(n_budget) * step
    bids = cfg.bid_grid()
    nb = bids.size

    cap = cfg.value_cap()
    if base is None:
        base = np.zeros(n_budget)
    else:
        base = np.asarray(base, dtype=float)
        if base.shape != (n_budget,):
            raise ValueError(f"base row must have shape ({n_budget},)")
        if np.any((base < 0) | (base > cap + 1e-12)):
            raise ValueError(f"base row values must lie in [0, {cap}]")

    n_rows = t0 - t + 1
    values = np.empty((n_rows, n_budget))
    values[-1] = base
    bid_rows = np.zeros((n_rows - 1, n_budget), dtype=np.int64)

    f_grid = np.asarray(f_hat.cdf(bids), dtype=float)
    v_atoms, v_weights = _expectation_atoms(g_hat)
    v_mean = float(v_atoms @ v_weights)

    # feasibility: bid index j usable at budget index i iff j <= i
    infeasible = np.arange(nb)[None, :] > np.arange(n_budget)[:, None]
    lam = cfg.lam

    for r in range(n_rows - 2, -1, -1):
        v_next = values[r + 1]
        win = _win_window(v_next, nb)
        const = (
            -bids * f_grid
            + lam * f_grid * win
            + lam * np.outer(v_next, 1.0 - f_grid)
        )
        const[infeasible] = -np.inf

        acc = np.zeros(n_budget)
        for vk, wk in zip(v_atoms, v_weights):
            acc += wk * (vk * f_grid + const).max(axis=1)
        values[r] = acc
        bid_rows[r] = np.argmax(v_mean * f_grid + const, axis=1)

    return ValueTable(t=t, t0=t0, cfg=cfg, budget_values=budgets, values=values, bids=bid_rows)


def optimal_bid(table: ValueTable, v: float, budget: float, t: int, f_hat, cfg: DpConfig) -> float:
    """Grid bid maximizing the one-step lookahead at observed value v.

    Ties break toward the smallest bid.  Budgets above the table's top
    row clamp to it (sound when the table covers every budget reachable
    within its window, which is how the policies build tables).
    """
    if budget < 0:
        raise InfeasibleBidError(f"negative budget {budget!r}")
    if not (table.t <= t < table.t0):
        raise ValueError(f"time {t} outside table window [{table.t}, {table.t0})")
    bids = cfg.bid_grid()
    i = min(cfg.budget_index(budget, strict=False), table.budget_values.size - 1)
    j_max = min(i, bids.size - 1)
    v_next = table.row(t + 1)
    b = bids[: j_max + 1]
    fb = np.asarray(f_hat.cdf(b), dtype=float)
    win = v_next[i - np.arange(j_max + 1)]
    q = ((v - b) + cfg.lam * win) * fb + cfg.lam * v_next[i] * (1.0 - fb)
    return float(b[int(np.argmax(q))])


def myopic_grid_bid(v: float, f_grid: np.ndarray, bids: np.ndarray, j_max: int) -> float:
    """argmax over grid bids b <= bids[j_max] of (v - b) * F(b), smallest on ties.

    This is the exact optimal bid whenever the remaining budget covers
    the whole lookahead window (the continuation value is then
    budget-independent and cancels from the argmax), and the defining
    rule for lam = 0.
    """
    j_max = min(j_max, bids.size - 1)
    r = (v - bids[: j_max + 1]) * f_grid[: j_max + 1]
    return float(bids[int(np.argmax(r))])


@dataclass(frozen=True)
class TinyInstance:
    """A brute-forceable auction instance for cross-checking the DP."""

    f: DiscreteAtoms
    g: DiscreteAtoms
    bid_grid: tuple
    horizon: int
    budget: float
    lam: float

    def __post_init__(self):
        bids = tuple(float(b) for b in self.bid_grid)
        if sorted(set(bids)) != list(bids) or not bids or bids[0] != 0.0:
            raise ValueError("bid grid must be sorted, unique and contain 0")
        if any(not (0.0 <= b <= 1.0) for b in bids):
            raise ValueError("bids must lie in [0, 1]")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.budget < 0:
            raise ValueError("budget must be nonnegative")
        if not (0.0 <= self.lam < 1.0):
            raise ValueError("lam must lie in [0, 1)")
        object.__setattr__(self, "bid_grid", bids)

    def tree_size(self) -> int:
        branch = self.g.points.size * len(self.bid_grid) * self.f.points.size
        return branch**self.horizon


def enumerate_policy_value(instance: TinyInstance, max_tree: int = 1_000_000) -> float:
    """Exact value of the best value-conditioned policy by full tree walk.

    Walks every (value, bid, rival-bid) branch of the decision tree with
    no memoization, grids or table machinery, so it is an independent
    oracle for `solve_value_table`.  Refuses instances whose tree exceeds
    `max_tree` branches.
    """
    if instance.tree_size() > max_tree:
        raise InstanceTooLargeError(
            f"decision tree has {instance.tree_size()} branches (cap {max_tree})"
        )
    g_pts, g_ms = instance.g.points, instance.g.masses
    f_pts, f_ms = instance.f.points, instance.f.masses
    bids = instance.bid_grid
    lam, h = instance.lam, instance.horizon

    def best_from(t_: int, remaining: float) -> float:
        if t_ > h:
            return 0.0
        total = 0.0
        for v, pv in zip(g_pts, g_ms):
            best = None
            for b in bids:
                if b > remaining + 1e-12:
                    continue
                ev = 0.0
                for m, pm in zip(f_pts, f_ms):
                    if b >= m:
                        ev += pm * ((v - b) + lam * best_from(t_ + 1, remaining - b))
                    else:
                        ev += pm * lam * best_from(t_ + 1, remaining)
                if best is None or ev > best:
                    best = ev
            total += pv * (best if best is not None else 0.0)
        return total

    return best_from(1, instance.budget)
