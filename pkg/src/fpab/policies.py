"""Bidding agents: oracle, full-feedback learner, censored-feedback
phased learner, and the half-value baseline.

All agents share the bid rule "maximize the one-step lookahead Q under
the current CDF estimates".  Whenever the remaining budget covers the
whole lookahead window (t0 - t rounds of at-most-1 spend), the
continuation value is budget-independent over every reachable budget, so
the argmax collapses exactly to the myopic grid bid argmax (v - b) F(b);
agents take that fast path and solve the full (budget, time) table only
when the budget constraint can bind.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .auction import Observation
from .distributions import Distribution, Uniform
from .dp import DpConfig, ValueTable, horizon_t0, myopic_grid_bid, optimal_bid, solve_value_table
from .estimation import CensoredSample, EmpiricalCdf, KernelSpec, cox_fit, zeng_estimate

__all__ = [
    "BidderParams",
    "PhaseSchedule",
    "ModeError",
    "ScheduleError",
    "half_value_bid",
    "HalfValuePolicy",
    "OraclePolicy",
    "Alg1Policy",
    "Alg2Policy",
]

_UNIT_UNIFORM = Uniform(0.0, 1.0)  # the identity-CDF prior on [0, 1]


class ModeError(ValueError):
    """Feedback mode does not match what the policy expects."""


class ScheduleError(RuntimeError):
    """Phase-end maintenance requested away from a phase boundary."""


@dataclass(frozen=True)
class BidderParams:
    """Knobs shared by the DP-based agents."""

    lam: float
    c1: float = 1.0
    bid_grid_step: float = 0.01
    recompute_every: int = 1
    feature_dim: int = 4
    bandwidth_const: float = 1.0

    def __post_init__(self):
        if self.recompute_every < 1:
            raise ValueError("recompute_every must be >= 1")
        if self.feature_dim < 1:
            raise ValueError("feature_dim must be >= 1")

    def dp_config(self) -> DpConfig:
        return DpConfig(lam=self.lam, c1=self.c1, bid_grid_step=self.bid_grid_step)


@dataclass(frozen=True)
class PhaseSchedule:
    """Doubling phases: phase 1 lasts 2 rounds, phase i > 1 lasts 2^i rounds."""

    def length_of(self, i: int) -> int:
        if i < 1:
            raise ValueError("phases are 1-based")
        return 2 if i == 1 else 2**i

    def end_of(self, i: int) -> int:
        """Cumulative end round of phase i: 2, 6, 14, 30, ..."""
        if i < 1:
            raise ValueError("phases are 1-based")
        return 2 ** (i + 1) - 2

    def phase_of(self, t: int) -> int:
        if t < 1:
            raise ValueError("rounds are 1-based")
        i = 1
        while self.end_of(i) < t:
            i += 1
        return i

    def is_boundary(self, t: int) -> bool:
        return t >= 2 and self.end_of(self.phase_of(t)) == t


def half_value_bid(v: float) -> float:
    """The classic shading baseline: bid half the value."""
    return v / 2.0


class _DpBidderBase:
    """Budget tracking plus the shared fast/slow bid computation."""

    def __init__(self, params: BidderParams, budget: float):
        self.params = params
        self.cfg = params.dp_config()
        self.initial_budget = float(budget)
        self.remaining = float(budget)
        self.t = 1
        self.halted = False
        self._bids = self.cfg.bid_grid()
        self._table: ValueTable | None = None
        self._table_built_at = -1
        self._table_version = -1
        self._version = 0

    # subclasses supply the current estimates
    def _f_like(self):
        raise NotImplementedError

    def _g_like(self):
        raise NotImplementedError

    def _needs_rebuild(self, t0: int) -> bool:
        if self._table is None:
            return True
        if t0 > self._table.t0 or self.t + 1 > self._table.t0:
            return True  # cached window no longer covers the horizon rule
        if self._table_version == self._version:
            return False  # nothing new learned since the build
        return self.t - self._table_built_at >= self.params.recompute_every

    def bid(self, v: float) -> float:
        step = self.cfg.bid_grid_step
        if self.halted or self.remaining < step - 1e-12:
            return 0.0
        rem_idx = int(math.floor(self.remaining / step + 1e-9))
        t0 = horizon_t0(self.t, self.cfg.lam, self.cfg.c1)
        window = t0 - self.t
        f_like = self._f_like()
        j_max = min(self._bids.size - 1, rem_idx)
        if rem_idx >= window * self.cfg.n_bid_steps:
            # budget cannot bind within the lookahead window
            f_grid = np.asarray(f_like.cdf(self._bids[: j_max + 1]), dtype=float)
            return myopic_grid_bid(v, f_grid, self._bids, j_max)
        if self._needs_rebuild(t0):
            self._table = solve_value_table(
                f_like, self._g_like(), self.t, rem_idx * step, self.cfg, t0=t0
            )
            self._table_built_at = self.t
            self._table_version = self._version
        return optimal_bid(self._table, v, rem_idx * step, self.t, f_like, self.cfg)

    def _settle_budget(self, obs: Observation):
        self.remaining -= obs.c
        if self.remaining <= 1e-12:
            self.remaining = max(self.remaining, 0.0)
            self.halted = True
        self.t += 1


class OraclePolicy(_DpBidderBase):
    """Benchmark bidder that knows the true distributions."""

    def __init__(self, params: BidderParams, budget: float, f: Distribution, g: Distribution):
        super().__init__(params, budget)
        self.f = f
        self.g = g

    def _f_like(self):
        return self.f

    def _g_like(self):
        return self.g

    def _needs_rebuild(self, t0: int) -> bool:
        # distributions never change; rebuild whenever the window moved
        if self._table is None:
            return True
        return t0 > self._table.t0 or self.t + 1 > self._table.t0 or self.t - self._table_built_at >= 1

    def observe(self, obs: Observation):
        self._settle_budget(obs)


class Alg1Policy(_DpBidderBase):
    """Full-feedback learner: empirical CDFs refreshed every round.

    Starts from the identity-CDF prior; inserts the revealed rival bid
    after every round, and the observed value too when the value
    distribution is not supplied.
    """

    def __init__(self, params: BidderParams, budget: float, true_g: Distribution | None = None):
        super().__init__(params, budget)
        self.f_hat = EmpiricalCdf()
        self.true_g = true_g
        self.g_hat = EmpiricalCdf()

    def _f_like(self):
        return self.f_hat if self.f_hat.count else _UNIT_UNIFORM

    def _g_like(self):
        if self.true_g is not None:
            return self.true_g
        return self.g_hat if self.g_hat.count else _UNIT_UNIFORM

    def observe(self, obs: Observation):
        if obs.m is None:
            raise ModeError("full-feedback learner fed a censored round")
        self.f_hat.insert(obs.m)
        if self.true_g is None:
            self.g_hat.insert(obs.v)
        self._version += 1
        self._settle_budget(obs)


class Alg2Policy(_DpBidderBase):
    """Censored-feedback learner with doubling phases.

    The rival-bid CDF is refit only at phase ends, from every round seen
    so far: proportional-hazards scores on both indicator sides, then the
    kernel product-limit estimate.  The value CDF updates every round.
    Each round contributes one censored sample: a loss reveals the rival
    bid exactly (event), a win censors it at the own bid.
    """

    def __init__(self, params: BidderParams, budget: float, true_g: Distribution | None = None):
        super().__init__(params, budget)
        self.schedule = PhaseSchedule()
        self.kernel = KernelSpec(bandwidth_const=params.bandwidth_const)
        self.samples: list[CensoredSample] = []
        self.f_est = None  # censored CDF estimate; prior until first refit
        self.true_g = true_g
        self.g_hat = EmpiricalCdf()
        self.phase = 1
        self.rounds_done = 0
        self.wins = 0
        self._last_bid = 0.0
        self._last_obs = 0.0

    def _f_like(self):
        return self.f_est if self.f_est is not None else _UNIT_UNIFORM

    def _g_like(self):
        if self.true_g is not None:
            return self.true_g
        return self.g_hat if self.g_hat.count else _UNIT_UNIFORM

    def _features(self) -> tuple:
        # history summary before the current round; all-zero on round 1
        if self.rounds_done == 0:
            feats = [0.0] * 4
        else:
            feats = [
                self._last_bid,
                self._last_obs,
                self.remaining / self.initial_budget,
                self.wins / self.rounds_done,
            ]
        d = self.params.feature_dim
        return tuple((feats + [0.0] * d)[:d])

    def observe(self, obs: Observation):
        if obs.won:
            sample = CensoredSample(y=1.0 - obs.b, event=False, features=self._features())
        else:
            sample = CensoredSample(y=1.0 - obs.o, event=True, features=self._features())
        self.samples.append(sample)
        if self.true_g is None:
            self.g_hat.insert(obs.v)
        self.wins += int(obs.won)
        self._last_bid = obs.b
        self._last_obs = obs.o
        self.rounds_done += 1
        self._settle_budget(obs)
        if self.rounds_done == self.schedule.end_of(self.phase):
            self.phase_end()

    def phase_end(self):
        """Refit the censored CDF estimate from all data gathered so far.

        Legal exactly at phase boundaries; the refreshed estimate serves
        every round of the next phase, so the CDF used during phase i+1
        is a function of phases <= i only.
        """
        if self.rounds_done != self.schedule.end_of(self.phase):
            raise ScheduleError(
                f"phase {self.phase} ends at round {self.schedule.end_of(self.phase)}, "
                f"not {self.rounds_done}"
            )
        beta = cox_fit(self.samples, "event")
        gamma = cox_fit(self.samples, "censor")
        self.f_est = zeng_estimate(self.samples, beta, gamma, self.kernel)
        self.phase += 1
        self._version += 1


class HalfValuePolicy:
    """Bid v/2 rounded to the bid grid, capped at the remaining budget.

    Rounding keeps the baseline on the same action set as the
    grid-constrained agents, so its per-round regret against the oracle
    is nonnegative by construction; the utility shift is O(step^2).
    """

    def __init__(self, budget: float, grid_step: float = 0.01):
        self.initial_budget = float(budget)
        self.remaining = float(budget)
        self.grid_step = float(grid_step)
        self.halted = False

    def bid(self, v: float) -> float:
        step = self.grid_step
        if self.halted or self.remaining < step - 1e-12:
            return 0.0
        b = round(half_value_bid(v) / step) * step
        cap = math.floor(self.remaining / step + 1e-9) * step
        return min(b, 1.0, cap)

    def observe(self, obs: Observation):
        self.remaining -= obs.c
        if self.remaining <= 1e-12:
            self.remaining = max(self.remaining, 0.0)
            self.halted = True
