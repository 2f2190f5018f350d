"""Repeated first-price auction engine with full or censored feedback.

One round: the bidder sees her value v, places b, the highest rival bid
is m; she wins iff b >= m (ties favor her), pays her own bid when she
wins, and observes either m itself (full feedback) or only the winning
bid max(b, m) (censored feedback).  The engine enforces budget
feasibility, tracks the stopping time, and is bit-reproducible given the
seed.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .distributions import Distribution, RngStream

__all__ = [
    "FULL",
    "CENSORED",
    "AuctionConfig",
    "RoundRecord",
    "Observation",
    "SimResult",
    "ContractViolationError",
    "settle_round",
    "make_observation",
    "run_auction",
    "result_to_csv",
]

FULL = "full"
CENSORED = "censored"


class ContractViolationError(RuntimeError):
    """A policy emitted a bid outside [0, min(1, remaining budget)]."""


@dataclass(frozen=True)
class AuctionConfig:
    """Static description of one repeated-auction run."""

    T: int
    B: float
    f: Distribution  # highest rival bid
    g: Distribution  # own value
    feedback: str = FULL
    lam: float = 0.0
    seed: int = 0
    # optional early stop: once the remaining budget cannot cover the
    # smallest positive grid bid and rival bids have no atom at zero, no
    # future round can be won, so the run may halt instead of idling.
    min_effective_bid: float = 0.0

    def __post_init__(self):
        if self.T < 1:
            raise ValueError(f"T must be >= 1, got {self.T!r}")
        if not self.B > 0:
            raise ValueError(f"initial budget must be positive, got {self.B!r}")
        if self.feedback not in (FULL, CENSORED):
            raise ValueError(f"feedback must be 'full' or 'censored', got {self.feedback!r}")
        if not (0.0 <= self.lam < 1.0):
            raise ValueError(f"lam must lie in [0, 1), got {self.lam!r}")


@dataclass(frozen=True)
class RoundRecord:
    """Full trace of one round (the experimenter's view, m included)."""

    t: int
    v: float
    b: float
    m: float
    won: bool
    r: float
    c: float
    o: float


@dataclass(frozen=True)
class Observation:
    """The policy-visible outcome of a round.

    Under censored feedback `m` is None: only the winning bid `o` is
    revealed, so a winner learns nothing about the rival bid beyond
    m <= b.
    """

    t: int
    v: float
    b: float
    won: bool
    r: float
    c: float
    o: float
    m: float | None


@dataclass
class SimResult:
    rounds: list
    tau_star: int
    total_utility: float
    total_discounted_utility: float

    def bids(self) -> np.ndarray:
        return np.array([rec.b for rec in self.rounds])


def settle_round(v: float, b: float, m: float):
    """Returns (won, r, c): win iff b >= m; the winner pays her own bid.

    Overbidding is legal, so r = v - b may be negative.
    """
    won = b >= m
    r = (v - b) if won else 0.0
    c = b if won else 0.0
    return won, r, c


def make_observation(mode: str, b: float, m: float):
    """Feedback payload (o, m_or_none): full mode reveals m, censored only o = max(b, m)."""
    if mode not in (FULL, CENSORED):
        raise ValueError(f"unknown feedback mode {mode!r}")
    o = max(b, m)
    return (o, m) if mode == FULL else (o, None)


def run_auction(config: AuctionConfig, policy, *, replication: int = 0, v_seq=None, m_seq=None) -> SimResult:
    """Run one simulation; deterministic given (config.seed, replication).

    Values and rival bids are inverse-transform draws from two uniform
    streams derived as (seed XOR replication, stream 0|1), so runs with
    the same seed couple exactly across policies.  Explicit `v_seq` /
    `m_seq` arrays replay fixed draws instead.
    """
    if v_seq is None:
        v_seq = config.g.quantile(RngStream.for_replication(config.seed, replication, stream=0).uniforms(config.T))
    if m_seq is None:
        m_seq = config.f.quantile(RngStream.for_replication(config.seed, replication, stream=1).uniforms(config.T))
    v_seq = np.asarray(v_seq, dtype=float)
    m_seq = np.asarray(m_seq, dtype=float)
    if v_seq.size < config.T or m_seq.size < config.T:
        raise ValueError("v_seq / m_seq shorter than the horizon")

    no_zero_atom = config.f.atom_mass_at(0.0) == 0.0
    rounds = []
    spent = 0.0
    tau_star = config.T + 1
    total_u = 0.0
    total_disc = 0.0
    lam_pow = 1.0

    for t in range(1, config.T + 1):
        remaining = config.B - spent
        v = float(v_seq[t - 1])
        m = float(m_seq[t - 1])
        b = float(policy.bid(v))
        if not (-1e-9 <= b <= min(1.0, remaining) + 1e-9):
            raise ContractViolationError(
                f"round {t}: bid {b!r} outside [0, min(1, remaining budget {remaining!r})]"
            )
        b = min(max(b, 0.0), min(1.0, remaining))
        won, r, c = settle_round(v, b, m)
        o, m_vis = make_observation(config.feedback, b, m)
        policy.observe(Observation(t=t, v=v, b=b, won=won, r=r, c=c, o=o, m=m_vis))

        spent += c
        rounds.append(RoundRecord(t=t, v=v, b=b, m=m, won=won, r=r, c=c, o=o))
        total_u += r
        total_disc += lam_pow * r
        lam_pow *= config.lam

        remaining = config.B - spent
        if abs(remaining) <= 1e-9:
            tau_star = t + 1
            break
        if remaining < config.min_effective_bid and no_zero_atom:
            # no affordable bid can ever win again
            tau_star = t + 1
            break

    return SimResult(
        rounds=rounds,
        tau_star=tau_star,
        total_utility=total_u,
        total_discounted_utility=total_disc,
    )


def result_to_csv(result: SimResult, initial_budget: float) -> str:
    """Round-level CSV: t, v, b, m, won, r, c, o, remaining_budget."""
    buf = io.StringIO()
    buf.write("t,v,b,m,won,r,c,o,remaining_budget\n")
    remaining = initial_budget
    for rec in result.rounds:
        remaining -= rec.c
        buf.write(
            f"{rec.t},{rec.v!r},{rec.b!r},{rec.m!r},{int(rec.won)},"
            f"{rec.r!r},{rec.c!r},{rec.o!r},{remaining!r}\n"
        )
    return buf.getvalue()
