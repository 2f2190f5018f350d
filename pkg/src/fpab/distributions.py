"""Distributions on [0, 1] for auction values and rival bids.

Every distribution exposes a right-continuous CDF, a generalized-inverse
quantile function, and inverse-transform sampling.  Inverse transform is
used everywhere so that simulations driven by shared uniform streams are
coupled exactly (common random numbers across policies).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Distribution",
    "Uniform",
    "DiscreteAtoms",
    "PiecewiseLinearCdf",
    "EmpiricalStep",
    "RngStream",
    "spec_from_dict",
]

_MASS_TOL = 1e-12


def _as_scalar_or_array(x, fn):
    arr = np.asarray(x, dtype=float)
    out = fn(arr)
    if np.ndim(x) == 0:
        return float(out)
    return out


class Distribution:
    """Base class: a probability distribution supported inside [0, 1]."""

    def cdf(self, x):
        """P(X <= x), atoms included at x (right-continuous)."""
        raise NotImplementedError

    def quantile(self, p):
        """Generalized inverse inf{x : cdf(x) >= p}; p=0 maps to the support minimum."""
        raise NotImplementedError

    def support_min(self) -> float:
        raise NotImplementedError

    def atom_mass_at(self, x: float) -> float:
        """Point mass P(X == x); zero for continuous parts."""
        return 0.0

    def sample(self, rng: "RngStream") -> float:
        return float(self.quantile(rng.uniform()))

    def sample_n(self, rng: "RngStream", n: int) -> np.ndarray:
        return np.asarray(self.quantile(rng.uniforms(n)), dtype=float)

    def to_dict(self) -> dict:
        raise NotImplementedError

    def _check_p(self, p):
        arr = np.asarray(p, dtype=float)
        if np.any((arr < 0) | (arr > 1)) or np.any(~np.isfinite(arr)):
            raise ValueError(f"quantile argument must lie in [0, 1], got {p!r}")


@dataclass(frozen=True)
class Uniform(Distribution):
    """Uniform distribution on [lo, hi] with 0 <= lo < hi <= 1."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (0.0 <= self.lo < self.hi <= 1.0):
            raise ValueError(f"need 0 <= lo < hi <= 1, got lo={self.lo}, hi={self.hi}")

    def cdf(self, x):
        lo, hi = self.lo, self.hi
        return _as_scalar_or_array(x, lambda a: np.clip((a - lo) / (hi - lo), 0.0, 1.0))

    def quantile(self, p):
        self._check_p(p)
        lo, hi = self.lo, self.hi
        return _as_scalar_or_array(p, lambda a: lo + a * (hi - lo))

    def support_min(self) -> float:
        return self.lo

    def to_dict(self) -> dict:
        return {"kind": "uniform", "lo": self.lo, "hi": self.hi}


class DiscreteAtoms(Distribution):
    """Finitely many atoms; masses must be positive and sum to one."""

    def __init__(self, points, masses):
        points = np.asarray(points, dtype=float)
        masses = np.asarray(masses, dtype=float)
        if points.ndim != 1 or points.shape != masses.shape or points.size == 0:
            raise ValueError("points and masses must be equal-length non-empty 1-d arrays")
        if np.any(np.diff(points) <= 0):
            raise ValueError("points must be strictly increasing")
        if np.any((points < 0) | (points > 1)):
            raise ValueError("support must lie in [0, 1]")
        if np.any(masses <= 0):
            raise ValueError("masses must be positive")
        if abs(masses.sum() - 1.0) > _MASS_TOL:
            raise ValueError(f"masses sum to {masses.sum()!r}, expected 1 within {_MASS_TOL}")
        self.points = points
        self.masses = masses
        self._cum = np.cumsum(masses)

    def cdf(self, x):
        def eval_(a):
            idx = np.searchsorted(self.points, a, side="right")
            padded = np.concatenate([[0.0], self._cum])
            return padded[idx]

        return _as_scalar_or_array(x, eval_)

    def quantile(self, p):
        self._check_p(p)

        def eval_(a):
            idx = np.searchsorted(self._cum, a, side="left")
            idx = np.minimum(idx, self.points.size - 1)
            return self.points[idx]

        return _as_scalar_or_array(p, eval_)

    def support_min(self) -> float:
        return float(self.points[0])

    def atom_mass_at(self, x: float) -> float:
        hit = np.nonzero(self.points == x)[0]
        return float(self.masses[hit[0]]) if hit.size else 0.0

    def to_dict(self) -> dict:
        return {
            "kind": "atoms",
            "points": [float(p) for p in self.points],
            "masses": [float(m) for m in self.masses],
        }

    def __repr__(self):
        pairs = ", ".join(f"({p:g}, {m:g})" for p, m in zip(self.points, self.masses))
        return f"DiscreteAtoms[{pairs}]"


class PiecewiseLinearCdf(Distribution):
    """CDF given by linear interpolation between knots (x_k, F(x_k)).

    Zero below the first knot; a positive F at the first knot encodes an
    atom there.  Knot x-coordinates must be strictly increasing and the
    final F value must equal 1.
    """

    def __init__(self, knots):
        knots = [(float(x), float(f)) for x, f in knots]
        if len(knots) < 2:
            raise ValueError("need at least two knots")
        xs = np.array([x for x, _ in knots])
        fs = np.array([f for _, f in knots])
        if np.any(np.diff(xs) <= 0):
            raise ValueError("knot x-coordinates must be strictly increasing")
        if np.any(np.diff(fs) < 0):
            raise ValueError("knot F-values must be nondecreasing")
        if np.any((xs < 0) | (xs > 1)) or np.any((fs < 0) | (fs > 1)):
            raise ValueError("knots must lie in the unit square")
        if abs(fs[-1] - 1.0) > _MASS_TOL:
            raise ValueError("final knot must have F = 1")
        fs[-1] = 1.0
        self.xs = xs
        self.fs = fs

    def cdf(self, x):
        def eval_(a):
            out = np.interp(a, self.xs, self.fs)
            return np.where(a < self.xs[0], 0.0, out)

        return _as_scalar_or_array(x, eval_)

    def quantile(self, p):
        self._check_p(p)

        def eval_(a):
            # first knot index k with F_k >= p; invert linearly on (k-1, k]
            k = np.searchsorted(self.fs, a, side="left")
            k = np.minimum(k, self.fs.size - 1)
            x_hi, f_hi = self.xs[k], self.fs[k]
            x_lo = self.xs[np.maximum(k - 1, 0)]
            f_lo = self.fs[np.maximum(k - 1, 0)]
            span = f_hi - f_lo
            with np.errstate(invalid="ignore", divide="ignore"):
                frac = np.where(span > 0, (a - f_lo) / np.where(span > 0, span, 1.0), 1.0)
            x = x_lo + frac * (x_hi - x_lo)
            return np.where(k == 0, self.xs[0], x)

        return _as_scalar_or_array(p, eval_)

    def support_min(self) -> float:
        return float(self.xs[0])

    def atom_mass_at(self, x: float) -> float:
        return float(self.fs[0]) if x == self.xs[0] else 0.0

    def to_dict(self) -> dict:
        return {"kind": "piecewise", "knots": [[float(x), float(f)] for x, f in zip(self.xs, self.fs)]}


class EmpiricalStep(Distribution):
    """Step CDF of a fixed sample: F(x) = (1/n) #{values <= x}."""

    def __init__(self, values):
        values = np.sort(np.asarray(values, dtype=float))
        if values.size == 0:
            raise ValueError("need at least one value")
        if np.any((values < 0) | (values > 1)):
            raise ValueError("support must lie in [0, 1]")
        self.values = values

    def cdf(self, x):
        n = self.values.size
        return _as_scalar_or_array(x, lambda a: np.searchsorted(self.values, a, side="right") / n)

    def quantile(self, p):
        self._check_p(p)
        n = self.values.size

        def eval_(a):
            k = np.ceil(a * n - 1e-12).astype(int)
            k = np.clip(k, 1, n)
            return self.values[k - 1]

        return _as_scalar_or_array(p, eval_)

    def support_min(self) -> float:
        return float(self.values[0])

    def atom_mass_at(self, x: float) -> float:
        return float(np.count_nonzero(self.values == x)) / self.values.size

    def to_dict(self) -> dict:
        return {"kind": "empirical", "values": [float(v) for v in self.values]}


def spec_from_dict(d: dict) -> Distribution:
    """Deserialize a distribution from its config form (tag + parameters)."""
    if not isinstance(d, dict) or "kind" not in d:
        raise ValueError(f"distribution spec must be a mapping with a 'kind' tag, got {d!r}")
    d = dict(d)
    kind = d.pop("kind")
    try:
        if kind == "uniform":
            return Uniform(**d)
        if kind == "atoms":
            return DiscreteAtoms(**d)
        if kind == "piecewise":
            return PiecewiseLinearCdf(**d)
        if kind == "empirical":
            return EmpiricalStep(**d)
    except TypeError as exc:
        raise ValueError(f"bad parameters for distribution kind {kind!r}: {exc}") from exc
    raise ValueError(f"unknown distribution kind {kind!r}")


class RngStream:
    """Deterministic uniform stream owned by a single consumer.

    Generator: numpy PCG64 seeded with SeedSequence((seed, stream)); the
    same (seed, stream) pair yields the same draw sequence on every run
    and platform.  Parallel replications derive sub-seeds as
    ``master_seed XOR replication_index`` (see :meth:`for_replication`).
    """

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed)
        self.stream = int(stream)
        self.count = 0
        self._gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence((self.seed & 0xFFFFFFFFFFFFFFFF, self.stream))))

    @classmethod
    def for_replication(cls, master_seed: int, replication: int, stream: int = 0) -> "RngStream":
        return cls(int(master_seed) ^ int(replication), stream)

    def uniform(self) -> float:
        self.count += 1
        return float(self._gen.random())

    def uniforms(self, n: int) -> np.ndarray:
        self.count += int(n)
        return self._gen.random(int(n))

    def integers(self, lo: int, hi: int) -> int:
        self.count += 1
        return int(self._gen.integers(lo, hi))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream={self.stream}, count={self.count})"


def sample(spec: Distribution, rng: RngStream) -> float:
    """Inverse-transform draw from `spec` using one uniform from `rng`."""
    return spec.sample(rng)
