import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fpab import DiscreteAtoms, EmpiricalStep, PiecewiseLinearCdf, RngStream, Uniform, spec_from_dict

from oracles import ks_to_uniform


def test_uniform_cdf_values():
    u = Uniform(0.0, 0.5)
    assert u.cdf(0.25) == 0.5
    assert Uniform(0.4, 1.0).cdf(0.2) == 0.0
    assert u.cdf(0.7) == 1.0


def test_atoms_cdf_includes_atom_at_point():
    d = DiscreteAtoms([0.2, 0.6], [0.5, 0.5])
    assert d.cdf(0.2) == 0.5
    assert d.cdf(0.19999) == 0.0
    assert d.cdf(0.6) == 1.0


def test_quantile_examples():
    assert Uniform(0.0, 0.5).quantile(0.5) == 0.25
    d = DiscreteAtoms([0.2, 0.6], [0.5, 0.5])
    assert d.quantile(0.7) == 0.6
    assert d.quantile(0.5) == 0.2
    # p = 0 gives the support minimum for every variant
    assert Uniform(0.3, 0.9).quantile(0.0) == 0.3
    assert d.quantile(0.0) == 0.2
    assert EmpiricalStep([0.5, 0.1, 0.9]).quantile(0.0) == 0.1
    assert PiecewiseLinearCdf([(0.2, 0.0), (0.8, 1.0)]).quantile(0.0) == 0.2


def test_quantile_domain_error():
    with pytest.raises(ValueError):
        Uniform(0, 1).quantile(1.5)
    with pytest.raises(ValueError):
        Uniform(0, 1).quantile(-0.1)


def test_malformed_specs_rejected_at_construction():
    with pytest.raises(ValueError):
        Uniform(0.5, 0.2)
    with pytest.raises(ValueError):
        DiscreteAtoms([0.3, 0.2], [0.5, 0.5])  # not sorted
    with pytest.raises(ValueError):
        DiscreteAtoms([0.2, 0.6], [0.5, 0.6])  # masses do not sum to 1
    with pytest.raises(ValueError):
        PiecewiseLinearCdf([(0.1, 0.5), (0.6, 0.4)])  # non-monotone knots
    with pytest.raises(ValueError):
        EmpiricalStep([0.2, 1.4])


def test_point_mass_sampling():
    d = DiscreteAtoms([0.3], [1.0])
    rng = RngStream(123)
    assert all(d.sample(rng) == 0.3 for _ in range(50))


def test_uniform_sample_support():
    u = Uniform(0.4, 1.0)
    rng = RngStream(9)
    xs = u.sample_n(rng, 1000)
    assert np.all((xs >= 0.4) & (xs <= 1.0))


def test_same_seed_same_sequence():
    u = Uniform(0.0, 1.0)
    a = u.sample_n(RngStream(777), 100)
    b = u.sample_n(RngStream(777), 100)
    assert np.array_equal(a, b)
    # distinct stream ids decouple the draws
    c = u.sample_n(RngStream(777, stream=1), 100)
    assert not np.array_equal(a, c)


def test_replication_seed_derivation():
    r = RngStream.for_replication(100, 3)
    assert r.seed == 100 ^ 3
    assert RngStream.for_replication(100, 0).seed == 100


def test_serialization_round_trip():
    specs = [
        Uniform(0.1, 0.9),
        DiscreteAtoms([0.2, 0.5, 0.6], [0.25, 0.25, 0.5]),
        PiecewiseLinearCdf([(0.0, 0.0), (0.3, 0.4), (1.0, 1.0)]),
        EmpiricalStep([0.1, 0.4, 0.4, 0.8]),
    ]
    for spec in specs:
        clone = spec_from_dict(spec.to_dict())
        xs = np.linspace(0, 1, 37)
        assert np.allclose(spec.cdf(xs), clone.cdf(xs))


def test_spec_from_dict_rejects_unknown():
    with pytest.raises(ValueError):
        spec_from_dict({"kind": "gamma", "a": 1.0})
    with pytest.raises(ValueError):
        spec_from_dict({"lo": 0.0, "hi": 1.0})


def test_piecewise_linear_atom_at_first_knot():
    p = PiecewiseLinearCdf([(0.2, 0.3), (1.0, 1.0)])
    assert p.cdf(0.19999) == 0.0
    assert p.cdf(0.2) == 0.3
    assert p.atom_mass_at(0.2) == 0.3
    assert p.quantile(0.1) == 0.2  # inside the atom


_SPEC_STRATEGY = st.one_of(
    st.tuples(
        st.floats(0.0, 0.49, allow_nan=False),
        st.floats(0.51, 1.0, allow_nan=False),
    ).map(lambda ab: Uniform(*ab)),
    st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=1, max_size=5, unique=True).map(
        lambda pts: DiscreteAtoms(sorted(pts), [1.0 / len(pts)] * len(pts))
    ),
    st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=1, max_size=8).map(EmpiricalStep),
)


@given(_SPEC_STRATEGY, st.floats(0.0, 1.0, allow_nan=False))
def test_cdf_of_quantile_covers_p(spec, p):
    assert spec.cdf(spec.quantile(p)) >= p - 1e-12


@given(
    st.floats(0.0, 0.4, allow_nan=False),
    st.floats(0.6, 1.0, allow_nan=False),
    st.floats(0.0, 1.0, allow_nan=False),
)
def test_quantile_of_cdf_below_x_at_continuity_points(lo, hi, x):
    u = Uniform(lo, hi)
    assert u.quantile(u.cdf(x)) <= x + 1e-12 or x < lo


@given(_SPEC_STRATEGY, st.integers(0, 2**32 - 1))
@settings(max_examples=25)
def test_samples_live_in_support(spec, seed):
    rng = RngStream(seed)
    xs = spec.sample_n(rng, 64)
    assert np.all((xs >= 0.0) & (xs <= 1.0))
    assert np.all(spec.cdf(xs) > 0)


def _dkw_violations(spec, n_trials, n_samples, radius, seed):
    """Count trials whose empirical CDF strays beyond `radius` somewhere."""
    rng = RngStream(seed)
    violations = 0
    chunk = 100
    for start in range(0, n_trials, chunk):
        rows = min(chunk, n_trials - start)
        u = rng.uniforms(rows * n_samples).reshape(rows, n_samples)
        xs = np.sort(np.asarray(spec.quantile(u)), axis=1)
        if isinstance(spec, Uniform):
            d = ks_to_uniform(xs, spec.lo, spec.hi)
        else:
            # step-vs-step sup-norm is attained at the atoms
            pts = spec.points
            emp = (xs[:, :, None] <= pts[None, None, :]).mean(axis=1)
            d = np.abs(emp - np.asarray(spec.cdf(pts))[None, :]).max(axis=1)
        violations += int(np.count_nonzero(d > radius))
    return violations


@pytest.mark.slow
def test_monte_carlo_dkw_band_uniform():
    # delta = 1e-3 is nearly tight for a continuous law: about one
    # violation is expected in 1000 trials; the contract allows one.
    from fpab import dkw_radius

    radius = dkw_radius(10**5, 1e-3)
    bad = _dkw_violations(Uniform(0.0, 0.5), 1000, 10**5, radius, seed=1)
    assert bad <= 1, f"{bad} DKW violations in 1000 trials"


@pytest.mark.slow
def test_monte_carlo_dkw_band_discrete():
    from fpab import dkw_radius

    spec = DiscreteAtoms([0.1, 0.4, 0.75], [0.25, 0.5, 0.25])
    radius = dkw_radius(10**5, 1e-3)
    bad = _dkw_violations(spec, 1000, 10**5, radius, seed=7)
    assert bad <= 1
