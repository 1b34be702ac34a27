import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curvemoduli.errors import ConfigError, DomainError, FormatError, NumericalError
from curvemoduli.series import (
    SOBOLEV1,
    SUP,
    Annulus,
    BiSeries,
    LaurentSeries,
    SmoothnessClass,
    circle,
    format_biseries,
    format_laurent,
    laurent_split,
    parse_biseries,
    parse_laurent,
    read_series,
    restrict,
    s_norm,
    series_from_samples,
    series_invert,
    series_multiply,
    substitute,
    sup_on_circle,
    write_series,
)

A = Annulus(0.5, 2.0)


def random_series(rng, domain=A, lo=-8, hi=8, decay=0.7):
    k = np.arange(lo, hi + 1)
    c = (rng.normal(size=k.size) + 1j * rng.normal(size=k.size)) * decay ** np.abs(k)
    return LaurentSeries(domain, lo, c)


# --- annulus and smoothness types -------------------------------------------

def test_annulus_invariants():
    assert Annulus(0, 2).is_disk
    assert Annulus(0.5, 2).sample_radius == pytest.approx(1.0)
    assert Annulus(0, 2).sample_radius == pytest.approx(1.0)
    with pytest.raises(ConfigError):
        Annulus(2, 1)
    with pytest.raises(ConfigError):
        Annulus(-1, 1)


def test_smoothness_exponent_below_one_rejected():
    with pytest.raises(ConfigError):
        SmoothnessClass("sobolev", 0.5)
    with pytest.raises(ConfigError):
        SmoothnessClass("hoelder", 1.0)


def test_disk_series_drops_negative_window():
    f = LaurentSeries(Annulus(0, 1), -2, [0, 0, 1, 2])
    assert f.min_index == 0 and f.coefficient(1) == 2
    with pytest.raises(ConfigError):
        LaurentSeries(Annulus(0, 1), -1, [1, 1])


# --- sampling ------------------------------------------------------------------

def test_samples_of_laurent_polynomial_are_exact():
    A1 = Annulus(0.5, 2)
    z = circle(1.0, 16)
    f = series_from_samples(z + 2 / z, -2, 2, A1)
    assert f.as_dict(1e-14) == pytest.approx({-1: 2, 1: 1})


def test_samples_of_constant():
    f = series_from_samples(np.ones(16), -2, 2, A)
    assert f.distance(LaurentSeries.constant(A, 1.0)) < 1e-15


def test_samples_of_simple_pole_outside():
    dom = Annulus(1, 2)
    z = circle(1.5, 256)
    f = series_from_samples(1 / (z - 3), -32, 32, dom, radius=1.5)
    k = np.arange(0, 33)
    assert np.max(np.abs(f.coefficients[32:] + 3.0 ** (-k - 1))) < 1e-12
    assert np.max(np.abs(f.coefficients[:32])) < 1e-12


def test_insufficient_samples_rejected():
    with pytest.raises(ConfigError, match="insufficient samples"):
        series_from_samples(np.ones(8), -8, 8, A)
    with pytest.raises(ConfigError):
        series_from_samples(np.ones(100), -2, 2, A)


# --- multiplication and inversion ----------------------------------------------

def test_multiply_monomials():
    z = LaurentSeries.monomial(A, 1)
    zi = LaurentSeries.monomial(A, -1)
    assert series_multiply(z, zi).as_dict(0) == {0: 1}
    a = LaurentSeries.from_dict(A, {0: 1, 1: 1})
    b = LaurentSeries.from_dict(A, {0: 1, 1: -1})
    assert series_multiply(a, b).as_dict(0) == {0: 1, 2: -1}


def test_multiply_exponentials():
    from math import factorial

    dom = Annulus(0, 2)
    a = LaurentSeries(dom, 0, [1 / factorial(k) for k in range(33)])
    b = LaurentSeries(dom, 0, [(-1) ** k / factorial(k) for k in range(33)])
    p = series_multiply(a, b).with_window(0, 32)
    assert p.distance(LaurentSeries.constant(dom, 1.0)) < 1e-12


def test_multiply_domain_mismatch():
    with pytest.raises(DomainError):
        series_multiply(LaurentSeries.constant(A, 1), LaurentSeries.constant(Annulus(0.4, 2), 1))


def test_invert_examples():
    assert series_invert(LaurentSeries.constant(A, 2.0), window=(-4, 4)).as_dict(1e-14) == \
        pytest.approx({0: 0.5})
    inv = series_invert(LaurentSeries.monomial(A, 1), window=(-4, 4))
    assert inv.as_dict(1e-14) == pytest.approx({-1: 1})
    g = series_invert(LaurentSeries.from_dict(A, {0: 1, 1: 0.3}), window=(-64, 64))
    k = np.arange(0, 65)
    assert np.max(np.abs(g.coefficients[64:] - (-0.3) ** k)) < 1e-12
    assert np.max(np.abs(g.coefficients[:64])) < 1e-12


def test_invert_rejects_zero_on_circle():
    with pytest.raises(NumericalError, match="not invertible"):
        series_invert(LaurentSeries.from_dict(A, {0: 1, 1: -1}), window=(-8, 8))


def test_inverse_round_trip(rng):
    for _ in range(10):
        a = random_series(rng, decay=0.3) + 5.0
        b = series_invert(a, window=(-64, 64))
        prod = series_multiply(a, b)
        err = sup_on_circle(prod - LaurentSeries.constant(A, 1.0), 1.0)
        assert err < 1e-10


# --- split -----------------------------------------------------------------------

def test_split_examples():
    plus, minus = laurent_split(LaurentSeries.from_dict(A, {1: 1, -1: 1}))
    assert plus.as_dict(0) == {1: 1} and minus.as_dict(0) == {-1: 1}
    f = LaurentSeries.from_dict(A, {0: 2, 3: 1})
    plus, minus = laurent_split(f)
    assert plus.distance(f) == 0 and minus.max_abs_coefficient() == 0


def test_split_of_pole_inside():
    f = LaurentSeries.from_function(lambda z: 1 / (z - 0.3), A, window=(-64, 64))
    plus, minus = laurent_split(f)
    assert plus.max_abs_coefficient() < 1e-12
    assert minus.coefficient(-1) == pytest.approx(1.0)
    assert minus.coefficient(-2) == pytest.approx(0.3)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_split_is_an_exact_projector_pair(seed):
    f = random_series(np.random.default_rng(seed))
    plus, minus = laurent_split(f)
    assert (plus + minus).distance(f) == 0
    assert np.all(plus.indices >= 0) and np.all(minus.coefficients[minus.indices >= 0] == 0)
    p2, m2 = laurent_split(plus)
    assert p2.distance(plus) == 0 and m2.max_abs_coefficient() == 0
    p3, m3 = laurent_split(minus)
    assert m3.distance(minus) == 0 and p3.max_abs_coefficient() == 0


# --- norms -----------------------------------------------------------------------

def test_norm_examples():
    one = LaurentSeries.constant(A, 1.0)
    assert s_norm(one, SUP) == pytest.approx(1.0)
    assert s_norm(one, SOBOLEV1) == pytest.approx(1.0)
    for m in (1, 3, -2):
        s = SmoothnessClass("sobolev", 1.5)
        assert s_norm(LaurentSeries.monomial(A, m), s) == pytest.approx((1 + abs(m)) ** 1.5)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0, 2 * np.pi))
def test_sobolev_norm_rotation_invariant(seed, theta):
    f = random_series(np.random.default_rng(seed))
    for s in (SOBOLEV1, SmoothnessClass("sobolev", 2.0)):
        assert abs(s_norm(f.rotated(theta), s) - s_norm(f, s)) < 1e-12 * max(1, s_norm(f, s))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_plus_projection_non_expansive(seed):
    f = random_series(np.random.default_rng(seed))
    plus, _ = laurent_split(f)
    for s in (SOBOLEV1, SmoothnessClass("sobolev", 3.0)):
        assert s_norm(plus, s) <= s_norm(f, s)


def test_submultiplicativity_constant_bounded(rng):
    ratios = []
    for _ in range(300):
        a, b = random_series(rng), random_series(rng)
        ratios.append(s_norm(series_multiply(a, b)) / (s_norm(a) * s_norm(b)))
    assert max(ratios) < 2.0


def test_schwarz_decay_for_minus_series(rng):
    dom = Annulus(0.25, 1.0)
    for m in range(1, 6):
        f = LaurentSeries.monomial(dom, -m)
        assert sup_on_circle(f, 1.0) <= 0.25 * sup_on_circle(f, 0.25) + 1e-15
    for _ in range(20):
        c = rng.normal(size=8) + 1j * rng.normal(size=8)
        f = LaurentSeries(dom, -8, np.concatenate([c * 0.25 ** np.arange(8, 0, -1), [0]]))
        assert sup_on_circle(f, 1.0, 512) <= 0.25 * sup_on_circle(f, 0.25, 512) * (1 + 1e-9)


# --- substitution and restriction -----------------------------------------------

def _shear(eps, window=(-16, 16), w_degree=6, domain=A, rho=0.9):
    return BiSeries.from_dict(domain, rho, {(1, 0): 1, (0, 1): eps}, z_window=window, w_degree=w_degree)


def test_substitute_identity_and_linear():
    f = random_series(np.random.default_rng(1), lo=-4, hi=4)
    g = BiSeries.from_dict(A, 0.9, {(1, 0): 1}, z_window=(-8, 8), w_degree=3)
    assert substitute(f, g).distance(BiSeries.from_laurent(f, 0.9)) < 1e-13
    z = LaurentSeries.monomial(A, 1)
    assert substitute(z, _shear(0.05)).distance(_shear(0.05)) < 1e-15


def test_substitute_square_binomial():
    eps = 0.05
    r = substitute(LaurentSeries.monomial(A, 2), _shear(eps))
    expected = BiSeries.from_dict(A, 0.9, {(2, 0): 1, (1, 1): 2 * eps, (0, 2): eps**2})
    assert r.distance(expected) < 1e-15


def test_substitute_leaving_annulus():
    f = LaurentSeries.from_dict(A, {-1: 1.0, 1: 1.0})
    with pytest.raises(DomainError, match="composition leaves annulus"):
        substitute(f, _shear(0.7))


def test_restrict():
    f = LaurentSeries.from_dict(A, {-1: 1, 1: 1})
    assert restrict(f, A).distance(f) == 0
    sub = Annulus(0.9, 1.2)
    r = restrict(f, sub)
    assert r.domain == sub and np.array_equal(r.coefficients, f.coefficients)
    with pytest.raises(DomainError):
        restrict(f, Annulus(0.1, 1))
    g = LaurentSeries.from_function(lambda z: 1 / (z - 3), A, window=(-32, 32))
    assert s_norm(restrict(g, sub), SUP) <= s_norm(g, SUP)


# --- file format -----------------------------------------------------------------

def test_laurent_and_biseries_round_trip(tmp_path, rng):
    f = random_series(rng)
    g = parse_laurent(format_laurent(f))
    assert np.array_equal(g.coefficients, f.coefficients) and g.domain == f.domain
    F = BiSeries.from_dict(A, 0.9, {(-2, 0): 1 + 2j, (3, 1): np.pi})
    G = parse_biseries(format_biseries(F))
    assert np.array_equal(G.coefficients, F.coefficients) and G.w_radius == F.w_radius
    write_series(tmp_path / "f.txt", f)
    assert np.array_equal(read_series(tmp_path / "f.txt").coefficients, f.coefficients)


def test_malformed_file_rejected():
    with pytest.raises(FormatError):
        parse_laurent("LAURENT 0 1 0.5 2\n0 1 0\n")
    with pytest.raises(FormatError):
        parse_laurent("SERIES 0 0 0.5 2\n0 1 0\n")
