import numpy as np
import pytest

from curvemoduli.distorted import (
    DistortedCylinder,
    DistortedWP,
    dwp_iteration_step,
    evaluate_dwp,
    extract_dwp_coefficients,
    format_dwp,
    parse_dwp,
    pullback,
    read_dwp,
    solve_dwp,
    write_dwp,
)
from curvemoduli.errors import ConfigError, ConvergenceError, DomainError, FormatError, NumericalError
from curvemoduli.series import Annulus, BiSeries, LaurentSeries, circle, laurent_split
from curvemoduli.weierstrass import WeierstrassPolynomial, polish_roots, roots_at

CORE = Annulus(0.5, 2.0)
WIN = (-48, 48)


@pytest.fixture(scope="module")
def shear():
    return DistortedCylinder.shear(0.5, 2.0, 0.9, 0.05, window=WIN, w_degree=12)


@pytest.fixture(scope="module")
def ident():
    return DistortedCylinder.identity(0.5, 2.0, 0.9, window=WIN, w_degree=12)


def base_wp(extra=None):
    f2 = {1: -0.25}
    f2.update(extra or {})
    return WeierstrassPolynomial((LaurentSeries.zeros(CORE, (0, 0)), LaurentSeries.from_dict(CORE, f2)))


def bi(coeffs, cyl, w_degree=12):
    return BiSeries.from_dict(CORE, cyl.rho, coeffs, z_window=cyl.z_window, w_degree=w_degree)


def rich_wp():
    """Plus parts with every positive power, so ``Q`` never vanishes exactly."""
    f2 = LaurentSeries.from_function(lambda z: -z / 4 + 0.05 / (1 - 0.4 * z), CORE, window=(0, 48))
    return WeierstrassPolynomial((LaurentSeries.from_dict(CORE, {1: 0.1}), f2))


@pytest.fixture(scope="module")
def shear_solution(shear):
    return solve_dwp(base_wp(), shear, tol=1e-10)


@pytest.fixture(scope="module")
def rich_solution(shear):
    return solve_dwp(rich_wp(), shear, tol=1e-10)


# --- cylinder geometry ------------------------------------------------------------

def test_shear_cylinder_validates(shear):
    shear.validate()
    assert not shear.is_identity
    assert shear.r < shear.r_prime < shear.R_prime < shear.R


def test_transition_core_mismatch_rejected():
    t = BiSeries.from_dict(CORE, 0.9, {(1, 0): 1.0, (0, 0): 0.1}, z_window=(-8, 8), w_degree=4)
    with pytest.raises(ConfigError, match="core annulus"):
        DistortedCylinder.from_transition(0.5, 2.0, 0.9, t, inverse_transition=t)


def test_wrong_inverse_rejected():
    t = BiSeries.from_dict(CORE, 0.9, {(1, 0): 1.0, (0, 1): 0.05}, z_window=(-8, 8), w_degree=4)
    with pytest.raises(ConfigError, match="inverse"):
        DistortedCylinder.from_transition(0.5, 2.0, 0.9, t, inverse_transition=t)


def test_inverse_found_by_fixed_point():
    t = BiSeries.from_dict(CORE, 0.9, {(1, 0): 1.0, (0, 1): 0.05, (2, 1): 0.01},
                           z_window=(-16, 16), w_degree=8)
    cyl = DistortedCylinder.from_transition(0.5, 2.0, 0.9, t)
    z1 = 1.1 * np.exp(0.4j)
    w = 0.3 - 0.2j
    assert abs(cyl.inverse_transition(cyl.z2(z1, w), w) - z1) < 1e-9


def test_radii_order_and_separation():
    with pytest.raises(ConfigError):
        DistortedCylinder.shear(0.5, 2.0, 0.9, 0.05, r_prime=1.5, R_prime=1.0)
    # a shear of 0.7 pushes |z2| past R on |z1| = R'
    with pytest.raises(ConfigError, match="separation"):
        DistortedCylinder.shear(0.5, 2.0, 0.9, 0.7, window=(-16, 16), w_degree=4)


def test_contains(shear):
    assert shear.contains(1.0, 0.1)
    assert not shear.contains(0.4, 0.0)
    assert not shear.contains(1.0, 0.95)


# --- extraction -------------------------------------------------------------------

def test_extract_power(shear):
    pairs, Q = extract_dwp_coefficients(bi({(0, 2): 1}, shear), shear, 2)
    assert all(m.max_abs_coefficient() == 0 and p.max_abs_coefficient() == 0 for m, p in pairs)
    assert Q.max_abs_coefficient() == 0


def test_extract_already_split(shear):
    a, b = 0.3, -0.2 + 0.1j
    # b * z2 = b z1 + 0.05 b w in (z1, w)
    F = bi({(0, 2): 1, (-1, 0): a, (1, 0): b, (0, 1): 0.05 * b}, shear)
    pairs, Q = extract_dwp_coefficients(F, shear, 2)
    (m1, p1), (m2, p2) = pairs
    assert m2.as_dict(1e-15) == pytest.approx({-1: a})
    assert p2.as_dict(1e-15) == pytest.approx({1: b})
    assert m1.max_abs_coefficient() < 1e-15 and p1.max_abs_coefficient() < 1e-15
    assert Q.max_abs_coefficient() < 1e-15


def test_extract_ordinary_wp_identity(ident):
    pairs, Q = extract_dwp_coefficients(pullback(base_wp(), ident), ident, 2)
    assert pairs[1][1].as_dict(0) == {1: -0.25}
    assert pairs[1][0].max_abs_coefficient() == 0
    assert Q.max_abs_coefficient() == 0


def test_extract_not_normalized(shear):
    with pytest.raises(NumericalError, match="not normalized"):
        extract_dwp_coefficients(bi({(0, 2): 3}, shear), shear, 2)


def test_extract_is_exact_at_truncation_level(shear):
    F = pullback(base_wp({-1: 0.05}), shear, "z2")
    pairs, Q = extract_dwp_coefficients(F, shear, 2)
    from curvemoduli.distorted import _remainder_from_pairs

    rebuilt = _remainder_from_pairs(pairs, shear, shear.z_window, F.w_degree)
    rebuilt = rebuilt + (Q + 1.0).shift_w(2).with_window(shear.z_window, F.w_degree)
    assert rebuilt.distance(F) < 1e-13


# --- single steps ----------------------------------------------------------------

def test_step_fixed_point(shear):
    F = bi({(0, 2): 1, (-1, 0): 0.3}, shear)
    nxt, (r, q), _ = dwp_iteration_step(F, shear, 2)
    assert q == 0 and r > 0 and nxt.distance(F) < 1e-15


def test_step_removes_constant_factor(shear):
    q = 0.3
    F = bi({(0, 2): 1 + q}, shear)
    nxt, stats, _ = dwp_iteration_step(F, shear, 2)
    assert stats[1] == pytest.approx(q)
    assert nxt.distance(bi({(0, 2): 1}, shear)) < 1e-14


def test_printed_sign_variant_is_not_a_projection(shear):
    q = 0.3
    F = bi({(0, 2): 1 + q}, shear)
    nxt, _, _ = dwp_iteration_step(F, shear, 2, variant="one_minus")
    assert nxt.distance(bi({(0, 2): 1}, shear)) > 0.1
    # the leading coefficient drifts from 1 instead of converging
    with pytest.raises((ConvergenceError, NumericalError)):
        solve_dwp(F, shear, n=2, variant="one_minus", max_iter=20)


def test_step_contraction_violation(shear):
    with pytest.raises(ConvergenceError, match="contraction"):
        dwp_iteration_step(bi({(0, 2): 1, (0, 3): 1.2}, shear), shear, 2)


def test_contraction_constant_bounded(rich_solution):
    h = rich_solution.history
    consts = [h[k + 1][1] / ((h[k][0] + h[k][1]) * h[k][1]) for k in range(len(h) - 1) if h[k + 1][1] > 0]
    assert consts and max(consts) < 10.0


def test_geometric_decay(rich_solution):
    q = [s[1] for s in rich_solution.history]
    tail = [k for k in range(len(q)) if q[k] < 0.1]
    for k in tail[:-1]:
        assert q[k + 1] <= 0.5 * q[k]
    slope = np.polyfit(range(len(tail)), np.log10([q[k] for k in tail]), 1)[0]
    assert slope < -1


# --- solver ----------------------------------------------------------------------

def test_shear_solve_converges(shear_solution, rich_solution):
    for sol in (shear_solution, rich_solution):
        assert sol.iterations <= 8
        assert sol.history[-1][1] < 1e-10
    assert rich_solution.iterations > 2


def test_fixed_point_residual(shear, rich_solution):
    F = rich_solution.to_biseries(shear)
    _, Q = extract_dwp_coefficients(F, shear, 2)
    from curvemoduli.distorted import _torus_sup

    assert _torus_sup(Q, shear) < 1e-10


@pytest.mark.parametrize("which", ["base", "rich"])
def test_divisor_preservation(which, shear, shear_solution, rich_solution):
    P, sol = (base_wp(), shear_solution) if which == "base" else (rich_wp(), rich_solution)
    src = pullback(P, shear, "z1")
    worst = 0.0
    zs = circle(1.0, 32) * np.exp(0.1j)
    for z in zs:
        for w0 in polish_roots(src, z, roots_at(P, z)):
            worst = max(worst, abs(evaluate_dwp(sol, shear, z, w0)))
    assert worst < 1e-7


def test_uniqueness_of_distorted_form(shear, shear_solution):
    # same zero set, different defining function
    F = (pullback(base_wp(), shear, "z1") * bi({(0, 0): 1, (0, 1): 0.1}, shear)).with_window(WIN, 12)
    other = solve_dwp(F, shear, n=2, tol=1e-10)
    assert np.max(np.abs(other.vector(WIN) - shear_solution.vector(WIN))) < 1e-7


def test_identity_degeneration_exact(ident):
    P = base_wp({-2: 0.01, 3: 0.002j})
    sol = solve_dwp(P, ident)
    assert sol.iterations == 1
    for f, m, p in zip(P.coefficients, sol.minus_parts, sol.plus_parts):
        plus, minus = laurent_split(f)
        assert m.distance(minus) == 0 and p.distance(plus) == 0


def test_power_takes_no_iterations(shear):
    sol = solve_dwp(WeierstrassPolynomial.power(2, CORE), shear)
    assert sol.iterations == 0
    assert all(m.max_abs_coefficient() == 0 for m in sol.minus_parts)
    assert evaluate_dwp(sol, shear, 1.0, 0.5) == pytest.approx(0.25)


def test_smallness_bound(shear):
    with pytest.raises(NumericalError, match="smallness"):
        solve_dwp(base_wp(), shear, epsilon=0.1)


def test_max_iter_reports_history(shear):
    with pytest.raises(ConvergenceError) as info:
        solve_dwp(rich_wp(), shear, tol=1e-30, max_iter=3)
    assert len(info.value.history) == 3


def test_evaluate_matches_ordinary_under_identity(ident):
    P = base_wp({-1: 0.02})
    sol = solve_dwp(P, ident)
    z = circle(1.3, 16)
    w = 0.4 * np.exp(0.7j)
    assert np.max(np.abs(evaluate_dwp(sol, ident, z, w) - P(z, w))) < 1e-12


def test_evaluate_outside(shear, shear_solution):
    with pytest.raises(DomainError):
        evaluate_dwp(shear_solution, shear, 3.0, 0.1)


# --- types and I/O ---------------------------------------------------------------

def test_sign_constraints():
    with pytest.raises(ConfigError):
        DistortedWP([LaurentSeries.constant(CORE, 1.0)], [LaurentSeries.zeros(CORE)])
    with pytest.raises(ConfigError):
        DistortedWP([LaurentSeries.zeros(CORE)], [LaurentSeries.monomial(CORE, -1)])


def test_dwp_round_trip(tmp_path, shear_solution):
    again = parse_dwp(format_dwp(shear_solution))
    assert np.array_equal(again.vector(WIN), shear_solution.vector(WIN))
    write_dwp(tmp_path / "d.dwp", shear_solution)
    assert format_dwp(read_dwp(tmp_path / "d.dwp")) == format_dwp(shear_solution)
    with pytest.raises(FormatError):
        parse_dwp("DWP 2\n")
    with pytest.raises(FormatError):
        parse_dwp("WPOLY 1\n")
