import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

import oracles
from smplab.errors import NoSignChange, NonIntegrableSingularity, NotFlat, SignStructureViolation
from smplab.forcing import Constant, ForcingPiece, PiecewiseForcing, Polynomial
from smplab.presets import (
    cubic_dead_core,
    cubic_dead_core_solution,
    dead_band,
    example1,
    flat_unit,
    power_law,
    reversed_example1,
)
from smplab.solver1d import (
    Functional,
    SolutionClass,
    boundary_derivative,
    check_balance,
    check_conditions,
    check_decay,
    check_flatness,
    classify,
    extend_by_zero,
    find_critical_parameter,
    green_function,
    infer_r0,
    solve_exact,
)
from smplab.verdict import Verdict

constants = st.lists(st.floats(-3, 3, allow_nan=False).filter(lambda v: abs(v) > 1e-3), min_size=1, max_size=6)


@given(st.floats(-0.99, 0.99), st.floats(-0.99, 0.99))
def test_green_function_symmetric_and_nonnegative(x, y):
    assert green_function(x, y) == pytest.approx(green_function(y, x), abs=1e-15)
    assert green_function(x, y) >= 0


def test_constant_forcing_parabola():
    sol = solve_exact(PiecewiseForcing((ForcingPiece(-1.0, 1.0, Constant(1.0)),)))
    x = np.linspace(-1, 1, 101)
    assert np.max(np.abs(sol(x) - (1 - x**2) / 2)) < 1e-14
    assert np.max(np.abs(sol.derivative_eval(x) + x)) < 1e-14


@given(constants, st.floats(0.5, 3.0))
def test_piecewise_constants_match_oracle(values, L):
    breaks = np.linspace(-L, L, len(values) + 1)
    sol = solve_exact(PiecewiseForcing.from_constants(breaks, values))
    o = oracles.PiecewiseQuadratic(breaks, values)
    x = np.linspace(-L, L, 203)
    scale = max(1.0, float(np.max(np.abs(o(x)))))
    assert np.max(np.abs(sol(x) - o(x))) < 1e-12 * scale
    assert sol.derivative_eval(L) == pytest.approx(o.boundary_slope(), abs=1e-12 * scale)


@pytest.mark.parametrize("b", [0.0, 0.25, 0.5, 1.0])
def test_cubic_dead_core_closed_form(b):
    sol = solve_exact(cubic_dead_core(b))
    x = np.linspace(-1 - b, 1 + b, 301)
    ref = np.array([cubic_dead_core_solution(xi, b) for xi in x])
    assert np.max(np.abs(sol(x) - ref)) < 1e-13


@pytest.mark.parametrize(
    "f, expected",
    [
        (example1(1.0), SolutionClass.STRICTLY_POSITIVE),
        (example1(1.5), SolutionClass.STRICTLY_POSITIVE),
        (example1(2.0), SolutionClass.POSITIVE_FLAT),
        (example1(3.0), SolutionClass.SIGN_CHANGING),
        (dead_band(0.3), SolutionClass.DEAD_CORE),
        (cubic_dead_core(0.25), SolutionClass.DEAD_CORE),
    ],
)
def test_classification(f, expected):
    assert classify(f).verdict is expected


def test_isolated_interior_zero_is_a_touch_point():
    # at the critical parameter u vanishes only at 0, a set of measure zero
    c = classify(reversed_example1(2.0 + math.sqrt(2.0)))
    assert c.verdict is SolutionClass.POSITIVE_FLAT
    assert c.touch_points == pytest.approx((0.0,), abs=1e-9)


def test_dead_band_core_covers_zero_region():
    c = classify(dead_band(0.3))
    lo, hi = c.regions[0]
    assert lo == pytest.approx(-0.3, abs=1e-6) and hi == pytest.approx(0.3, abs=1e-6)


@pytest.mark.parametrize("a", [1.2, 1.8, 2.0, 2.2, 2.6])
def test_boundary_derivative_is_minus_total(a):
    # u'(a) = int f- - int f+ = 2(a - 1) / 2 - 1 = a - 2 on the radial profile
    assert boundary_derivative(example1(a)) == pytest.approx(a - 2.0, abs=1e-14)


@pytest.mark.parametrize(
    "a, balance, decay",
    [(1.5, Verdict.HOLDS, Verdict.HOLDS), (2.0, Verdict.HOLDS, Verdict.HOLDS), (2.2, Verdict.HOLDS, Verdict.FAILS),
     (1 + math.sqrt(2) + 0.01, Verdict.FAILS, Verdict.FAILS)],
)
def test_condition_verdicts_example1(a, balance, decay):
    # balance on (1, a): (a - 1) > (a - 1)^2 / 2 fails past a = 3; decay fails past a = 2
    rep = check_conditions(example1(a))
    assert rep.r0 == pytest.approx(1.0)
    assert rep.decay is decay
    if a < 3:
        assert rep.balance is Verdict.HOLDS
    else:
        assert rep.balance is balance


def test_balance_fails_past_three():
    assert check_balance(example1(3.2)) is Verdict.FAILS


def test_flatness_only_at_two():
    assert check_flatness(example1(2.0)) is Verdict.HOLDS
    assert check_flatness(example1(1.7)) is Verdict.FAILS


@pytest.mark.parametrize("beta, C, r0, expected", [(0.5, 0.1, 0.5, Verdict.HOLDS), (1.0, 0.001, 0.5, Verdict.FAILS),
                                                   (1.5, 0.01, 0.9, Verdict.FAILS)])
def test_decay_with_power_tails(beta, C, r0, expected):
    assert check_decay(power_law(R=1.0, r0=r0, F=1.0, C=C, beta=beta)) is expected


def test_sign_structure_enforced():
    with pytest.raises(SignStructureViolation):
        infer_r0(cubic_dead_core(0.25))
    with pytest.raises(SignStructureViolation):
        check_balance(example1(2.0), r0=0.5)


def test_non_integrable_boundary_derivative():
    with pytest.raises(NonIntegrableSingularity):
        boundary_derivative(power_law(beta=1.5))


@given(constants, st.floats(0.5, 3.0))
def test_conditions_agree_with_oracle_on_symmetric_profiles(values, R):
    # sort into positive-then-negative so the sign structure holds
    vals = sorted(values, reverse=True)
    assume(vals[0] > 0)
    breaks = np.linspace(0.0, R, len(vals) + 1)
    f = PiecewiseForcing.symmetric([ForcingPiece(a, b, Constant(v)) for a, b, v in zip(breaks[:-1], breaks[1:], vals)])
    o = oracles.PiecewiseQuadratic(np.concatenate([-breaks[::-1], breaks[1:]]), vals[::-1] + vals)
    x = np.linspace(-R, R, 257)
    scale = float(np.max(np.abs(o(x))))
    true_min = o.interior_min()
    rep = check_conditions(f)
    assume(Verdict.MARGINAL not in (rep.balance, rep.decay) and abs(true_min) > 1e-9 * scale)
    assert (rep.balance is Verdict.HOLDS and rep.decay is Verdict.HOLDS) == (true_min > 0)


def test_critical_parameter_of_reversed_family():
    a = find_critical_parameter(reversed_example1, Functional.u_at(0.0), 0.0, (3.0, 4.0), xtol=1e-12)
    assert a == pytest.approx(oracles.reversed_critical_value(), abs=1e-10)


def test_critical_parameter_needs_sign_change():
    with pytest.raises(NoSignChange):
        find_critical_parameter(example1, Functional.boundary_slope(), 0.0, (1.1, 1.9))


def test_boundary_slope_functional_side():
    with pytest.raises(ValueError):
        Functional.boundary_slope("up")
    a = find_critical_parameter(example1, Functional.boundary_slope("right"), 0.0, (1.5, 2.5), xtol=1e-12)
    assert a == pytest.approx(2.0, abs=1e-10)


def test_zero_extension_of_flat_solution():
    big, ext = extend_by_zero(flat_unit(), solve_exact(flat_unit()), 1.5)
    assert big.domain == (-1.5, 1.5)
    direct = solve_exact(big)
    x = np.linspace(-1.5, 1.5, 61)
    assert np.max(np.abs(direct(x) - ext(x))) < 1e-12


def test_zero_extension_requires_flatness():
    with pytest.raises(NotFlat):
        extend_by_zero(example1(1.5), solve_exact(example1(1.5)), 2.0)


def test_solution_csv_columns():
    text = solve_exact(example1(2.0), grid_n=40).to_csv()
    rows = text.splitlines()
    assert rows[0] == "x,u,du" and len(rows) == 42


def test_polynomial_forcing_exact():
    # -u'' = 6x on (0, 1): u = x - x^3
    sol = solve_exact(PiecewiseForcing((ForcingPiece(0.0, 1.0, Polynomial((0.0, 6.0))),)))
    x = np.linspace(0, 1, 51)
    assert np.max(np.abs(sol(x) - (x - x**3))) < 1e-14
