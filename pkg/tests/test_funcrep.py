from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hardyatoms.errors import DomainError, UnsupportedTermError
from hardyatoms.funcrep import (
    Term,
    antiderivative,
    definite_integral,
    dilate,
    eval_terms,
    evaluate,
    from_json,
    from_pieces,
    linear_combine,
    polynomial,
    sign_change_points,
    step_function,
    to_json,
)

E = math.e

terms_st = st.lists(
    st.builds(
        Term,
        coeff=st.floats(-5, 5, allow_nan=False).filter(lambda c: abs(c) > 1e-3),
        power=st.integers(-2, 4),
        log_exp=st.integers(0, 1),
    ),
    min_size=1,
    max_size=4,
)


def one_on(lo, hi, c=1.0):
    return from_pieces([(lo, hi, [(c, 0)])])


# ---------------------------------------------------------------- types


def test_term_rejects_out_of_range():
    with pytest.raises(UnsupportedTermError):
        Term(1.0, -3)
    with pytest.raises(UnsupportedTermError):
        Term(1.0, 0, 3)
    with pytest.raises(DomainError):
        Term(math.inf, 0)


def test_pieces_must_be_disjoint():
    with pytest.raises(DomainError):
        from_pieces([(0, 1, [(1, 0)]), (0.5, 2, [(1, 0)])])


# ---------------------------------------------------------------- evaluate


def test_evaluate_constant_and_outside():
    f = one_on(0, 1)
    assert evaluate(f, 0.5) == 1.0
    assert evaluate(f, 2.0) == 0.0


def test_evaluate_log_piece_near_right_end():
    f = from_pieces([(1, E, [(1.0, -1, 1)])])
    assert evaluate(f, E - 1e-9) == pytest.approx(1 / E, rel=1e-8)
    # half-open pieces: the right end belongs to no piece
    assert evaluate(f, E) == 0.0
    assert evaluate(f, 1.0) == 0.0  # ln 1 = 0 at the left end


def test_evaluate_boundary_belongs_to_right_piece():
    f = step_function([0, 1, 2], [3.0, 5.0])
    assert evaluate(f, 1.0) == 5.0


def test_evaluate_rejects_nonpositive():
    with pytest.raises(DomainError):
        evaluate(one_on(0, 1), 0.0)
    with pytest.raises(DomainError):
        evaluate(one_on(0, 1), np.array([0.5, -1.0]))


def test_evaluate_vectorised_matches_scalar():
    f = from_pieces([(0.5, 1, [(2, 1), (-1, 0)]), (1, 3, [(1, -1, 1), (0.5, 2)])])
    xs = np.linspace(0.1, 3.5, 97)
    assert np.array_equal(evaluate(f, xs), np.array([evaluate(f, x) for x in xs]))


# ---------------------------------------------------------------- antiderivative


def test_antiderivative_examples():
    assert antiderivative([Term(1, 1)]) == (Term(0.5, 2),)
    assert antiderivative([Term(1, -1)]) == (Term(1, 0, 1),)
    assert set(antiderivative([Term(1, 0, 1)])) == {Term(1, 1, 1), Term(-1, 1)}


def test_antiderivative_rejects_cubed_log():
    with pytest.raises(UnsupportedTermError):
        antiderivative([Term(1, -1, 2)])


@settings(max_examples=60, deadline=None)
@given(terms=terms_st, seed=st.integers(0, 2**32 - 1))
def test_differentiate_back(terms, seed):
    x = np.random.default_rng(seed).uniform(0.1, 10, 64)
    prim = antiderivative(terms)
    h = 1e-6
    num = (eval_terms(prim, x + h) - eval_terms(prim, x - h)) / (2 * h)
    exact = eval_terms(terms, x)
    # relative to the summed term magnitudes, so cancellation to 0 is not penalised
    scale = sum(abs(t.coeff) * x**t.power * (1 + abs(np.log(x))) ** t.log_exp for t in terms)
    assert np.all(np.abs(num - exact) <= 1e-7 * scale)


# ---------------------------------------------------------------- definite integrals


def test_definite_integral_examples():
    assert definite_integral(one_on(0, 1), 0, 1) == 1.0
    assert definite_integral(polynomial([0, 1], 1, 2), 1, 2) == pytest.approx(1.5, rel=1e-15)
    assert definite_integral(from_pieces([(1, E, [(1, 0, 1)])]), 1, E) == pytest.approx(1.0, rel=1e-15)


def test_definite_integral_near_zero_uses_limits():
    f = from_pieces([(0, 1, [(1, 0, 1)])])  # int_0^1 ln x = -1
    assert definite_integral(f, 0, 1) == pytest.approx(-1.0, rel=1e-15)


def test_definite_integral_tail():
    f = from_pieces([(0, 1, [(1, 0)])], tail=2.0)
    assert definite_integral(f, 0, E**3) == pytest.approx(1 + 6.0, rel=1e-14)


def _random_pw(rng):
    cuts = np.sort(rng.uniform(0.05, 4, 4))
    return from_pieces(
        [
            (cuts[i], cuts[i + 1], [(rng.normal(), k, rng.integers(0, 2)) for k in range(-1, 3)])
            for i in range(3)
        ]
    )


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), u=st.lists(st.floats(0, 5), min_size=3, max_size=3))
def test_integral_additivity(seed, u):
    f = _random_pw(np.random.default_rng(seed))
    a, b, c = sorted(u)
    whole = definite_integral(f, a, c)
    parts = definite_integral(f, a, b) + definite_integral(f, b, c)
    mag = definite_integral(linear_combine([(1.0, f)]), 0, 5)
    assert abs(whole - parts) <= 1e-12 * max(abs(whole), abs(mag), 1.0)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), lam=st.floats(-3, 3), mu=st.floats(-3, 3))
def test_integral_linearity(seed, lam, mu):
    rng = np.random.default_rng(seed)
    f, g = _random_pw(rng), _random_pw(rng)
    lhs = definite_integral(linear_combine([(lam, f), (mu, g)]), 0, 5)
    rhs = lam * definite_integral(f, 0, 5) + mu * definite_integral(g, 0, 5)
    scale = abs(lam) * abs(definite_integral(f, 0, 5)) + abs(mu) * abs(definite_integral(g, 0, 5))
    assert abs(lhs - rhs) <= 1e-12 * max(scale, 1.0)


# ---------------------------------------------------------------- linear_combine


def test_linear_combine_scaling_and_cancellation():
    f = one_on(0, 1)
    assert evaluate(linear_combine([(2, f)]), 0.3) == 2.0
    assert linear_combine([(1, f), (-1, f)]).is_zero


def test_linear_combine_overlap():
    g = linear_combine([(1, one_on(0, 1)), (1, one_on(0.5, 2))])
    assert g.breakpoints() == [0.0, 0.5, 1.0, 2.0]
    xs = np.array([0.25, 0.75, 1.5, 2.5])
    assert np.array_equal(evaluate(g, xs), [1.0, 2.0, 1.0, 0.0])


def test_linear_combine_keeps_tail():
    f = from_pieces([(0, 1, [(1, 0)])], tail=1.0)
    g = linear_combine([(3, f), (1, one_on(0, 4))])
    assert g.tail == 3.0
    assert evaluate(g, 2.0) == pytest.approx(1.5 + 1.0)
    assert evaluate(g, 8.0) == pytest.approx(3 / 8)


# ---------------------------------------------------------------- sign changes


def test_sign_change_examples():
    assert sign_change_points(polynomial([-1.5, 1], 1, 2), 1e-12) == [pytest.approx(1.5, abs=1e-12)]
    assert sign_change_points(one_on(0, 1), 1e-12) == []
    roots = sign_change_points(polynomial([1, -6, 6], 0, 1), 1e-12)
    expect = [(3 - math.sqrt(3)) / 6, (3 + math.sqrt(3)) / 6]
    assert roots == pytest.approx(expect, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_sign_changes_bracket(seed):
    rng = np.random.default_rng(seed)
    tol = 1e-10
    f = polynomial(list(rng.normal(size=5)), 0.1, 3.0)
    for r in sign_change_points(f, tol):
        lo, hi = r - tol, r + tol
        if 0.1 <= lo and hi < 3.0:
            assert evaluate(f, lo) * evaluate(f, hi) <= 0


def test_sign_change_rejects_bad_tol():
    with pytest.raises(DomainError):
        sign_change_points(one_on(0, 1), 0.0)


# ---------------------------------------------------------------- dilation and JSON


def test_dilate_pointwise():
    f = from_pieces([(1, 3, [(2, 1, 1), (-1, 0)])])
    g = dilate(f, 2.5, amplitude=3.0)
    xs = np.linspace(0.41, 1.19, 17)
    assert np.allclose(evaluate(g, xs), 3.0 * evaluate(f, 2.5 * xs), rtol=1e-13, atol=1e-14)


def test_json_round_trip_is_exact():
    f = from_pieces([(0.1, 0.7, [(math.pi, 2), (1 / 3, -1, 1)]), (0.7, 1.3, [(-2.0**-40, 0, 2)])], tail=0.125)
    assert from_json(to_json(f)) == f
