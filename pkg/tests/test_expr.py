"""Expression language: multi-indices, evaluation, differentiation,
serialization, guards, and the smoothing helpers."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from whitney.errors import (
    BadRadii,
    CertificationFailure,
    GuardViolation,
    NotCm,
    ProblemFormatError,
)
from whitney.expr import (
    DefMap,
    MultiIndex,
    PiecewisePoly,
    Region,
    add,
    bump,
    certify_guards,
    compose,
    const,
    coord,
    exp,
    expr_from_dict,
    glue,
    guarded_nodes,
    identity_map,
    is_exact,
    is_polynomial,
    jet_dimension,
    mul,
    norm_squared,
    number_from_json,
    number_to_json,
    poly_from_coeffs,
    positive_minorant,
    power,
    recip,
    smooth_approximate,
    smoothstep_rising,
    sqrt,
    substitute,
)

X, Y = coord(0), coord(1)


# ---------------------------------------------------------------------------
# multi-indices
# ---------------------------------------------------------------------------


def test_grlex_order_m2_prefix():
    want = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0)]
    got = [MultiIndex.unrank(2, r).entries for r in range(len(want))]
    assert got == want


def test_rank_unrank_small_exhaustive():
    for m in (1, 2, 3):
        for r in range(80):
            assert MultiIndex.unrank(m, r).rank() == r


@given(st.integers(1, 4), st.lists(st.integers(0, 5), min_size=1, max_size=4))
def test_rank_unrank_roundtrip(m, entries):
    a = MultiIndex(tuple(entries[:m]) + (0,) * max(0, m - len(entries)))
    assert MultiIndex.unrank(a.m, a.rank()) == a


def test_order_and_factorial():
    a = MultiIndex((2, 0, 3))
    assert a.order == 5
    assert a.m == 3
    assert a.factorial() == 2 * 6


def test_all_up_to_counts_match_jet_dimension():
    # jet_dimension counts 1 <= |alpha| <= k, so the zero index is extra
    for m in (1, 2, 3):
        for k in (1, 2, 3, 4):
            assert len(MultiIndex.all_up_to(m, k)) == jet_dimension(m, k)
            with_zero = MultiIndex.all_up_to(m, k, include_zero=True)
            assert len(with_zero) == jet_dimension(m, k) + 1
            ranks = [a.rank() for a in with_zero]
            assert ranks == sorted(ranks)


def test_monomial_value():
    a = MultiIndex((2, 1))
    assert a.monomial_value((Fraction(1, 2), Fraction(3))) == Fraction(3, 4)


def test_bad_multi_index_rejected():
    with pytest.raises(ValueError):
        MultiIndex((1, -1))
    with pytest.raises(ValueError):
        MultiIndex(())


# ---------------------------------------------------------------------------
# numbers in JSON
# ---------------------------------------------------------------------------


def test_number_json_roundtrip():
    for v in (3, -7, Fraction(2, 3), Fraction(-9, 4), 0.125):
        assert number_from_json(number_to_json(v)) == v
    assert number_to_json(Fraction(2, 3)) == "2/3"
    # whole fractions flatten to plain integers
    assert number_to_json(Fraction(4, 2)) == 2


# ---------------------------------------------------------------------------
# regions
# ---------------------------------------------------------------------------


def test_region_contains_and_margin():
    r = Region((-1.0, 0.0), (1.0, 2.0))
    assert r.contains((0.0, 1.0))
    assert not r.contains((1.1, 1.0))
    assert r.contains((1.1, 1.0), margin=0.2)


def test_region_grid_and_sample():
    r = Region((0.0,), (1.0,))
    assert r.grid(3) == [(0.0,), (0.5,), (1.0,)]
    pts = r.sample(np.random.default_rng(0), 25)
    assert len(pts) == 25 and all(r.contains(p) for p in pts)


def test_region_stress_doubles_open_axes_only():
    r = Region((0.0, 0.0), (1.0, 1.0), unbounded_hi=(True, False))
    s = r.stress()
    assert s.hi == (2.0, 1.0) and s.lo == (0.0, 0.0)


def test_region_dict_roundtrip():
    r = Region((Fraction(-1, 2),), (2.0,), unbounded_hi=(True,))
    assert Region.from_dict(r.to_dict()) == r


def test_region_rejects_empty_box():
    with pytest.raises(ValueError):
        Region((0.0,), (0.0,))


# ---------------------------------------------------------------------------
# evaluation and differentiation
# ---------------------------------------------------------------------------


def test_operator_sugar_matches_constructors():
    e = (X + 1) * (X - 1)
    assert e.evaluate((3,)) == 8
    assert (-X).evaluate((2,)) == -2
    assert (X**3).evaluate((2,)) == 8
    assert (2 - X).evaluate((5,)) == -3


def test_rational_evaluation_stays_exact():
    e = add(power(X, 2), mul(const(Fraction(1, 3)), Y))
    v = e.evaluate((Fraction(1, 2), Fraction(3, 5)))
    assert isinstance(v, Fraction) and v == Fraction(1, 4) + Fraction(1, 5)


def test_diff_closed_forms():
    g = exp(mul(const(-1), power(X, 2)))
    x = (0.7,)
    assert g.diff(0).evaluate(x) == pytest.approx(-2 * 0.7 * math.exp(-0.49))

    r = recip(add(const(1), power(X, 2)))
    assert r.diff(0).evaluate((0.5,)) == pytest.approx(-1.0 / 1.25**2)

    s = sqrt(add(power(X, 2), const(4)))
    assert s.diff(0).evaluate((1.0,)) == pytest.approx(1.0 / math.sqrt(5))


def test_partial_accepts_plain_tuples():
    e = mul(power(X, 2), Y)  # d2/dxdy x^2 y = 2x, d2/dx2 = 2y
    assert e.partial((1, 1), (3, 5)) == 6
    assert e.partial(MultiIndex((2, 0)), (3, 5)) == 10


def test_recip_rational_path():
    e = recip(add(power(X, 2), const(1)))
    assert e.evaluate((Fraction(1, 2),)) == Fraction(4, 5)


def test_poly_from_coeffs_horner():
    p = poly_from_coeffs((Fraction(1), Fraction(0), Fraction(-2)))  # 1 - 2 x^2
    assert p.evaluate((Fraction(3),)) == 1 - 2 * 9
    assert is_polynomial(p) and is_exact(p)


def test_norm_squared_with_center():
    e = norm_squared(2, center=(1, -1))
    assert e.evaluate((2, 1)) == 5


def test_substitute_and_compose_agree():
    outer = DefMap(1, 1, (power(X, 2),))
    inner = DefMap(2, 1, (add(X, Y),))
    comp = compose(outer, inner)
    assert comp.domain_dim == 2 and comp.codomain_dim == 1
    assert comp.evaluate((2, 3)) == (25,)
    direct = substitute(power(X, 2), (add(X, Y),))
    assert direct.evaluate((2, 3)) == 25


# ---------------------------------------------------------------------------
# bump and glue
# ---------------------------------------------------------------------------


def test_bump_plateau_values_are_bitwise():
    b = bump((0.0, 0.0), 1, 2)
    assert b.evaluate((0.5, 0.5)) == 1.0
    assert b.evaluate((0.0, 0.0)) == 1.0
    assert b.evaluate((2.5, 0.0)) == 0.0
    mid = b.evaluate((1.5, 0.0))
    assert 0.0 < mid < 1.0


def test_bump_plateau_derivatives_vanish_exactly():
    b = bump((0.0,), 1, 2)
    for a in ((1,), (2,), (3,)):
        assert b.partial(a, (0.25,)) == 0.0
        assert b.partial(a, (3.0,)) == 0.0


def test_bump_bad_radii():
    with pytest.raises(BadRadii):
        bump((0.0,), 2, 1)
    with pytest.raises(BadRadii):
        bump((0.0,), 0, 1)


def test_glue_vanishes_left_of_zero():
    g = glue(X)
    assert g.evaluate((-1.0,)) == 0.0
    assert g.evaluate((0.0,)) == 0.0
    assert g.evaluate((1.0,)) == pytest.approx(math.exp(-1))


def test_glue_derivative_matches_difference_quotient():
    g = glue(X, (Fraction(1), Fraction(2)))  # (1 + 2/t) e^{-1/t}
    d = g.diff(0)
    t, h = 0.8, 1e-6
    fd = (g.evaluate((t + h,)) - g.evaluate((t - h,))) / (2 * h)
    assert d.evaluate((t,)) == pytest.approx(fd, rel=1e-7)
    # the one-sided kernel stays identically zero on the closed left axis
    assert d.evaluate((-0.3,)) == 0.0


def test_smoothstep_endpoints():
    s = smoothstep_rising(X, Fraction(0), Fraction(1))
    assert s.evaluate((-0.2,)) == 0.0
    assert s.evaluate((0.0,)) == 0.0
    assert s.evaluate((1.0,)) == 1.0
    assert s.evaluate((1.3,)) == 1.0
    assert 0.0 < s.evaluate((0.5,)) < 1.0


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def test_expr_dict_roundtrip_every_op():
    samples = [
        const(Fraction(-2, 3)),
        coord(1),
        add(X, const(1)),
        mul(X, Y),
        power(X, 4),
        exp(X),
        sqrt(add(power(X, 2), const(1)), Region((-1.0,), (1.0,))),
        recip(add(power(X, 2), const(2))),
        glue(X, (Fraction(1), Fraction(-1, 2))),
        bump((0, 1), 1, 2),
    ]
    for e in samples:
        assert expr_from_dict(e.to_dict()) == e


def test_expr_from_dict_rejects_unknown_op():
    with pytest.raises(ProblemFormatError):
        expr_from_dict({"op": "sin", "arg": {"op": "coord", "index": 0}})
    with pytest.raises(ProblemFormatError):
        expr_from_dict({"value": 1})


def test_expr_from_dict_reports_malformed_node():
    with pytest.raises(ProblemFormatError, match="malformed 'pow'"):
        expr_from_dict({"op": "pow", "base": {"op": "coord", "index": 0}})


def test_defmap_dict_roundtrip():
    f = DefMap(2, 2, (add(X, Y), mul(X, Y)), Region((-1.0, -1.0), (1.0, 1.0)))
    assert DefMap.from_dict(f.to_dict()) == f


# ---------------------------------------------------------------------------
# guards
# ---------------------------------------------------------------------------


def test_sqrt_and_recip_guards_raise():
    with pytest.raises(GuardViolation):
        sqrt(X).evaluate((-1.0,))
    with pytest.raises(GuardViolation):
        recip(X).evaluate((0,))


def test_certify_guards_reports_worst_value():
    e = recip(add(power(X, 2), const(1)))
    cert = certify_guards(e, Region((-2.0,), (2.0,)))
    assert cert.node_count == 1
    assert cert.worst_value == pytest.approx(1.0)
    assert len(guarded_nodes(e)) == 1


def test_certify_guards_failure():
    with pytest.raises(CertificationFailure):
        certify_guards(sqrt(X), Region((-1.0,), (1.0,)))


def test_unguarded_expression_certifies_trivially():
    cert = certify_guards(add(X, Y), Region((-1.0, -1.0), (1.0, 1.0)))
    assert cert.node_count == 0 and cert.points_checked == 0


# ---------------------------------------------------------------------------
# definable maps
# ---------------------------------------------------------------------------


def test_defmap_jacobian_by_hand():
    f = DefMap(2, 2, (mul(X, Y), add(power(X, 2), Y)))
    jac = f.jacobian((Fraction(2), Fraction(3)))
    assert jac == [[3, 2], [4, 1]]


def test_defmap_partial_returns_component_tuple():
    f = DefMap(1, 2, (power(X, 3), X))
    assert f.partial((2,), (Fraction(1, 2),)) == (3, 0)


def test_defmap_validates_shapes():
    with pytest.raises(ValueError):
        DefMap(1, 2, (X,))
    with pytest.raises(ProblemFormatError):
        DefMap(2, 1, (add(X, Y),)).evaluate((1,))


def test_defmap_is_exact():
    assert DefMap(1, 1, (power(X, 2),)).is_exact()
    assert not DefMap(1, 1, (mul(const(0.5), X),)).is_exact()
    assert not DefMap(1, 1, (exp(X),)).is_exact()


def test_identity_map():
    f = identity_map(3)
    assert f.evaluate((1, 2, 3)) == (1, 2, 3)


# ---------------------------------------------------------------------------
# positive minorants
# ---------------------------------------------------------------------------


def test_positive_minorant_sits_under_eps():
    reg = Region((-1.0, -1.0), (1.0, 1.0))
    mino = positive_minorant(0.1, 2, reg)
    phi = mino.phi
    assert mino.certificate.worst_relative_margin > 0
    for x in reg.grid(9):
        assert 0.0 < phi.evaluate(x) < 0.1
        for a in MultiIndex.all_up_to(2, 2):
            assert abs(phi.partial(a, x)) < 0.1


def test_positive_minorant_tracks_decaying_eps():
    # eps shrinking toward the open end forces a decaying family
    reg = Region((1.0,), (4.0,), unbounded_hi=(True,))
    eps = recip(add(power(X, 2), const(1)))
    mino = positive_minorant(eps, 1, reg)
    for x in reg.stress().grid(17):
        assert 0.0 < mino.phi.evaluate(x) < eps.evaluate(x)


# ---------------------------------------------------------------------------
# piecewise smoothing
# ---------------------------------------------------------------------------


def test_piecewise_poly_basics():
    f = PiecewisePoly((0,), (const(0), power(X, 3)))
    assert f.value(-1.0) == 0
    assert f.value(2.0) == 8
    assert f.one_sided(0, 2) == (0, 0)
    assert f.one_sided(0, 3) == (0, 6)


def test_piecewise_poly_validation():
    with pytest.raises(ValueError):
        PiecewisePoly((0,), (const(0),))
    with pytest.raises(ValueError):
        PiecewisePoly((1, 0), (const(0), X, const(1)))
    with pytest.raises(ValueError):
        PiecewisePoly((0,), (exp(X), X))


def test_smooth_approximate_c2_join():
    f = PiecewisePoly((0,), (const(0), power(X, 3)))
    out = smooth_approximate(f, 0.05, 2, Region((-1.0,), (1.0,)))
    assert out.window is not None and out.worst_margin > 0
    g = out.g
    for x in (-0.9, -0.3, 0.2, 0.8):
        assert abs(g.evaluate((x,))[0] - f.value(x)) < 0.05
        for order in (1, 2):
            got = g.components[0].partial((order,), (x,))
            want = f.value(x, order)
            assert abs(got - want) < 0.05


def test_smooth_approximate_single_piece_is_exact():
    f = PiecewisePoly((), (power(X, 2),))
    out = smooth_approximate(f, 0.01, 3, Region((-1.0,), (1.0,)))
    assert out.window is None
    assert out.g.components[0] == power(X, 2)


def test_smooth_approximate_rejects_kink():
    relu = PiecewisePoly((0,), (const(0), X))
    with pytest.raises(NotCm):
        smooth_approximate(relu, 0.1, 1, Region((-1.0,), (1.0,)))
