"""Whitney (a)-regularity verdicts along probe curves."""

import math
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest

from whitney.errors import NotARefinement, NotOnStratum, ProbeInvalid
from whitney.expr import DefMap, Expr, add, const, coord, mul, substitute
from whitney.fixtures import (
    circle_quadrant_refinement,
    circle_stratification,
    cone_bent_probe,
    cone_ray_probe,
    cone_stratification,
    flat_probe,
    flat_stratification,
    parabola,
    tangent_line,
    umbrella_probe,
    umbrella_stratification,
    vertical_crosser,
)
from whitney.regularity import (
    ProbeCurve,
    probe_from_direction,
    refinement_inclusion_check,
    validate_probe,
    whitney_a_pair,
    whitney_a_stratification,
)
from whitney.strata import ImplicitPatch, Stratification, Stratum

# an exact orthogonal involution with entries in (1/7)Z
_Q7 = (
    (Fraction(2, 7), Fraction(3, 7), Fraction(6, 7)),
    (Fraction(3, 7), Fraction(-6, 7), Fraction(2, 7)),
    (Fraction(6, 7), Fraction(2, 7), Fraction(-3, 7)),
)


def _q7_subs() -> tuple[Expr, ...]:
    return tuple(
        add(*[mul(const(q), coord(j)) for j, q in enumerate(row)]) for row in _Q7
    )


def _rotate_point(p: tuple[float, ...]) -> tuple[float, ...]:
    return tuple(float(sum(float(q) * v for q, v in zip(row, p))) for row in _Q7)


def _rotate_stratification(strat: Stratification) -> Stratification:
    # Q is symmetric and orthogonal, so membership in QS is eq(Q w) = 0
    subs = _q7_subs()
    out = []
    for s in strat.strata:
        geo = s.geometry
        out.append(
            Stratum(
                s.id,
                ImplicitPatch(
                    3,
                    tuple(substitute(e, subs) for e in geo.equations),
                    tuple(substitute(e, subs) for e in geo.inequalities),
                ),
                s.dim,
                samples=tuple(_rotate_point(p) for p in s.samples),
                sample_region=None,
            )
        )
    return Stratification(3, tuple(out), strat.adjacency)


def _rotate_probe(p: ProbeCurve) -> ProbeCurve:
    comps = tuple(
        add(*[mul(const(q), p.curve.components[j]) for j, q in enumerate(row)])
        for row in _Q7
    )
    curve = DefMap(1, 3, comps, p.curve.region)
    return replace(p, curve=curve, landing=_rotate_point(p.landing))


# ---------------------------------------------------------------------------
# probes
# ---------------------------------------------------------------------------


def test_validate_probe_on_the_cone():
    surface = cone_stratification().stratum("surface")
    pts = validate_probe(cone_ray_probe(), surface)
    assert len(pts) == 20
    dists = [math.hypot(*p) for p in pts]
    assert dists == sorted(dists, reverse=True)


def test_validate_probe_rejections():
    surface = cone_stratification().stratum("surface")
    short = replace(cone_ray_probe(), j_start=3, j_end=6)
    with pytest.raises(ProbeInvalid, match="sample points"):
        validate_probe(short, surface)

    off = replace(cone_ray_probe(), curve=DefMap(1, 3, (coord(0), coord(0), coord(0))))
    with pytest.raises(ProbeInvalid, match="off stratum"):
        validate_probe(off, surface)

    axis = cone_stratification().stratum("axis")
    away = ProbeCurve(
        DefMap(1, 3, (coord(0), const(0), const(0))), landing=(1.0, 0.0, 0.0)
    )
    with pytest.raises(ProbeInvalid, match="increases"):
        validate_probe(away, axis)


def test_probe_from_direction_projects_onto_the_stratum():
    circ = circle_stratification().stratum("circle")
    probe = probe_from_direction(circ, (1.0, 0.0), (0.0, 1.0))
    assert probe is not None
    pts = probe.sample_points()
    assert len(pts) >= 6
    for x, y in pts:
        assert math.hypot(x, y) == pytest.approx(1.0, abs=1e-6)
    assert probe_from_direction(circ, (1.0, 0.0), (0.0, 0.0)) is None


# ---------------------------------------------------------------------------
# pair verdicts
# ---------------------------------------------------------------------------


def test_flat_pair_is_regular_with_zero_deviation():
    strat = flat_stratification()
    v = whitney_a_pair(
        strat.stratum("plane"), strat.stratum("origin"), (0.0, 0.0, 0.0), [flat_probe()]
    )
    assert v.status == "Regular"
    # the small stratum is a point: nothing can stick out of the limit
    assert v.witness.deviation == 0.0
    assert v.witness.converged


def test_cone_pair_faults_at_the_origin():
    strat = cone_stratification()
    v = whitney_a_pair(
        strat.stratum("surface"),
        strat.stratum("axis"),
        (0.0, 0.0, 0.0),
        [cone_ray_probe(), cone_bent_probe()],
    )
    assert v.status == "Fault"
    # deviation of the limit plane from containing the axis direction: the
    # plane along the diagonal ray misses e1 by 1/sqrt(10)
    assert v.witness.deviation == pytest.approx(1.0 / math.sqrt(10.0), rel=1e-4)
    assert len(v.probes) == 2
    assert all(w.converged for w in v.probes)


def test_cone_fault_away_from_origin_is_absent():
    strat = cone_stratification()
    # at (1, 0, 0) the probes land elsewhere; reuse the projected machinery
    surface = strat.stratum("surface")
    probe = probe_from_direction(surface, (1.0, 0.0, 0.0), (0.0, 1.0, 0.5))
    assert probe is not None
    v = whitney_a_pair(surface, strat.stratum("axis"), (1.0, 0.0, 0.0), [probe])
    assert v.status == "Regular"


def test_thresholds_split_three_ways():
    strat = cone_stratification()
    v = whitney_a_pair(
        strat.stratum("surface"),
        strat.stratum("axis"),
        (0.0, 0.0, 0.0),
        [cone_ray_probe()],
        fault_threshold=0.5,
    )
    # converged deviation lands between the thresholds: neither verdict
    assert v.status == "Inconclusive"
    assert v.witness is None

    with pytest.raises(NotOnStratum):
        whitney_a_pair(
            strat.stratum("surface"), strat.stratum("axis"), (0.0, 1.0, 0.0),
            [cone_ray_probe()],
        )
    with pytest.raises(ProbeInvalid):
        whitney_a_pair(
            strat.stratum("surface"), strat.stratum("axis"), (0.0, 0.0, 0.0), []
        )


def test_cone_fault_is_rotation_invariant():
    base = cone_stratification()
    v0 = whitney_a_pair(
        base.stratum("surface"), base.stratum("axis"), (0.0, 0.0, 0.0),
        [cone_ray_probe(), cone_bent_probe()],
    )
    rot = _rotate_stratification(base)
    v1 = whitney_a_pair(
        rot.stratum("surface"), rot.stratum("axis"), (0.0, 0.0, 0.0),
        [_rotate_probe(cone_ray_probe()), _rotate_probe(cone_bent_probe())],
    )
    assert v1.status == "Fault"
    assert v1.witness.deviation == pytest.approx(v0.witness.deviation, abs=1e-9)


# ---------------------------------------------------------------------------
# stratification reports
# ---------------------------------------------------------------------------


def test_stratification_report_cone_overall_fault():
    strat = cone_stratification()
    pair = ("surface", "axis")
    report = whitney_a_stratification(
        strat,
        np.random.default_rng(7),
        probe_budget=2,
        base_points_per_pair=2,
        pinned={pair: [(0.0, 0.0, 0.0)]},
        probes={pair: [cone_ray_probe(), cone_bent_probe()]},
    )
    assert report.overall == "Fault"
    entry = next(e for e in report.pairs if e.pair == pair)
    assert entry.status() == "Fault"
    at_origin = [v for v in entry.verdicts if v.point == (0.0, 0.0, 0.0)]
    assert at_origin and at_origin[0].status == "Fault"


def test_stratification_report_umbrella_regular():
    strat = umbrella_stratification()
    pair = ("canopy", "handle")
    report = whitney_a_stratification(
        strat,
        np.random.default_rng(12),
        probe_budget=2,
        base_points_per_pair=2,
        pinned={pair: [(0.0, 0.0, 1.0)]},
        probes={pair: [umbrella_probe()]},
    )
    assert report.overall == "Regular"


def test_report_without_adjacency_is_vacuously_regular():
    report = whitney_a_stratification(circle_stratification(), np.random.default_rng(0))
    assert report.overall == "Regular"
    assert not report.pairs
    assert "no adjacent pairs declared" in report.notes


# ---------------------------------------------------------------------------
# refinements
# ---------------------------------------------------------------------------


def test_refinement_inclusion_holds_on_the_quadrant_split():
    report = refinement_inclusion_check(
        circle_stratification(),
        circle_quadrant_refinement(),
        [vertical_crosser(), parabola(), tangent_line()],
        rng=np.random.default_rng(2),
    )
    assert not report.violations
    assert len(report.rows) == 3
    # the clean crosser passes both scans
    assert report.rows[0].fine_transverse
    assert report.rows[0].coarse_transverse


def test_refinement_structure_is_verified_first():
    with pytest.raises(NotARefinement, match="ambient"):
        refinement_inclusion_check(
            circle_stratification(), flat_stratification(), [], rng=np.random.default_rng(0)
        )
    from whitney.fixtures import axis_stratification

    with pytest.raises(NotARefinement):
        refinement_inclusion_check(
            circle_stratification(),
            axis_stratification(),
            [],
            rng=np.random.default_rng(0),
        )
