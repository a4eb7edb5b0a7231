"""Shared geometric fixtures: stratified sets, maps, and probes used by the
tests, the experiments, and the shipped problem files.

Each builder returns fresh in-memory objects.  ``corpus()`` assembles the
same data as problem dicts and ``python -m whitney.fixtures <dir>`` writes
them to disk, so the JSON under fixtures/ never drifts from the builders.
"""

from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass
from fractions import Fraction

from .expr import (
    DefMap,
    Expr,
    Region,
    add,
    bump,
    const,
    coord,
    exp,
    mul,
    number_to_json,
    power,
    recip,
    smoothstep_rising,
    sqrt,
)
from .regularity import ProbeCurve
from .strata import ImplicitPatch, Stratification, Stratum, stratification_to_dict

ROOT_HALF = 2.0**-0.5


# ---------------------------------------------------------------------------
# planar fixtures: the x-axis and the unit circle
# ---------------------------------------------------------------------------


def axis_stratification() -> Stratification:
    axis = Stratum(
        "axis",
        ImplicitPatch(2, (coord(1),)),
        1,
        samples=((0.0, 0.0), (1.0, 0.0), (-2.0, 0.0)),
        sample_region=Region((-4.0, -1.0), (4.0, 1.0)),
    )
    return Stratification(2, (axis,))


def axis_rider() -> DefMap:
    """Rides the axis: lands on the stratum at every point, never crosses."""
    return DefMap(1, 2, (coord(0), const(0)), Region((-4.0,), (4.0,)))


def cubic_crosser() -> DefMap:
    """Crosses the axis at 0 with vanishing speed: a sign change that fails
    the rank test."""
    return DefMap(1, 2, (coord(0), power(coord(0), 3)), Region((-1.5,), (1.5,)))


def circle_stratification() -> Stratification:
    eq = add(power(coord(0), 2), power(coord(1), 2), const(-1))
    circ = Stratum(
        "circle",
        ImplicitPatch(2, (eq,)),
        1,
        samples=((1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (ROOT_HALF, ROOT_HALF)),
        sample_region=Region((-1.5, -1.5), (1.5, 1.5)),
    )
    return Stratification(2, (circ,))


def parabola() -> DefMap:
    """f(x) = (x, x^2 - 1): crosses the circle at x = +-1, grazes it at 0."""
    return DefMap(
        1, 2, (coord(0), add(power(coord(0), 2), const(-1))), Region((-2.0,), (2.0,))
    )


def tangent_line() -> DefMap:
    """Grazes the circle at its north pole without separating signs."""
    return DefMap(1, 2, (coord(0), const(1)), Region((-2.0,), (2.0,)))


def vertical_crosser() -> DefMap:
    """Cuts the circle cleanly inside two quadrant arcs, away from the poles."""
    return DefMap(1, 2, (const(Fraction(1, 2)), coord(0)), Region((-2.0,), (2.0,)))


def circle_quadrant_refinement() -> Stratification:
    """The circle split into 4 open quadrant arcs and the 4 axis poles."""
    eq = add(power(coord(0), 2), power(coord(1), 2), const(-1))

    def arc(name: str, sx: int, sy: int, sample: tuple[float, float]) -> Stratum:
        ineqs = (mul(const(sx), coord(0)), mul(const(sy), coord(1)))
        return Stratum(
            name,
            ImplicitPatch(2, (eq,), ineqs),
            1,
            samples=(sample,),
            sample_region=Region((-1.5, -1.5), (1.5, 1.5)),
        )

    def pole(name: str, px: int, py: int) -> Stratum:
        eqs = (add(coord(0), const(-px)), add(coord(1), const(-py)))
        return Stratum(name, ImplicitPatch(2, eqs), 0, samples=((float(px), float(py)),))

    strata = (
        arc("arc-ne", 1, 1, (ROOT_HALF, ROOT_HALF)),
        arc("arc-nw", -1, 1, (-ROOT_HALF, ROOT_HALF)),
        arc("arc-sw", -1, -1, (-ROOT_HALF, -ROOT_HALF)),
        arc("arc-se", 1, -1, (ROOT_HALF, -ROOT_HALF)),
        pole("pole-east", 1, 0),
        pole("pole-north", 0, 1),
        pole("pole-west", -1, 0),
        pole("pole-south", 0, -1),
    )
    adjacency = (
        ("arc-ne", "pole-east"),
        ("arc-ne", "pole-north"),
        ("arc-nw", "pole-north"),
        ("arc-nw", "pole-west"),
        ("arc-sw", "pole-west"),
        ("arc-sw", "pole-south"),
        ("arc-se", "pole-south"),
        ("arc-se", "pole-east"),
    )
    return Stratification(2, strata, adjacency)


# ---------------------------------------------------------------------------
# regularity fixtures in R^3
# ---------------------------------------------------------------------------


def flat_stratification() -> Stratification:
    """A plane with the origin split off: regular everywhere, trivially."""
    plane = Stratum(
        "plane",
        ImplicitPatch(3, (coord(2),), (add(power(coord(0), 2), power(coord(1), 2)),)),
        2,
        samples=((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (-1.0, 0.5, 0.0)),
        sample_region=Region((-2.0,) * 3, (2.0,) * 3),
    )
    origin = Stratum(
        "origin",
        ImplicitPatch(3, (coord(0), coord(1), coord(2))),
        0,
        samples=((0.0, 0.0, 0.0),),
    )
    return Stratification(3, (plane, origin), (("plane", "origin"),))


def flat_probe() -> ProbeCurve:
    curve = DefMap(1, 3, (coord(0), const(0), const(0)))
    return ProbeCurve(curve, (0.0, 0.0, 0.0), label="ray")


def cone_stratification() -> Stratification:
    """Surface z^2 (x^2 + y^2) = x^2 y^2 over the x-axis.

    Tangent planes along rays into the origin fail to contain the axis
    direction, so the pair (surface, axis) has a fault at 0.  The inequality
    factors carve out the singular coordinate axes of the variety.
    """
    x2, y2, z2 = power(coord(0), 2), power(coord(1), 2), power(coord(2), 2)
    eq = add(mul(z2, add(x2, y2)), mul(const(-1), x2, y2))
    surface = Stratum(
        "surface",
        ImplicitPatch(3, (eq,), (x2, y2)),
        2,
        samples=(
            (1.0, 1.0, ROOT_HALF),
            (2.0, 1.0, 2.0 / math.sqrt(5.0)),
            (-1.0, 1.0, -ROOT_HALF),
        ),
        sample_region=Region((-2.0,) * 3, (2.0,) * 3),
    )
    axis = Stratum(
        "axis",
        ImplicitPatch(3, (coord(1), coord(2))),
        1,
        samples=((0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (-1.5, 0.0, 0.0)),
    )
    return Stratification(3, (surface, axis), (("surface", "axis"),))


def cone_ray_probe() -> ProbeCurve:
    """Straight ray on the surface: t -> (t, t, t/sqrt(2))."""
    curve = DefMap(1, 3, (coord(0), coord(0), mul(const(ROOT_HALF), coord(0))))
    return ProbeCurve(curve, (0.0, 0.0, 0.0), label="ray")


def cone_bent_probe() -> ProbeCurve:
    """Curved arc on the surface with genuinely varying tangent planes.

    x = t, y = t + t^2, z = x y / sqrt(x^2 + y^2) = t (1+t) / sqrt(1 + (1+t)^2).
    Same tangent-plane limit as the straight ray, but the moving frames the
    basis-alignment machinery fits are nonconstant along the arc.
    """
    one_plus = add(const(1), coord(0))
    z = mul(coord(0), one_plus, recip(sqrt(add(const(1), power(one_plus, 2)))))
    curve = DefMap(1, 3, (coord(0), add(coord(0), power(coord(0), 2)), z))
    return ProbeCurve(curve, (0.0, 0.0, 0.0), label="bent")


def cone_limit_plane() -> list[list[float]]:
    """Orthonormal basis of the tangent-plane limit along the (1,1,2^-1/2) ray."""
    u = [ROOT_HALF, -ROOT_HALF, 0.0]
    norm = math.sqrt(2.5)
    v = [1.0 / norm, 1.0 / norm, ROOT_HALF / norm]
    return [u, v]


def umbrella_stratification() -> Stratification:
    """Canopy z x^2 = y^2 over the positive z-axis handle: regular pair."""
    eq = add(mul(coord(2), power(coord(0), 2)), mul(const(-1), power(coord(1), 2)))
    canopy = Stratum(
        "canopy",
        ImplicitPatch(3, (eq,), (power(coord(0), 2),)),
        2,
        samples=((1.0, 1.0, 1.0), (1.0, 0.5, 0.25), (-1.0, 1.0, 1.0)),
        sample_region=Region((-2.0, -2.0, 0.0), (2.0, 2.0, 2.0)),
    )
    handle = Stratum(
        "handle",
        ImplicitPatch(3, (coord(0), coord(1)), (coord(2),)),
        1,
        samples=((0.0, 0.0, 1.0), (0.0, 0.0, 2.0), (0.0, 0.0, 0.25)),
    )
    return Stratification(3, (canopy, handle), (("canopy", "handle"),))


def umbrella_probe() -> ProbeCurve:
    curve = DefMap(1, 3, (coord(0), coord(0), const(1)))
    return ProbeCurve(curve, (0.0, 0.0, 1.0), label="diagonal")


# ---------------------------------------------------------------------------
# parametric families for the density experiment
# ---------------------------------------------------------------------------


def origin_stratification() -> Stratification:
    pt = Stratum(
        "origin", ImplicitPatch(2, (coord(0), coord(1))), 0, samples=((0.0, 0.0),)
    )
    return Stratification(2, (pt,))


def translation_family() -> DefMap:
    """Phi(x, s1, s2) = (x + s1, x^2 + s2): translated parabola vs a point.

    The failing parameter set is the curve s = -(x, x^2), so its measured
    fraction at grid resolution h scales like h.
    """
    comps = (add(coord(0), coord(1)), add(power(coord(0), 2), coord(2)))
    return DefMap(3, 2, comps, Region((-1.2, -1.0, -1.0), (1.2, 1.0, 1.0)))


def height_family() -> DefMap:
    """Phi(x, s) = (x, s): horizontal lines vs the circle.

    Slices fail exactly at the tangent heights s = +-1, so the failing set
    is two isolated parameters.
    """
    return DefMap(2, 2, (coord(0), coord(1)), Region((-2.0, -2.0), (2.0, 2.0)))


# ---------------------------------------------------------------------------
# scalar expression fixtures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExprFixture:
    """One scalar expression plus a sampling window for derivative checks.

    ``coeffs`` is the hand-expanded monomial table {exponents: coefficient}
    for polynomial entries; it is written out by hand, never derived from
    ``expr``, so tests can evaluate and differentiate it as an independent
    route.
    """

    name: str
    expr: Expr
    region: Region
    coeffs: dict[tuple[int, ...], Fraction] | None = None


def expression_fixtures() -> tuple[ExprFixture, ...]:
    x, y, z = coord(0), coord(1), coord(2)
    half = Fraction(1, 2)
    return (
        ExprFixture(
            "cubic-minus-line",
            add(power(x, 3), mul(const(-1), x)),
            Region((-2.0,), (2.0,)),
            {(3,): Fraction(1), (1,): Fraction(-1)},
        ),
        ExprFixture(
            "scaled-quartic",
            add(
                mul(const(Fraction(3, 2)), power(x, 4)),
                mul(const(Fraction(-2, 3)), power(x, 2)),
                const(7),
            ),
            Region((-2.0,), (2.0,)),
            {(4,): Fraction(3, 2), (2,): Fraction(-2, 3), (0,): Fraction(7)},
        ),
        ExprFixture("gauss", exp(mul(const(-1), power(x, 2))), Region((-2.0,), (2.0,))),
        ExprFixture(
            "runge",
            recip(add(const(1), power(x, 2))),
            Region((-2.0,), (2.0,)),
        ),
        ExprFixture(
            "offset-root",
            sqrt(add(power(x, 2), const(4))),
            Region((-2.0,), (2.0,)),
        ),
        ExprFixture(
            "rising-step",
            smoothstep_rising(x, Fraction(0), Fraction(1)),
            Region((-2.0,), (2.0,)),
        ),
        ExprFixture(
            "saddle",
            add(power(x, 2), mul(const(-1), power(y, 2)), mul(const(half), x, y)),
            Region((-2.0, -2.0), (2.0, 2.0)),
            {(2, 0): Fraction(1), (0, 2): Fraction(-1), (1, 1): half},
        ),
        ExprFixture(
            "plane-bump",
            bump((0, 0), 1, 2),
            Region((-3.0, -3.0), (3.0, 3.0)),
        ),
        ExprFixture(
            "exp-mix",
            mul(exp(mul(x, y)), add(x, y)),
            Region((-1.5, -1.5), (1.5, 1.5)),
        ),
        ExprFixture(
            "circle-gap",
            add(power(x, 2), power(y, 2), const(-1)),
            Region((-2.0, -2.0), (2.0, 2.0)),
            {(2, 0): Fraction(1), (0, 2): Fraction(1), (0, 0): Fraction(-1)},
        ),
        # kept away from the z-axis: the root factor is not smooth there
        ExprFixture(
            "cone-sheet",
            add(mul(z, sqrt(add(power(x, 2), power(y, 2)))), mul(const(-1), x, y)),
            Region((0.5, 0.5, 0.5), (2.0, 2.0, 2.0)),
        ),
        ExprFixture(
            "trilinear",
            add(mul(x, y, z), mul(const(-2), x), const(3)),
            Region((-2.0, -2.0, -2.0), (2.0, 2.0, 2.0)),
            {(1, 1, 1): Fraction(1), (1, 0, 0): Fraction(-2), (0, 0, 0): Fraction(3)},
        ),
        ExprFixture(
            "pinch",
            add(power(x, 2), mul(const(-1), z, power(y, 2))),
            Region((-2.0, -2.0, -2.0), (2.0, 2.0, 2.0)),
            {(2, 0, 0): Fraction(1), (0, 2, 1): Fraction(-1)},
        ),
        ExprFixture(
            "window-blend",
            mul(bump((0, 0, 0), 1, 2), add(x, mul(const(2), y), mul(const(3), z))),
            Region((-3.0, -3.0, -3.0), (3.0, 3.0, 3.0)),
        ),
    )


def _expr_fixture_dict(fx: ExprFixture) -> dict:
    out = {
        "name": fx.name,
        "m": fx.region.dim,
        "expr": fx.expr.to_dict(),
        "region": fx.region.to_dict(),
        "polynomial": None,
    }
    if fx.coeffs is not None:
        out["polynomial"] = {
            ",".join(str(e) for e in expo): number_to_json(c)
            for expo, c in sorted(fx.coeffs.items())
        }
    return out


# ---------------------------------------------------------------------------
# problem-file corpus
# ---------------------------------------------------------------------------


def _map_dict(f: DefMap) -> dict:
    return f.to_dict()


def _probe_dict(p: ProbeCurve, pair: tuple[str, str]) -> dict:
    return {
        "pair": list(pair),
        "label": p.label,
        "curve": p.curve.to_dict(),
        "landing": [float(v) for v in p.landing],
    }


def corpus() -> dict[str, dict]:
    """All shipped problem files, keyed by file name."""
    grid33 = [[round(-2.0 + i * 0.125, 10)] for i in range(33)]
    problems: dict[str, dict] = {}

    problems["flat.json"] = {
        "version": "1",
        "seed": 7,
        "maps": {},
        "stratifications": {"target": stratification_to_dict(flat_stratification())},
        "probes": [_probe_dict(flat_probe(), ("plane", "origin"))],
        "pinned": [{"pair": ["plane", "origin"], "points": [[0.0, 0.0, 0.0]]}],
    }

    problems["cone.json"] = {
        "version": "1",
        "seed": 7,
        "maps": {},
        "stratifications": {"target": stratification_to_dict(cone_stratification())},
        "probes": [
            _probe_dict(cone_ray_probe(), ("surface", "axis")),
            _probe_dict(cone_bent_probe(), ("surface", "axis")),
        ],
        "pinned": [{"pair": ["surface", "axis"], "points": [[0.0, 0.0, 0.0]]}],
        "prescribed": {
            "m_dim": 2,
            "p": [0.0, 0.0, 0.0],
            "h_basis": cone_limit_plane(),
            "samples": [[x, y] for x in (-3.0, -1.5, 0.0, 1.5, 3.0) for y in (-3.0, -1.5, 0.0, 1.5, 3.0)],
        },
        "experiment": {
            "name": "trotman",
            "m_dim": 2,
            "i_count": 8,
            "pair": ["surface", "axis"],
            "base_point": [0.0, 0.0, 0.0],
            "witness": "bent",
        },
    }

    problems["umbrella.json"] = {
        "version": "1",
        "seed": 7,
        "maps": {},
        "stratifications": {
            "target": stratification_to_dict(umbrella_stratification())
        },
        "probes": [_probe_dict(umbrella_probe(), ("canopy", "handle"))],
        "pinned": [{"pair": ["canopy", "handle"], "points": [[0.0, 0.0, 1.0]]}],
        "experiment": {
            "name": "trotman",
            "m_dim": 2,
            "i_count": 8,
            "pair": ["canopy", "handle"],
            "base_point": [0.0, 0.0, 1.0],
        },
    }

    problems["line-on-axis.json"] = {
        "version": "1",
        "seed": 7,
        "maps": {"f": _map_dict(axis_rider())},
        "stratifications": {"target": stratification_to_dict(axis_stratification())},
        "perturb": {
            "map": "f",
            "stratification": "target",
            "k": 1,
            "l": 1,
            "epsilon": const(Fraction(1, 10)).to_dict(),
            "max_draws": 100,
        },
    }

    # the tangency at the circle's south pole has even contact order, so the
    # sign-change seeded scan cannot find it on its own; the samples pin it
    problems["parabola-circle.json"] = {
        "version": "1",
        "seed": 7,
        "maps": {
            "f": _map_dict(parabola()),
            "crosser": _map_dict(vertical_crosser()),
        },
        "stratifications": {"target": stratification_to_dict(circle_stratification())},
        "samples": [[-1.25], [0.0], [1.0]],
        "jet": {"k": 1},
        "perturb": {
            "map": "f",
            "stratification": "target",
            "k": 1,
            "l": 2,
            "epsilon": const(Fraction(1, 10)).to_dict(),
            "max_draws": 100,
        },
        "experiment": {
            "name": "openness",
            "map": "crosser",
            "stratification": "target",
            "scales": [0.1, 0.01, 0.001],
            "draws_per_scale": 6,
        },
    }

    problems["cubic-axis.json"] = {
        "version": "1",
        "seed": 7,
        "maps": {"f": _map_dict(cubic_crosser())},
        "stratifications": {"target": stratification_to_dict(axis_stratification())},
        "perturb": {
            "map": "f",
            "stratification": "target",
            "k": 1,
            "l": 2,
            "epsilon": const(Fraction(1, 10)).to_dict(),
            "max_draws": 100,
        },
    }

    problems["circle-arcs.json"] = {
        "version": "1",
        "seed": 7,
        "maps": {
            "f": _map_dict(vertical_crosser()),
            "graze": _map_dict(tangent_line()),
            "parabola": _map_dict(parabola()),
        },
        "stratifications": {
            "target": stratification_to_dict(circle_quadrant_refinement()),
            "coarse": stratification_to_dict(circle_stratification()),
        },
        "samples": grid33,
    }

    problems["escape.json"] = {
        "version": "1",
        "seed": 7,
        "maps": {},
        "stratifications": {},
        "experiment": {"name": "escape", "coefficients": [-1000000, 1]},
    }

    problems["d0.json"] = {
        "version": "1",
        "seed": 7,
        "maps": {},
        "stratifications": {},
        "experiment": {
            "name": "d0",
            "i_max": 12,
            "samples": [1.5, 2.0, 4.0, 8.0],
            "catalog": [
                {
                    "label": "inverse_quadratic",
                    "epsilon": recip(add(const(1), power(coord(0), 2))).to_dict(),
                },
                {"label": "unit", "epsilon": const(1).to_dict()},
                {
                    "label": "exp_decay",
                    "epsilon": exp(mul(const(-1), coord(0))).to_dict(),
                },
            ],
        },
    }

    problems["density-translation.json"] = {
        "version": "1",
        "seed": 7,
        "maps": {"phi": _map_dict(translation_family())},
        "stratifications": {"target": stratification_to_dict(origin_stratification())},
        "experiment": {
            "name": "density",
            "family": "phi",
            "stratification": "target",
            "levels": [11, 21, 41],
            "s_lo": [-1.0, -1.0],
            "s_hi": [1.0, 1.0],
            "x_lo": [-1.1],
            "x_hi": [1.1],
        },
    }

    problems["density-tangency.json"] = {
        "version": "1",
        "seed": 7,
        "maps": {"phi": _map_dict(height_family())},
        "stratifications": {"target": stratification_to_dict(circle_stratification())},
        "experiment": {
            "name": "density",
            "family": "phi",
            "stratification": "target",
            "levels": [41, 81, 161],
            "s_lo": [-2.0],
            "s_hi": [2.0],
            "x_lo": [-2.0],
            "x_hi": [2.0],
        },
    }

    problems["tubular-circle.json"] = {
        "version": "1",
        "seed": 7,
        "maps": {},
        "stratifications": {"target": stratification_to_dict(circle_stratification())},
        "tubular": {"stratum": "circle", "budget": 10, "cloud_size": 48},
    }

    return problems


# (fixture file, subcommand, experiment name or None) runs pinned by goldens
GOLDEN_RUNS: tuple[tuple[str, str, str | None], ...] = (
    ("flat.json", "validate", None),
    ("flat.json", "check-regularity", None),
    ("cone.json", "check-regularity", None),
    ("cone.json", "construct-prescribed", None),
    ("cone.json", "experiment", "trotman"),
    ("umbrella.json", "check-regularity", None),
    ("umbrella.json", "experiment", "trotman"),
    ("line-on-axis.json", "check-transversality", None),
    ("line-on-axis.json", "perturb", None),
    ("parabola-circle.json", "check-transversality", None),
    ("parabola-circle.json", "check-jet-transversality", None),
    ("parabola-circle.json", "perturb", None),
    ("parabola-circle.json", "experiment", "openness"),
    ("cubic-axis.json", "check-transversality", None),
    ("cubic-axis.json", "perturb", None),
    ("circle-arcs.json", "check-transversality", None),
    ("escape.json", "experiment", "escape"),
    ("d0.json", "experiment", "d0"),
    ("density-tangency.json", "experiment", "density"),
    ("density-translation.json", "experiment", "density"),
    ("tubular-circle.json", "tubular", None),
)


def golden_name(problem: str, command: str, experiment: str | None) -> str:
    stem = problem[: -len(".json")] if problem.endswith(".json") else problem
    tail = f"{command}-{experiment}" if experiment else command
    return f"{stem}--{tail}.json"


def write_corpus(directory: str) -> list[str]:
    import os

    os.makedirs(directory, exist_ok=True)
    written = []
    for name, problem in corpus().items():
        path = os.path.join(directory, name)
        with open(path, "w") as fh:
            json.dump(problem, fh, indent=2, sort_keys=True)
            fh.write("\n")
        written.append(path)

    path = os.path.join(directory, "expressions.json")
    with open(path, "w") as fh:
        json.dump(
            [_expr_fixture_dict(fx) for fx in expression_fixtures()],
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    written.append(path)

    from .cli import PROBLEM_SCHEMA, REPORT_SCHEMA

    schema_dir = os.path.join(directory, "schema")
    os.makedirs(schema_dir, exist_ok=True)
    for fname, schema in (
        ("problem.schema.json", PROBLEM_SCHEMA),
        ("report.schema.json", REPORT_SCHEMA),
    ):
        path = os.path.join(schema_dir, fname)
        with open(path, "w") as fh:
            json.dump(schema, fh, indent=2, sort_keys=True)
            fh.write("\n")
        written.append(path)
    return written


def write_goldens(directory: str) -> list[str]:
    """Run every pinned (problem, command) pair and store its report."""
    import os

    from .cli import main as cli_main

    golden_dir = os.path.join(directory, "golden")
    os.makedirs(golden_dir, exist_ok=True)
    written = []
    for problem, command, experiment in GOLDEN_RUNS:
        out = os.path.join(golden_dir, golden_name(problem, command, experiment))
        argv = [command]
        if experiment:
            argv.append(experiment)
        argv += [os.path.join(directory, problem), "--report", out]
        cli_main(argv)
        written.append(out)
    return written


if __name__ == "__main__":
    target = sys.argv[1] if len(sys.argv) > 1 else "fixtures"
    for p in write_corpus(target):
        print(p)
    if "--goldens" in sys.argv:
        for p in write_goldens(target):
            print(p)
