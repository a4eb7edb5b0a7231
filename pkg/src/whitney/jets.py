"""Jets of definable maps, the jet metric, and jet-space geometry.

A k-jet at x stores the raw partial derivatives d^alpha f(x) for
1 <= |alpha| <= k (not Taylor coefficients: no alpha! division) in graded
lexicographic order, component-major.  Jet space is identified with
R^(m + n + n*A); the prolongation x -> j^k f(x) is built symbolically from
the expression language, so jet-transversality reduces to ordinary
transversality in jet space.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cache
from typing import Sequence

from .errors import ProblemFormatError, SpecMismatch
from .expr import (
    DefMap,
    Expr,
    MultiIndex,
    Number,
    add,
    const,
    coord,
    expr_from_dict,
    jet_dimension,
    mul,
    number_from_json,
    number_to_json,
    power,
    substitute,
)
from .strata import ImplicitPatch, Stratification, Stratum


@dataclass(frozen=True)
class JetSpaceSpec:
    """Shape of J^k(R^m, R^n) with the flat coordinate layout.

    Coordinates: x (m entries), then y (n entries), then derivative slots
    a_{i,alpha} with the component index i outermost and alpha running over
    grlex ranks 1..A.
    """

    m: int
    n: int
    k: int

    def __post_init__(self):
        if self.m < 1 or self.n < 1 or self.k < 0:
            raise ProblemFormatError(f"bad jet spec ({self.m}, {self.n}, {self.k})")

    @property
    def num_coeffs(self) -> int:
        return jet_dimension(self.m, self.k)

    @property
    def total_dim(self) -> int:
        return self.m + self.n + self.n * self.num_coeffs

    def multiindices(self) -> tuple[MultiIndex, ...]:
        return MultiIndex.all_up_to(self.m, self.k)


@dataclass(frozen=True)
class JetPoint:
    spec: JetSpaceSpec
    x: tuple[Number, ...]
    y: tuple[Number, ...]
    coeffs: tuple[tuple[Number, ...], ...]  # [component][grlex rank - 1], raw partials

    def __post_init__(self):
        if len(self.x) != self.spec.m or len(self.y) != self.spec.n:
            raise SpecMismatch("jet point does not match its spec")
        if len(self.coeffs) != self.spec.n or any(
            len(row) != self.spec.num_coeffs for row in self.coeffs
        ):
            raise SpecMismatch("coefficient block does not match the spec")

    def flatten(self) -> tuple[Number, ...]:
        out = list(self.x) + list(self.y)
        for row in self.coeffs:
            out.extend(row)
        return tuple(out)

    def to_dict(self) -> dict:
        return {
            "m": self.spec.m,
            "n": self.spec.n,
            "k": self.spec.k,
            "x": [number_to_json(v) for v in self.x],
            "y": [number_to_json(v) for v in self.y],
            "coeffs": [[number_to_json(v) for v in row] for row in self.coeffs],
        }

    @staticmethod
    def from_dict(d: dict) -> JetPoint:
        try:
            spec = JetSpaceSpec(int(d["m"]), int(d["n"]), int(d["k"]))
            return JetPoint(
                spec,
                tuple(number_from_json(v) for v in d["x"]),
                tuple(number_from_json(v) for v in d["y"]),
                tuple(tuple(number_from_json(v) for v in row) for row in d["coeffs"]),
            )
        except KeyError as e:
            raise ProblemFormatError(f"jet object is missing {e}") from e


def compute_jet(f: DefMap, x: Sequence[Number], k: int) -> JetPoint:
    spec = JetSpaceSpec(f.domain_dim, f.codomain_dim, k)
    y = f.evaluate(x)
    coeffs = tuple(
        tuple(f.component_partial(i, a).evaluate(x) for a in spec.multiindices())
        for i in range(f.codomain_dim)
    )
    return JetPoint(spec, tuple(x), y, coeffs)


def jet_distance(a: JetPoint, b: JetPoint) -> Number:
    """Sup-norm over base point, value, and raw derivative slots; exact on Fractions."""
    if a.spec != b.spec:
        raise SpecMismatch(f"jet specs differ: {a.spec} vs {b.spec}")
    worst: Number = 0
    for u, v in zip(a.flatten(), b.flatten()):
        d = abs(u - v)
        if d > worst:
            worst = d
    return worst


def prolong(f: DefMap, k: int) -> DefMap:
    """The symbolic prolongation x -> j^k f(x) as a map into jet space."""
    spec = JetSpaceSpec(f.domain_dim, f.codomain_dim, k)
    comps: list[Expr] = [coord(i) for i in range(f.domain_dim)]
    comps.extend(f.components)
    for i in range(f.codomain_dim):
        for a in spec.multiindices():
            comps.append(f.component_partial(i, a))
    return DefMap(f.domain_dim, spec.total_dim, tuple(comps), f.region)


def taylor_map(j: JetPoint) -> DefMap:
    """Polynomial map with the same k-jet at x: y + sum a_alpha/alpha! (X-x)^alpha."""
    spec = j.spec
    comps = []
    for i in range(spec.n):
        terms: list[Expr] = [const(j.y[i]) if not isinstance(j.y[i], Expr) else j.y[i]]
        for a, val in zip(spec.multiindices(), j.coeffs[i]):
            if val == 0:
                continue
            scale = (
                Fraction(val, a.factorial())
                if isinstance(val, (int, Fraction))
                else val / a.factorial()
            )
            mono: list[Expr] = [const(scale)]
            for var, e in enumerate(a.entries):
                if e:
                    mono.append(power(add(coord(var), mul(-1, const(j.x[var]))), e))
            terms.append(mul(*mono))
        comps.append(add(*terms))
    return DefMap(spec.m, spec.n, tuple(comps))


def jet_pushforward(j: JetPoint, pi: DefMap) -> JetPoint:
    """Jet of pi o f from the jet of f, exact to order k.

    Realized by composing pi with the truncated Taylor polynomial of the jet:
    derivatives of pi o f at x up to order k only read derivatives of f up to
    order k at x, which the Taylor polynomial reproduces exactly.  Rational
    data stays rational.
    """
    if pi.domain_dim != j.spec.n:
        raise SpecMismatch(
            f"pi expects domain R^{pi.domain_dim}, jet codomain is R^{j.spec.n}"
        )
    t = taylor_map(j)
    composed = DefMap(
        j.spec.m,
        pi.codomain_dim,
        tuple(substitute(c, t.components) for c in pi.components),
    )
    return compute_jet(composed, j.x, j.spec.k)


# ---------------------------------------------------------------------------
# jet-metric neighborhoods
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NeighborhoodSpec:
    """Order-k jet neighborhood with radius eps(x), certified on fixed samples."""

    k: int
    epsilon: Expr
    samples: tuple[tuple[Number, ...], ...]

    def __post_init__(self):
        if not self.samples:
            raise ProblemFormatError("neighborhood spec needs at least one sample")


@dataclass(frozen=True)
class NeighborhoodResult:
    inside: bool
    margin: float  # min over samples of eps(x) - jet distance; negative when outside
    worst_point: tuple[Number, ...]


def in_neighborhood(f: DefMap, g: DefMap, spec: NeighborhoodSpec) -> NeighborhoodResult:
    if (f.domain_dim, f.codomain_dim) != (g.domain_dim, g.codomain_dim):
        raise SpecMismatch("maps have different shapes")
    margin = float("inf")
    worst = spec.samples[0]
    for x in spec.samples:
        d = jet_distance(compute_jet(f, x, spec.k), compute_jet(g, x, spec.k))
        e = float(spec.epsilon.evaluate(x))
        gap = e - float(d)
        if gap < margin:
            margin = gap
            worst = x
    return NeighborhoodResult(margin > 0, margin, worst)


# ---------------------------------------------------------------------------
# cylinders: target-space strata seen inside jet space
# ---------------------------------------------------------------------------


def cylinder_over_codomain(strat: Stratification, spec: JetSpaceSpec) -> Stratification:
    """Lift strata of the codomain to jet space through the y-projection.

    The projection (x, y, a) -> y is a surjective linear submersion, so this
    is the pullback construction specialized to jet coordinates: equations
    get their y-variables re-indexed, dims rise by total_dim - n.
    """
    if strat.ambient_dim != spec.n:
        raise ProblemFormatError(
            f"stratification lives in R^{strat.ambient_dim}, jet codomain is R^{spec.n}"
        )
    subs = tuple(coord(spec.m + i) for i in range(spec.n))
    extra = spec.total_dim - spec.n
    lifted = []
    for s in strat.strata:
        if not isinstance(s.geometry, ImplicitPatch):
            raise ProblemFormatError("cylinder lift needs implicit strata")
        eqs = tuple(substitute(e, subs) for e in s.geometry.equations)
        ineqs = tuple(substitute(e, subs) for e in s.geometry.inequalities)
        lifted.append(Stratum(s.id, ImplicitPatch(spec.total_dim, eqs, ineqs), s.dim + extra))
    return Stratification(spec.total_dim, tuple(lifted), strat.adjacency)
