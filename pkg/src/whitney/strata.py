"""Stratified sets: patches, membership, tangent spaces, validation, pullback.

A stratum is presented either implicitly (equations = 0, inequalities > 0)
or by a parametric chart.  Adjacency is declared by the fixture and then
verified by sampled frontier probes; dimensions are declared and then
certified through Jacobian rank at sampled points.  Nothing here proves a
stratification is one; it certifies the declared structure at finitely many
points with explicit margins.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import (
    GuardViolation,
    NotOnStratum,
    NotSubmersion,
    ProblemFormatError,
    RankDefect,
)
from .expr import (
    DefMap,
    Expr,
    MultiIndex,
    Number,
    Region,
    expr_from_dict,
    is_exact,
    number_from_json,
    number_to_json,
    rational_point,
    substitute,
)
from .linalg import (
    DEFAULT_RANK_TOL,
    GaussNewtonResult,
    LinearSubspace,
    exact_kernel,
    exact_rank,
    gauss_newton,
    orthonormal_columns,
)

MEMBERSHIP_TOL = 1e-7


@dataclass(frozen=True)
class ImplicitPatch:
    """Locus {equations == 0, inequalities > 0} in R^ambient_dim."""

    ambient_dim: int
    equations: tuple[Expr, ...]
    inequalities: tuple[Expr, ...] = ()


@dataclass(frozen=True)
class ParamPatch:
    """Image of a chart map from its declared parameter region."""

    chart: DefMap

    def __post_init__(self):
        if self.chart.region is None:
            raise ProblemFormatError("parametric patch needs a chart region")

    @property
    def ambient_dim(self) -> int:
        return self.chart.codomain_dim


@dataclass(frozen=True)
class Stratum:
    id: str
    geometry: ImplicitPatch | ParamPatch
    dim: int
    samples: tuple[tuple[Number, ...], ...] = ()
    sample_region: Region | None = None

    @property
    def ambient_dim(self) -> int:
        return self.geometry.ambient_dim


@dataclass(frozen=True)
class Stratification:
    ambient_dim: int
    strata: tuple[Stratum, ...]
    adjacency: tuple[tuple[str, str], ...] = ()  # (X, Y): Y in the frontier of X

    def __post_init__(self):
        ids = [s.id for s in self.strata]
        if len(set(ids)) != len(ids):
            raise ProblemFormatError("duplicate stratum ids")
        for s in self.strata:
            if s.ambient_dim != self.ambient_dim:
                raise ProblemFormatError(f"stratum {s.id} has wrong ambient dim")
        for x, y in self.adjacency:
            if x not in ids or y not in ids:
                raise ProblemFormatError(f"adjacency ({x}, {y}) names unknown strata")

    def stratum(self, sid: str) -> Stratum:
        for s in self.strata:
            if s.id == sid:
                return s
        raise KeyError(sid)


@dataclass(frozen=True)
class MembershipResult:
    member: bool
    residual: float  # max |equation| (implicit) / distance to chart image (parametric)
    inequality_margin: float  # min inequality value; +inf when none
    note: str = ""


def membership(
    stratum: Stratum,
    x: Sequence[Number],
    tol: float = MEMBERSHIP_TOL,
    ineq_tol: float = 0.0,
) -> MembershipResult:
    """Sampled membership: equation residual <= tol, inequalities > ineq_tol.

    The inequality threshold defaults to 0 (strictly positive) rather than
    tol: probe sequences must stay members arbitrarily close to the frontier,
    where inequality values decay to 0 while still being positive.  The
    margin is reported so callers that need clearance can enforce their own.
    """
    geo = stratum.geometry
    if isinstance(geo, ImplicitPatch):
        try:
            residual = 0.0
            for eq in geo.equations:
                residual = max(residual, abs(float(eq.evaluate(x))))
            margin = float("inf")
            for ineq in geo.inequalities:
                margin = min(margin, float(ineq.evaluate(x)))
        except GuardViolation as e:
            return MembershipResult(False, float("inf"), float("-inf"), f"guard: {e}")
        member = residual <= tol and (not geo.inequalities or margin > ineq_tol)
        return MembershipResult(member, residual, margin)
    fit = _nearest_chart_point(geo, x)
    if fit is None:
        return MembershipResult(False, float("inf"), float("-inf"), "chart solve diverged")
    u, dist = fit
    inside = geo.chart.region.contains(u)
    member = dist <= tol and inside
    note = "" if inside else "nearest parameter outside chart region"
    return MembershipResult(member, dist, float("inf"), note)


def _nearest_chart_point(geo: ParamPatch, x: Sequence[Number]) -> tuple[np.ndarray, float] | None:
    chart = geo.chart
    target = np.asarray([float(v) for v in x])

    def fun(u):
        return np.asarray([float(v) for v in chart.evaluate(tuple(u))]) - target

    def jac(u):
        return np.asarray([[float(v) for v in row] for row in chart.jacobian(tuple(u))])

    starts = chart.region.grid(5 if chart.domain_dim <= 2 else 3)
    best = min(starts, key=lambda u: float(np.linalg.norm(fun(np.asarray(u)))))
    # Gauss-Newton on an overdetermined system converges to a least-squares
    # fit; tol here is a stationarity target, the distance is reported as-is
    res = gauss_newton(fun, jac, best, tol=1e-12, max_iter=60)
    if not np.all(np.isfinite(res.x)):
        return None
    return res.x, res.residual_norm


def _jacobian_rows(equations: Sequence[Expr], x: Sequence[Number], m: int) -> np.ndarray:
    rows = []
    for eq in equations:
        rows.append([float(eq.diff(j).evaluate(x)) for j in range(m)])
    return np.asarray(rows, dtype=float)


def exact_tangent_kernel(stratum: Stratum, x: Sequence[Number]) -> list[list[Fraction]] | None:
    """Exact kernel basis when the patch is polynomial/rational at a rational point."""
    geo = stratum.geometry
    if not isinstance(geo, ImplicitPatch):
        return None
    if not (all(is_exact(eq) for eq in geo.equations) and rational_point(x)):
        return None
    n = geo.ambient_dim
    rows = []
    for eq in geo.equations:
        rows.append([Fraction(eq.diff(j).evaluate(x)) for j in range(n)])
    if rows and exact_rank(rows) != n - stratum.dim:
        raise RankDefect(
            f"stratum {stratum.id}: exact Jacobian rank {exact_rank(rows)} != "
            f"{n - stratum.dim} at x={tuple(x)}"
        )
    return exact_kernel(rows, n)


def tangent_space(
    stratum: Stratum,
    x: Sequence[Number],
    tol: float = MEMBERSHIP_TOL,
    rank_tol: float = DEFAULT_RANK_TOL,
    check_membership: bool = True,
) -> LinearSubspace:
    """Tangent space at a sampled point, with a rank certificate.

    Implicit patches: kernel of the equation Jacobian (exact kernel when the
    data is rational, SVD otherwise); parametric patches: image of the chart
    Jacobian.  RankDefect is raised when the rank does not certify the
    declared dimension, NotOnStratum when the point fails membership.
    """
    if check_membership:
        mem = membership(stratum, x, tol)
        if not mem.member:
            raise NotOnStratum(
                f"x={tuple(float(v) for v in x)} is not on {stratum.id} "
                f"(residual {mem.residual:.3g}{'; ' + mem.note if mem.note else ''})"
            )
    geo = stratum.geometry
    n = geo.ambient_dim
    if isinstance(geo, ImplicitPatch):
        if not geo.equations:
            if stratum.dim != n:
                raise RankDefect(f"stratum {stratum.id}: no equations but dim {stratum.dim} < {n}")
            return LinearSubspace.full(n)
        exact = exact_tangent_kernel(stratum, x)
        if exact is not None:
            vecs = np.asarray([[float(c) for c in v] for v in exact])
            if len(exact) != stratum.dim:
                raise RankDefect(
                    f"stratum {stratum.id}: exact kernel dim {len(exact)} != {stratum.dim}"
                )
            q, _ = orthonormal_columns(vecs.T, rank_tol)
            return LinearSubspace(n, q)
        jac = _jacobian_rows(geo.equations, x, n)
        u, s, vh = np.linalg.svd(jac)
        smax = s[0] if s.size else 0.0
        rank = int(np.count_nonzero(s > rank_tol * smax)) if smax > 0 else 0
        if rank != n - stratum.dim:
            raise RankDefect(
                f"stratum {stratum.id}: Jacobian rank {rank} != {n - stratum.dim} "
                f"at x={tuple(float(v) for v in x)}"
            )
        return LinearSubspace(n, vh[rank:].T)
    # parametric: image of the chart Jacobian
    fit = _nearest_chart_point(geo, x)
    if fit is None:
        raise NotOnStratum(f"chart solve diverged near x={tuple(x)}")
    u_param, dist = fit
    jac = np.asarray(
        [[float(v) for v in row] for row in geo.chart.jacobian(tuple(u_param))]
    )
    q, smallest = orthonormal_columns(jac, rank_tol)
    if q.shape[1] != stratum.dim:
        raise RankDefect(
            f"stratum {stratum.id}: chart rank {q.shape[1]} != {stratum.dim} "
            f"(immersion certificate fails at u={tuple(u_param)})"
        )
    return LinearSubspace(n, q)


def project_to_patch(
    stratum: Stratum, w: Sequence[float], tol: float = 1e-11, max_iter: int = 60
) -> GaussNewtonResult:
    """Gauss-Newton projection onto the equation locus (implicit) or chart image."""
    geo = stratum.geometry
    if isinstance(geo, ImplicitPatch):
        eqs = geo.equations
        n = geo.ambient_dim

        def fun(p):
            try:
                return np.asarray([float(eq.evaluate(tuple(p))) for eq in eqs])
            except GuardViolation:
                return np.full(len(eqs), 1e6)

        def jac(p):
            try:
                return _jacobian_rows(eqs, tuple(p), n)
            except GuardViolation:
                return np.zeros((len(eqs), n))

        return gauss_newton(fun, jac, w, tol=tol, max_iter=max_iter)
    fit = _nearest_chart_point(geo, w)
    if fit is None:
        return GaussNewtonResult(np.asarray(w, dtype=float), float("inf"), False, 0)
    u, dist = fit
    pt = np.asarray([float(v) for v in geo.chart.evaluate(tuple(u))])
    return GaussNewtonResult(pt, dist, dist <= 1e-7, 0)


def stratum_samples(
    stratum: Stratum,
    count: int,
    rng: np.random.Generator,
    tol: float = MEMBERSHIP_TOL,
) -> list[tuple[float, ...]]:
    """Curated samples first, then seeded random membership-verified draws."""
    out = [tuple(float(v) for v in s) for s in stratum.samples]
    geo = stratum.geometry
    if isinstance(geo, ParamPatch):
        params = geo.chart.region.sample(rng, max(0, (count - len(out)) * 3))
        for u in params:
            if len(out) >= count:
                break
            out.append(tuple(float(v) for v in geo.chart.evaluate(u)))
        return out[:count]
    box = stratum.sample_region
    if box is None:
        n = geo.ambient_dim
        box = Region((-2.0,) * n, (2.0,) * n)
    attempts = 0
    while len(out) < count and attempts < 60 * count:
        attempts += 1
        w = box.sample(rng, 1)[0]
        res = project_to_patch(stratum, w)
        if not res.converged:
            continue
        pt = tuple(float(v) for v in res.x)
        if not box.contains(pt, margin=1e-9):
            continue
        if membership(stratum, pt, tol).member:
            out.append(pt)
    return out[:count]


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StratumCheck:
    stratum: str
    samples: int
    rank_failures: int
    details: tuple[str, ...] = ()


@dataclass(frozen=True)
class FrontierCheck:
    pair: tuple[str, str]
    base_points: int
    worst_distance: float
    ok: bool


@dataclass(frozen=True)
class StratificationReport:
    valid: bool
    stratum_checks: tuple[StratumCheck, ...]
    disjointness_violations: tuple[str, ...]
    frontier_checks: tuple[FrontierCheck, ...]


def validate_stratification(
    strat: Stratification,
    rng: np.random.Generator,
    samples_per_stratum: int = 8,
    frontier_tol: float = 1e-4,
) -> StratificationReport:
    """Sampled certificate: dimensions, pairwise disjointness, frontier condition."""
    sample_bank: dict[str, list[tuple[float, ...]]] = {}
    checks = []
    for s in strat.strata:
        pts = stratum_samples(s, samples_per_stratum, rng)
        sample_bank[s.id] = pts
        failures = 0
        details = []
        for p in pts:
            try:
                tangent_space(s, p)
            except (RankDefect, NotOnStratum) as e:
                failures += 1
                details.append(str(e))
        checks.append(StratumCheck(s.id, len(pts), failures, tuple(details[:3])))

    violations = []
    for s in strat.strata:
        for p in sample_bank[s.id]:
            for other in strat.strata:
                if other.id == s.id:
                    continue
                if membership(other, p).member:
                    violations.append(
                        f"sample of {s.id} at {tuple(round(c, 6) for c in p)} "
                        f"also belongs to {other.id}"
                    )

    frontier = []
    for xid, yid in strat.adjacency:
        xs, ys = strat.stratum(xid), strat.stratum(yid)
        base = sample_bank[yid] or [tuple(float(v) for v in s) for s in ys.samples]
        worst = 0.0
        for y in base:
            best = float("inf")
            for delta in (1e-2, 1e-3, 1e-4, 1e-5):
                for _ in range(12):
                    d = rng.normal(size=strat.ambient_dim)
                    d /= np.linalg.norm(d)
                    start = np.asarray(y) + delta * d
                    res = project_to_patch(xs, start)
                    if not res.converged:
                        continue
                    pt = tuple(float(v) for v in res.x)
                    if membership(xs, pt).member:
                        best = min(best, float(np.linalg.norm(np.asarray(pt) - np.asarray(y))))
                if best <= frontier_tol:
                    break
            worst = max(worst, best)
        frontier.append(FrontierCheck((xid, yid), len(base), worst, worst <= frontier_tol))

    valid = (
        all(c.rank_failures == 0 for c in checks)
        and not violations
        and all(f.ok for f in frontier)
    )
    return StratificationReport(valid, tuple(checks), tuple(violations), tuple(frontier))


# ---------------------------------------------------------------------------
# pullback along a submersion
# ---------------------------------------------------------------------------


def pullback_stratification(
    strat: Stratification,
    pi: DefMap,
    rng: np.random.Generator | None = None,
    submersion_samples: int = 6,
    rank_tol: float = DEFAULT_RANK_TOL,
    sample_region: Region | None = None,
) -> Stratification:
    """Pull strata back along pi: P -> N; dims rise by dim P - dim N.

    The submersion certificate is checked at sampled points of each
    pulled-back stratum; a rank drop raises NotSubmersion with the witness.
    """
    if pi.codomain_dim != strat.ambient_dim:
        raise ProblemFormatError(
            f"pi maps into R^{pi.codomain_dim}, stratification lives in R^{strat.ambient_dim}"
        )
    extra = pi.domain_dim - pi.codomain_dim
    if extra < 0:
        raise NotSubmersion("pi cannot be a submersion: domain smaller than codomain")
    pulled = []
    for s in strat.strata:
        if not isinstance(s.geometry, ImplicitPatch):
            raise ProblemFormatError(
                f"pullback needs implicit presentation; stratum {s.id} is parametric"
            )
        eqs = tuple(substitute(e, pi.components) for e in s.geometry.equations)
        ineqs = tuple(substitute(e, pi.components) for e in s.geometry.inequalities)
        pulled.append(
            Stratum(
                s.id,
                ImplicitPatch(pi.domain_dim, eqs, ineqs),
                s.dim + extra,
                sample_region=sample_region,
            )
        )
    out = Stratification(pi.domain_dim, tuple(pulled), strat.adjacency)

    if rng is not None:
        for s in out.strata:
            for p in stratum_samples(s, submersion_samples, rng):
                jac = np.asarray([[float(v) for v in row] for row in pi.jacobian(p)])
                smax = np.linalg.svd(jac, compute_uv=False)
                rank = int(np.count_nonzero(smax > rank_tol * smax[0])) if smax.size else 0
                if rank != pi.codomain_dim:
                    raise NotSubmersion(
                        f"pi drops rank ({rank} < {pi.codomain_dim}) at witness "
                        f"{tuple(round(c, 6) for c in p)} on pulled stratum {s.id}"
                    )
    return out


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def stratum_to_dict(s: Stratum) -> dict:
    d: dict = {"id": s.id, "dim": s.dim}
    geo = s.geometry
    if isinstance(geo, ImplicitPatch):
        d["equations"] = [e.to_dict() for e in geo.equations]
        if geo.inequalities:
            d["inequalities"] = [e.to_dict() for e in geo.inequalities]
    else:
        d["chart"] = geo.chart.to_dict()
    if s.samples:
        d["samples"] = [[number_to_json(v) for v in p] for p in s.samples]
    if s.sample_region is not None:
        d["sample_region"] = s.sample_region.to_dict()
    return d


def stratification_to_dict(strat: Stratification) -> dict:
    return {
        "ambient_dim": strat.ambient_dim,
        "strata": [stratum_to_dict(s) for s in strat.strata],
        "adjacency": [[x, y] for x, y in strat.adjacency],
    }


def stratum_from_dict(d: dict, ambient_dim: int) -> Stratum:
    try:
        sid = d["id"]
        dim = int(d["dim"])
        if "chart" in d:
            geo: ImplicitPatch | ParamPatch = ParamPatch(DefMap.from_dict(d["chart"]))
        else:
            geo = ImplicitPatch(
                ambient_dim,
                tuple(expr_from_dict(e) for e in d.get("equations", [])),
                tuple(expr_from_dict(e) for e in d.get("inequalities", [])),
            )
        samples = tuple(
            tuple(number_from_json(v) for v in p) for p in d.get("samples", [])
        )
        region = Region.from_dict(d["sample_region"]) if "sample_region" in d else None
        return Stratum(sid, geo, dim, samples, region)
    except KeyError as e:
        raise ProblemFormatError(f"stratum object is missing {e}") from e


def stratification_from_dict(d: dict) -> Stratification:
    try:
        n = int(d["ambient_dim"])
        strata = tuple(stratum_from_dict(s, n) for s in d["strata"])
        adjacency = tuple((str(a), str(b)) for a, b in d.get("adjacency", []))
        return Stratification(n, strata, adjacency)
    except KeyError as e:
        raise ProblemFormatError(f"stratification object is missing {e}") from e
