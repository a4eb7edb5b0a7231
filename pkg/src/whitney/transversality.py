"""Transversality verdicts and the constructions built on them.

Point verdicts assemble the span matrix [Df | tangent basis] and certify
full ambient rank, with an exact rational route when every ingredient is
polynomial over the rationals.  Region verdicts are sampled: intersection
points are located by Newton refinement from sign changes of the pulled-back
equations, then rank-tested.  On top of the verdicts sit the composition
rule, the polynomial perturbation engine, the parametric density scan, and
the prescribed-derivative construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil, comb, factorial
from typing import Sequence

import numpy as np

from .errors import (
    AmbientMismatch,
    ExhaustedDraws,
    GuardViolation,
    HypothesisFailed,
    NotSubmersion,
    RankDefect,
    SpecMismatch,
)
from .expr import (
    Const,
    DefMap,
    Expr,
    MultiIndex,
    Number,
    Region,
    add,
    bump,
    compose,
    const,
    coord,
    is_exact,
    jet_dimension,
    mul,
    norm_squared,
    positive_minorant,
    power,
    rational_point,
    recip,
    substitute,
)
from .jets import NeighborhoodSpec, in_neighborhood, prolong
from .linalg import (
    DEFAULT_RANK_TOL,
    LinearSubspace,
    exact_rank,
    gap_distance,
    gauss_newton,
    orthogonal_complement,
    span_sum,
)
from .strata import (
    MEMBERSHIP_TOL,
    ImplicitPatch,
    ParamPatch,
    Stratification,
    Stratum,
    membership,
    tangent_space,
)

# membership residuals in this band are flagged, not silently classified
AMBIGUITY_BAND = (1e-7, 1e-5)


@dataclass(frozen=True)
class TransversalityVerdict:
    point: tuple[float, ...]
    status: str  # NotInStratum | Transverse | Fail
    witness: float | None  # smallest singular value of the span matrix
    stratum_id: str
    ambiguous_proximity: bool = False
    residual: float | None = None
    exact: bool = False

    @property
    def transverse(self) -> bool:
        return self.status != "Fail"

    def to_dict(self) -> dict:
        return {
            "point": [float(v) for v in self.point],
            "status": self.status,
            "witness": None if self.witness is None else float(self.witness),
            "stratum": self.stratum_id,
            "ambiguous_proximity": self.ambiguous_proximity,
            "residual": None if self.residual is None else float(self.residual),
            "exact": self.exact,
        }


def _span_sigma(j: np.ndarray, t_basis: np.ndarray, n: int) -> float:
    cols = [j[:, i] for i in range(j.shape[1])]
    cols += [t_basis[:, i] for i in range(t_basis.shape[1])]
    kept = []
    for c in cols:
        nc = float(np.linalg.norm(c))
        if nc > 0:
            kept.append(c / nc)
    if len(kept) < n:
        return 0.0
    a = np.column_stack(kept)
    s = np.linalg.svd(a, compute_uv=False)
    return float(s[n - 1])


def _exact_span_rank(
    f: DefMap, stratum: Stratum, x: Sequence[Number], y: Sequence[Number]
) -> int | None:
    """Rank of [Df | tangent] over Q, or None when the data is not rational."""
    if not (f.is_exact() and rational_point(x)):
        return None
    from .strata import exact_tangent_kernel

    try:
        kern = exact_tangent_kernel(stratum, y)
    except RankDefect:
        return None
    geo = stratum.geometry
    if kern is None and not (
        isinstance(geo, ImplicitPatch) and not geo.equations
    ):
        return None
    n = f.codomain_dim
    jac = f.jacobian(x)
    cols: list[list[Fraction]] = []
    for i in range(f.domain_dim):
        cols.append([Fraction(jac[r][i]) for r in range(n)])
    if kern is None:
        cols += [[Fraction(int(r == i)) for r in range(n)] for i in range(n)]
    else:
        cols += [list(v) for v in kern]
    return exact_rank([[col[r] for col in cols] for r in range(n)])


def is_transverse_at(
    f: DefMap,
    stratum: Stratum,
    x: Sequence[Number],
    tol: float = MEMBERSHIP_TOL,
    rank_tol: float = DEFAULT_RANK_TOL,
) -> TransversalityVerdict:
    """Verdict at one point: image of Df plus the stratum tangent spans R^n.

    Rational data is decided by exact rank; the float singular value is still
    reported as the witness.  Near-misses of membership (residual inside
    AMBIGUITY_BAND) are flagged instead of silently classified.
    """
    xt = tuple(x)
    y = tuple(f.evaluate(xt))
    mem = membership(stratum, y, tol=tol)
    resid = float(mem.residual)
    if not mem.member:
        flag = AMBIGUITY_BAND[0] <= resid <= AMBIGUITY_BAND[1]
        return TransversalityVerdict(
            tuple(float(v) for v in xt), "NotInStratum", None, stratum.id, flag, resid
        )
    n = f.codomain_dim
    t = tangent_space(stratum, y, tol=tol, rank_tol=rank_tol, check_membership=False)
    jac = np.asarray([[float(v) for v in row] for row in f.jacobian(xt)])
    sigma = _span_sigma(jac, t.basis, n)
    exact_decision = _exact_span_rank(f, stratum, xt, y)
    if exact_decision is not None:
        status = "Transverse" if exact_decision == n else "Fail"
        return TransversalityVerdict(
            tuple(float(v) for v in xt), status, sigma, stratum.id, False, resid, True
        )
    status = "Transverse" if sigma > rank_tol else "Fail"
    return TransversalityVerdict(
        tuple(float(v) for v in xt), status, sigma, stratum.id, False, resid, False
    )


# ---------------------------------------------------------------------------
# region reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegionReport:
    transverse: bool
    verdicts: tuple[TransversalityVerdict, ...]
    intersections: tuple[TransversalityVerdict, ...]
    notes: tuple[str, ...] = ()

    def per_stratum(self) -> dict[str, dict[str, int]]:
        out: dict[str, dict[str, int]] = {}
        for v in self.verdicts + self.intersections:
            bucket = out.setdefault(v.stratum_id, {})
            bucket[v.status] = bucket.get(v.status, 0) + 1
        return out

    def failures(self) -> tuple[TransversalityVerdict, ...]:
        return tuple(
            v for v in self.verdicts + self.intersections if v.status == "Fail"
        )

    def to_dict(self) -> dict:
        return {
            "transverse": self.transverse,
            "verdicts": [v.to_dict() for v in self.verdicts],
            "intersections": [v.to_dict() for v in self.intersections],
            "per_stratum": self.per_stratum(),
            "notes": list(self.notes),
        }


def _pulled_equations(f: DefMap, stratum: Stratum) -> list[Expr] | None:
    geo = stratum.geometry
    if not isinstance(geo, ImplicitPatch) or not geo.equations:
        return None
    return [substitute(e, tuple(f.components)) for e in geo.equations]


def _grid_edges(points: list[tuple[float, ...]], m: int) -> list[tuple[int, int]]:
    index = {p: i for i, p in enumerate(points)}
    axes = [sorted(set(p[a] for p in points)) for a in range(m)]
    steps = [
        axes[a][1] - axes[a][0] if len(axes[a]) > 1 else None for a in range(m)
    ]
    edges = []
    for i, p in enumerate(points):
        for a in range(m):
            if steps[a] is None:
                continue
            q = tuple(p[b] + (steps[a] if b == a else 0.0) for b in range(m))
            j = index.get(q)
            if j is not None:
                edges.append((i, j))
    return edges


def _refine_intersections(
    f: DefMap,
    stratum: Stratum,
    points: list[tuple[float, ...]],
    tol: float,
    cap: int = 200,
) -> list[tuple[float, ...]]:
    """Newton-refine zeros of the pulled-back equations seeded at sign changes.

    Only strict sign changes along grid edges seed the solve: tangential
    touches that do not separate signs are invisible by design (they are not
    stable intersections).
    """
    eqs = _pulled_equations(f, stratum)
    if eqs is None:
        return []
    m = f.domain_dim

    def values(p: tuple[float, ...]) -> list[float] | None:
        try:
            return [float(e.evaluate(p)) for e in eqs]
        except GuardViolation:
            return None

    vals = [values(p) for p in points]
    seeds: list[np.ndarray] = []
    for i, j in _grid_edges(points, m):
        vi, vj = vals[i], vals[j]
        if vi is None or vj is None:
            continue
        if any(a * b < 0 for a, b in zip(vi, vj)):
            seeds.append(0.5 * (np.asarray(points[i]) + np.asarray(points[j])))

    def fun(z):
        v = values(tuple(z))
        return np.full(len(eqs), 1e6) if v is None else np.asarray(v)

    def jac(z):
        zt = tuple(z)
        try:
            return np.asarray(
                [[float(e.diff(a).evaluate(zt)) for a in range(m)] for e in eqs]
            )
        except GuardViolation:
            return np.eye(len(eqs), m)

    roots: list[tuple[float, ...]] = []
    for seed in seeds[: 4 * cap]:
        res = gauss_newton(fun, jac, seed, tol=1e-12, max_iter=40)
        if not res.converged:
            continue
        root = tuple(float(v) for v in res.x)
        y = tuple(f.evaluate(root))
        if not membership(stratum, y, tol=max(tol, 1e-6)).member:
            continue
        if any(np.linalg.norm(np.asarray(root) - np.asarray(r)) < 1e-6 for r in roots):
            continue
        roots.append(root)
        if len(roots) >= cap:
            break
    return roots


def is_transverse_on(
    f: DefMap,
    strat: Stratification,
    region: Region | None = None,
    samples: Sequence[Sequence[float]] | None = None,
    grid_per_axis: int = 32,
    tol: float = MEMBERSHIP_TOL,
    rank_tol: float = DEFAULT_RANK_TOL,
    refine: bool = True,
) -> RegionReport:
    """Sampled transversality of f to every stratum over a region.

    Grid samples are classified directly; intersection points are located by
    sign-change-seeded Newton refinement and classified at the refined
    points.  The default grid has an even point count per axis so it does not
    sit exactly on measure-zero tangency loci.  Overall verdict: no Fail.
    """
    if f.codomain_dim != strat.ambient_dim:
        raise AmbientMismatch(
            f"map into R^{f.codomain_dim} vs stratification in R^{strat.ambient_dim}"
        )
    if samples is not None:
        points = [tuple(float(v) for v in p) for p in samples]
    else:
        reg = region or f.region
        if reg is None:
            raise SpecMismatch("no region or samples for the scan")
        points = [tuple(p) for p in reg.grid(grid_per_axis)]

    notes: list[str] = []
    verdicts: list[TransversalityVerdict] = []
    for p in points:
        try:
            for s in strat.strata:
                verdicts.append(is_transverse_at(f, s, p, tol=tol, rank_tol=rank_tol))
        except GuardViolation as e:
            notes.append(f"sample {p} skipped: {e}")

    inters: list[TransversalityVerdict] = []
    if refine:
        for s in strat.strata:
            for root in _refine_intersections(f, s, points, tol):
                inters.append(is_transverse_at(f, s, root, tol=tol, rank_tol=rank_tol))
        if not any(isinstance(s.geometry, ImplicitPatch) for s in strat.strata):
            notes.append("no implicit stratum: refinement skipped")

    ok = all(v.status != "Fail" for v in verdicts + inters)
    return RegionReport(ok, tuple(verdicts), tuple(inters), tuple(notes))


def _infer_jet_order(m: int, n: int, jet_ambient: int, k_max: int = 24) -> int:
    for k in range(k_max + 1):
        if m + n + n * jet_dimension(m, k) == jet_ambient:
            return k
    raise SpecMismatch(
        f"no jet order k <= {k_max} gives ambient dim {jet_ambient} "
        f"for maps R^{m} -> R^{n}"
    )


def jet_transverse(
    f: DefMap,
    strat: Stratification,
    region: Region | None = None,
    samples: Sequence[Sequence[float]] | None = None,
    **kw,
) -> RegionReport:
    """Transversality of the k-jet prolongation to a jet-space stratification.

    k is inferred from the stratification's ambient dimension; the
    prolongation is built symbolically and scanned like any other map.
    """
    k = _infer_jet_order(f.domain_dim, f.codomain_dim, strat.ambient_dim)
    pf = prolong(f, k)
    report = is_transverse_on(pf, strat, region=region, samples=samples, **kw)
    return RegionReport(
        report.transverse,
        report.verdicts,
        report.intersections,
        report.notes + (f"jet order {k}",),
    )


# ---------------------------------------------------------------------------
# composition rule
# ---------------------------------------------------------------------------


def preimage_stratum(g: DefMap, s: Stratum, suffix: str = "|preimage") -> Stratum:
    """g^{-1}(S) as an implicit stratum (equations and inequalities pulled back)."""
    geo = s.geometry
    if not isinstance(geo, ImplicitPatch):
        raise SpecMismatch("preimage needs an implicit stratum")
    if g.codomain_dim != s.ambient_dim:
        raise AmbientMismatch("map codomain does not match stratum ambient")
    comps = tuple(g.components)
    eqs = tuple(substitute(e, comps) for e in geo.equations)
    ineqs = tuple(substitute(e, comps) for e in geo.inequalities)
    codim = s.ambient_dim - s.dim
    return Stratum(
        id=s.id + suffix,
        geometry=ImplicitPatch(g.domain_dim, eqs, ineqs),
        dim=g.domain_dim - codim,
        samples=(),
        sample_region=g.region,
    )


@dataclass(frozen=True)
class ComposeRow:
    x: tuple[float, ...]
    outer: TransversalityVerdict  # g vs S at f(x)
    preimage: TransversalityVerdict  # f vs g^{-1}(S) at x
    composite: TransversalityVerdict  # g.f vs S at x

    def vacuous(self) -> bool:
        return self.outer.status == "NotInStratum"


@dataclass(frozen=True)
class ComposeReport:
    rows: tuple[ComposeRow, ...]
    consistent: bool  # composite never Fail where both premises hold
    notes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "consistent": self.consistent,
            "rows": [
                {
                    "x": [float(v) for v in r.x],
                    "outer": r.outer.to_dict(),
                    "preimage": r.preimage.to_dict(),
                    "composite": r.composite.to_dict(),
                }
                for r in self.rows
            ],
            "notes": list(self.notes),
        }


def compose_transversality_check(
    f: DefMap,
    g: DefMap,
    s: Stratum,
    samples: Sequence[Sequence[float]],
    tol: float = MEMBERSHIP_TOL,
    rank_tol: float = DEFAULT_RANK_TOL,
) -> ComposeReport:
    """Verify the composition rule sample by sample.

    Premises (g transverse to S at f(x), f transverse to g^{-1}(S) at x) are
    checked first and HypothesisFailed is raised if either fails; where both
    hold, the composite's verdict is recorded and the report notes whether it
    is Transverse everywhere it should be.
    """
    if f.codomain_dim != g.domain_dim:
        raise AmbientMismatch("f codomain does not match g domain")
    pre = preimage_stratum(g, s)
    gf = compose(g, f)
    rows: list[ComposeRow] = []
    for p in samples:
        x = tuple(float(v) for v in p)
        z = tuple(f.evaluate(x))
        outer = is_transverse_at(g, s, z, tol=tol, rank_tol=rank_tol)
        if outer.status == "Fail":
            # check before touching the preimage: an outer rank drop makes the
            # pulled-back presentation singular at x, so computing its tangent
            # would surface as RankDefect instead of the premise failure
            raise HypothesisFailed(
                f"outer map not transverse to {s.id} at f({x}) = {z} "
                f"(witness {outer.witness:.3g})"
            )
        prev = is_transverse_at(f, pre, x, tol=tol, rank_tol=rank_tol)
        if prev.status == "Fail":
            raise HypothesisFailed(
                f"inner map not transverse to the preimage of {s.id} at {x} "
                f"(witness {prev.witness:.3g})"
            )
        compv = is_transverse_at(gf, s, x, tol=tol, rank_tol=rank_tol)
        rows.append(ComposeRow(x, outer, prev, compv))
    consistent = all(
        r.composite.status != "Fail" for r in rows if not r.vacuous()
    )
    notes = ()
    if not consistent:
        notes = ("composite Fail despite premises holding: numerical near-tangency",)
    return ComposeReport(tuple(rows), consistent, notes)


# ---------------------------------------------------------------------------
# perturbation engine
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PerturbationFamily:
    """Polynomial perturbations f + sum_{|a|<=k} s_{i,a} x^a phi(x), s in (0,1).

    R counts multi-indices of order <= l (the smoothness budget), C = R^2
    (l!)^2 is the headroom constant the phi bound divides by, and phi's
    certificate bounds |d^a phi| <= eps/(2C(1+|x|^2)^ceil(l/2)) for all
    |a| <= l, which implies the product-rule budget eps/(C(1+|x|^l)).
    """

    base: DefMap
    k: int
    l: int
    phi: Expr
    monomials: tuple[MultiIndex, ...]
    big_r: int
    big_c: int
    phi_certificate: object | None = None
    interval: tuple[float, float] = (0.0, 1.0)

    @property
    def draw_shape(self) -> tuple[int, int]:
        return (self.base.codomain_dim, len(self.monomials))

    def member(self, s: np.ndarray) -> DefMap:
        n, q = self.draw_shape
        if s.shape != (n, q):
            raise SpecMismatch(f"parameter shape {s.shape} != {(n, q)}")
        comps = []
        for i in range(n):
            terms = [self.base.components[i]]
            for j, alpha in enumerate(self.monomials):
                mono: Expr = const(float(s[i, j]))
                for v, e in enumerate(alpha.entries):
                    if e:
                        mono = mul(mono, power(coord(v), e))
                terms.append(mul(mono, self.phi))
            comps.append(add(*terms))
        return DefMap(
            self.base.domain_dim, n, tuple(comps), self.base.region
        )


def build_family(
    f: DefMap,
    k: int,
    l: int,
    eps: Expr,
    region: Region | None = None,
    phi: Expr | None = None,
) -> PerturbationFamily:
    if l < k:
        raise SpecMismatch(f"smoothness budget l={l} must be >= jet order k={k}")
    m = f.domain_dim
    reg = region or f.region
    if reg is None:
        raise SpecMismatch("perturbation family needs a region")
    big_r = comb(m + l, m)
    big_c = big_r * big_r * factorial(l) ** 2
    cert = None
    if phi is None:
        target = mul(eps, recip(power(add(1, norm_squared(m)), ceil(l / 2))))
        target = mul(target, Fraction(1, 2 * big_c))
        found = positive_minorant(target, l, reg)
        phi, cert = found.phi, found.certificate
    monos = MultiIndex.all_up_to(m, k, include_zero=True)
    return PerturbationFamily(f, k, l, phi, tuple(monos), big_r, big_c, cert)


@dataclass(frozen=True)
class PerturbReport:
    accepted_draw: int | None
    rejections: int
    jet_report: RegionReport | None
    neighborhood_margin: float | None
    near_misses: tuple[str, ...]
    family_summary: dict

    def to_dict(self) -> dict:
        return {
            "accepted_draw": self.accepted_draw,
            "rejections": self.rejections,
            "jet_report": None if self.jet_report is None else self.jet_report.to_dict(),
            "neighborhood_margin": self.neighborhood_margin,
            "near_misses": list(self.near_misses),
            "family": self.family_summary,
        }


def perturb_to_transverse(
    f: DefMap,
    strat: Stratification,
    k: int,
    l: int,
    eps: Expr,
    region: Region | None = None,
    samples: Sequence[Sequence[float]] | None = None,
    rng: np.random.Generator | None = None,
    max_draws: int = 100,
    phi: Expr | None = None,
    tol: float = MEMBERSHIP_TOL,
    rank_tol: float = DEFAULT_RANK_TOL,
) -> tuple[DefMap, np.ndarray, PerturbReport]:
    """Draw polynomial perturbations until the k-jet is transverse on samples
    and the perturbed map stays inside the order-l eps-neighborhood of f.

    The neighborhood check runs on a fresh verification grid twice as dense
    as the construction samples.  ExhaustedDraws carries near-miss margins.
    """
    rng = rng or np.random.default_rng(0)
    reg = region or f.region
    if reg is None and samples is None:
        raise SpecMismatch("need a region or explicit samples")
    family = build_family(f, k, l, eps, region=reg, phi=phi)
    if samples is not None:
        pts = [tuple(float(v) for v in p) for p in samples]
    else:
        pts = [tuple(p) for p in reg.grid(8)]
    verify_pts = tuple(tuple(p) for p in (reg.grid(17) if reg is not None else pts * 2))
    nspec = NeighborhoodSpec(l, eps, verify_pts)
    n, q = family.draw_shape

    misses: list[str] = []
    for draw in range(max_draws):
        s = rng.uniform(family.interval[0], family.interval[1], size=(n, q))
        g = family.member(s)
        jrep = jet_transverse(
            g, strat, samples=pts, tol=tol, rank_tol=rank_tol, refine=False
        )
        if not jrep.transverse:
            worst = min(
                (v.witness for v in jrep.failures() if v.witness is not None),
                default=None,
            )
            misses.append(f"draw {draw}: jet rank margin {worst}")
            continue
        nres = in_neighborhood(f, g, nspec)
        if not nres.inside:
            misses.append(
                f"draw {draw}: neighborhood margin {nres.margin:.3g} at {nres.worst_point}"
            )
            continue
        report = PerturbReport(
            draw,
            draw,
            jrep,
            float(nres.margin),
            tuple(misses[-4:]),
            {
                "R": family.big_r,
                "C": family.big_c,
                "k": k,
                "l": l,
                "monomials": len(family.monomials),
            },
        )
        return g, s, report
    raise ExhaustedDraws(
        f"no accepted draw in {max_draws}; last near-misses: " + "; ".join(misses[-4:])
    )


# ---------------------------------------------------------------------------
# parametric density scan
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DensityReport:
    fraction: float
    failing: tuple[tuple[float, ...], ...]
    total: int
    resolution: float
    submersion_sigma: float

    def to_dict(self) -> dict:
        return {
            "fraction": self.fraction,
            "failing": [list(s) for s in self.failing],
            "total": self.total,
            "resolution": self.resolution,
            "submersion_sigma": self.submersion_sigma,
        }


def _slice_map(phi: DefMap, m_x: int, s: Sequence[float]) -> DefMap:
    subs = [coord(i) for i in range(m_x)]
    subs += [const(float(v)) for v in s]
    comps = tuple(substitute(c, tuple(subs)) for c in phi.components)
    reg = None
    if phi.region is not None:
        reg = Region(
            phi.region.lo[:m_x],
            phi.region.hi[:m_x],
            phi.region.unbounded_lo[:m_x],
            phi.region.unbounded_hi[:m_x],
        )
    return DefMap(m_x, phi.codomain_dim, comps, reg)


def parametric_density_experiment(
    phi: DefMap,
    strat: Stratification,
    s_grid: Sequence[Sequence[float]],
    x_samples: Sequence[Sequence[float]],
    m_x: int | None = None,
    resolution: float | None = None,
    rank_tol_floor: float = 1e-12,
) -> DensityReport:
    """Fraction of parameter-grid slices that fail transversality.

    Verdicts are resolution-scaled: the membership radius and the rank
    threshold are both half the parameter grid step, so the failing count
    measures the content of the bad parameter set at that resolution and the
    fraction shrinks proportionally as the grid is refined.
    """
    s_list = [tuple(float(v) for v in s) for s in s_grid]
    if not s_list:
        raise SpecMismatch("empty parameter grid")
    s_dim = len(s_list[0])
    if m_x is None:
        m_x = phi.domain_dim - s_dim
    if m_x + s_dim != phi.domain_dim:
        raise AmbientMismatch("parameter grid does not match the family's domain split")
    n = strat.ambient_dim

    # submersion precondition at sampled (x, s)
    sig_min = math.inf
    probe_s = s_list[:: max(1, len(s_list) // 5)]
    for s in probe_s:
        for x in list(x_samples)[:: max(1, len(list(x_samples)) // 5)]:
            z = tuple(float(v) for v in x) + s
            jac = np.asarray([[float(v) for v in row] for row in phi.jacobian(z)])
            sv = np.linalg.svd(jac, compute_uv=False)
            sig = float(sv[n - 1]) if len(sv) >= n else 0.0
            sig_min = min(sig_min, sig)
            if sig <= 1e-10:
                raise NotSubmersion(
                    f"family Jacobian rank-deficient at (x, s) = {z}: sigma_n = {sig:.3g}"
                )

    if resolution is None:
        vals = sorted(set(s[0] for s in s_list))
        resolution = vals[1] - vals[0] if len(vals) > 1 else 1.0
    mem_tol = max(resolution / 2.0, 1e-12)
    rank_tol = max(resolution / 2.0, rank_tol_floor)

    failing: list[tuple[float, ...]] = []
    pts = [tuple(float(v) for v in p) for p in x_samples]
    for s in s_list:
        fs = _slice_map(phi, m_x, s)
        bad = False
        for srt in strat.strata:
            for v in [is_transverse_at(fs, srt, p, tol=mem_tol, rank_tol=rank_tol) for p in pts]:
                if v.status == "Fail":
                    bad = True
                    break
            if bad:
                break
            for root in _refine_intersections(fs, srt, pts, mem_tol):
                v = is_transverse_at(fs, srt, root, tol=mem_tol, rank_tol=rank_tol)
                if v.status == "Fail":
                    bad = True
                    break
            if bad:
                break
        if bad:
            failing.append(s)
    return DensityReport(
        len(failing) / len(s_list),
        tuple(failing),
        len(s_list),
        float(resolution),
        float(sig_min),
    )


# ---------------------------------------------------------------------------
# prescribed-derivative construction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PrescribedReport:
    base_point_exact: bool
    base_value: tuple[float, ...]
    derivative_gap: float
    s: tuple[float, ...]
    far_value: tuple[float, ...]
    far_margin: float
    draws: int
    region_report: RegionReport
    premise_sigma: float

    def to_dict(self) -> dict:
        return {
            "base_point_exact": self.base_point_exact,
            "base_value": [float(v) for v in self.base_value],
            "derivative_gap": self.derivative_gap,
            "s": list(self.s),
            "far_value": [float(v) for v in self.far_value],
            "far_margin": self.far_margin,
            "draws": self.draws,
            "region_report": self.region_report.to_dict(),
            "premise_sigma": self.premise_sigma,
        }


def _containing_stratum(strat: Stratification, p: Sequence[float]) -> Stratum | None:
    for s in strat.strata:
        if membership(s, tuple(p)).member:
            return s
    return None


def _far_field_ok(strat: Stratification, y: Sequence[float]) -> tuple[bool, float]:
    """Whether a constant map sitting at y is transverse to every stratum.

    Full-dimensional strata are harmless (their tangent space is already the
    whole ambient space); membership in any lower-dimensional stratum kills
    the constant map's transversality.  Returns the minimal equation residual
    against the lower-dimensional strata as a clearance margin.
    """
    worst = 1e6
    for s in strat.strata:
        if s.dim >= s.ambient_dim:
            continue
        mem = membership(s, tuple(y))
        if mem.member:
            return False, 0.0
        geo = s.geometry
        if isinstance(geo, ImplicitPatch) and geo.equations:
            try:
                r = max(abs(float(e.evaluate(tuple(y)))) for e in geo.equations)
            except GuardViolation:
                continue
            worst = min(worst, r)
    return True, worst


def transverse_with_derivative(
    m_dim: int,
    strat: Stratification,
    p: Sequence[float],
    h: LinearSubspace,
    samples: Sequence[Sequence[float]],
    rng: np.random.Generator | None = None,
    max_draws: int = 50,
    r_in: float = 1.0,
    r_out: float = 2.0,
    tol: float = MEMBERSHIP_TOL,
    rank_tol: float = DEFAULT_RANK_TOL,
) -> tuple[DefMap, PrescribedReport]:
    """Build f with f(0) = p, image of Df(0) = H, transverse to the
    stratification at the base point and all samples.

    Pipeline: rotate coordinates so H is the first k axes at p; take the
    graph-of-quadratics family psi_s over H; glue the coordinate projection
    to a constant by a bump so the far field maps to a certified off-support
    point; draw s (and the far constant) until every sampled verdict clears.
    """
    rng = rng or np.random.default_rng(0)
    n = strat.ambient_dim
    if len(p) != n:
        raise AmbientMismatch(f"base point in R^{len(p)} vs ambient R^{n}")
    k = h.dim
    if m_dim < k:
        raise HypothesisFailed(f"domain dim {m_dim} < dim H = {k}")

    home = _containing_stratum(strat, p)
    premise_sigma = 1.0
    if home is not None:
        t = tangent_space(home, tuple(p), check_membership=False)
        ss = span_sum(h, t)
        premise_sigma = float(ss.smallest_retained_sv)
        if ss.space.dim < n:
            raise HypothesisFailed(
                f"H + tangent of {home.id} has rank {ss.space.dim} < {n} at p"
            )

    basis = np.hstack([h.basis, orthogonal_complement(h).basis])  # n x n orthogonal

    # bump-glued submersion: plateau = first-k projection, far field = constant
    lam = bump((0.0,) * m_dim, r_in, r_out)

    x_pts = [tuple(float(v) for v in q) for q in samples]
    ring: list[tuple[float, ...]] = []
    for rad in (r_in, 0.5 * (r_in + r_out), r_out, 1.5 * r_out):
        for a in range(m_dim):
            for sgn in (1.0, -1.0):
                q = [0.0] * m_dim
                q[a] = sgn * rad
                ring.append(tuple(q))
    check_pts = [(0.0,) * m_dim] + x_pts + ring

    misses: list[str] = []
    for draw in range(max_draws):
        s = rng.uniform(0.0, 1.0, size=n - k)
        c = rng.uniform(1.5 * r_out, 3.0 * r_out, size=k) * rng.choice(
            [-1.0, 1.0], size=k
        )

        # psi_s in rotated coordinates: v -> p + B (v, s_j |v|^2)
        v_sq = norm_squared(k)
        psi_comps = []
        for j in range(n):
            terms: list[Expr] = [const(float(p[j]))]
            for t_idx in range(k):
                b = float(basis[j, t_idx])
                if b != 0.0:
                    terms.append(mul(b, coord(t_idx)))
            for t_idx in range(k, n):
                b = float(basis[j, t_idx]) * float(s[t_idx - k])
                if b != 0.0:
                    terms.append(mul(b, v_sq))
            psi_comps.append(add(*terms))
        psi = DefMap(k, n, tuple(psi_comps), None)

        far = tuple(psi.evaluate(tuple(float(v) for v in c)))
        far_ok, far_margin = _far_field_ok(strat, far)
        if not far_ok or far_margin < 1e-3:
            misses.append(f"draw {draw}: far point margin {far_margin:.2g}")
            continue

        h_comps = tuple(
            add(mul(lam, coord(a)), mul(add(1, mul(-1, lam)), const(float(c[a]))))
            for a in range(k)
        )
        h_map = DefMap(m_dim, k, h_comps, None)
        f = compose(psi, h_map)

        fast = is_transverse_on(
            f, strat, samples=check_pts, tol=tol, rank_tol=rank_tol, refine=False
        )
        if not fast.transverse:
            worst = fast.failures()[0]
            misses.append(
                f"draw {draw}: Fail at {worst.point} on {worst.stratum_id}"
            )
            continue
        # confirm with intersection refinement before accepting the draw
        report = is_transverse_on(
            f, strat, samples=check_pts, tol=tol, rank_tol=rank_tol, refine=True
        )
        if not report.transverse:
            worst = report.failures()[0]
            misses.append(
                f"draw {draw}: refined Fail at {worst.point} on {worst.stratum_id}"
            )
            continue

        x0 = (0.0,) * m_dim
        base_val = tuple(f.evaluate(x0))
        exact = all(float(a) == float(b) for a, b in zip(base_val, p))
        jac = np.asarray([[float(v) for v in row] for row in f.jacobian(x0)])
        img = LinearSubspace.from_spanning([jac[:, i] for i in range(m_dim)])
        gap = gap_distance(img, h)
        prep = PrescribedReport(
            exact,
            tuple(float(v) for v in base_val),
            float(gap),
            tuple(float(v) for v in s),
            tuple(float(v) for v in far),
            float(far_margin),
            draw,
            report,
            premise_sigma,
        )
        return f, prep
    raise ExhaustedDraws(
        f"no accepted draw in {max_draws}; near-misses: " + "; ".join(misses[-5:])
    )
