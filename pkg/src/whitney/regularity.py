"""Numerical Whitney (a)-regularity along probe curves.

A pair verdict samples tangent spaces of the big stratum along curves that
land on the small one, takes the projector-metric limit, and measures how
much of the small stratum's tangent space sticks out of it.  Verdicts are
three-valued: Regular and Fault both require converged limits on opposite
sides of widely separated thresholds, everything else is Inconclusive.
Finitely many probes can certify a Fault but only ever sample Regularity;
reports say which kind of evidence they carry.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import GuardViolation, NotARefinement, NotOnStratum, ProbeInvalid, RankDefect
from .expr import DefMap, Region
from .linalg import LinearSubspace, asym_deviation, sequence_limit
from .strata import (
    MEMBERSHIP_TOL,
    Stratification,
    Stratum,
    membership,
    project_to_patch,
    stratum_samples,
    tangent_space,
)
from .transversality import RegionReport, is_transverse_on

PASS_THRESHOLD = 1e-6
FAULT_THRESHOLD = 1e-3
DEFAULT_J_START = 3
DEFAULT_J_END = 22
MIN_PROBE_POINTS = 6


@dataclass(frozen=True)
class ProbeCurve:
    """Definable curve t in (0,1] -> ambient, landing on the base point at t=0.

    Sampled at t_j = 2^{-j}, j = j_start..j_end.  Every sampled point must
    lie on the designated stratum and the distances to the landing point
    must decrease monotonically along the schedule.
    """

    curve: DefMap
    landing: tuple[float, ...]
    j_start: int = DEFAULT_J_START
    j_end: int = DEFAULT_J_END
    label: str = "curve"

    def schedule(self) -> tuple[float, ...]:
        return tuple(2.0 ** (-j) for j in range(self.j_start, self.j_end + 1))

    def sample_points(self) -> list[tuple[float, ...]]:
        pts = []
        for t in self.schedule():
            pts.append(tuple(float(v) for v in self.curve.evaluate((t,))))
        return pts


@dataclass(frozen=True)
class ProjectedProbe:
    """Auto-generated probe: the sequence project_X(y + t_j d), labeled as such."""

    points: tuple[tuple[float, ...], ...]
    landing: tuple[float, ...]
    label: str = "projected"

    def sample_points(self) -> list[tuple[float, ...]]:
        return [tuple(p) for p in self.points]


Probe = ProbeCurve | ProjectedProbe


def validate_probe(probe: Probe, x_stratum: Stratum, tol: float = MEMBERSHIP_TOL) -> list[tuple[float, ...]]:
    """Sampled points of the probe, checked on-stratum and monotone toward landing."""
    pts = probe.sample_points()
    if len(pts) < MIN_PROBE_POINTS:
        raise ProbeInvalid(f"probe {probe.label}: only {len(pts)} sample points")
    y = np.asarray(probe.landing)
    last = None
    for i, p in enumerate(pts):
        mem = membership(x_stratum, p, tol=tol)
        if not mem.member:
            raise ProbeInvalid(
                f"probe {probe.label}: point {i} off stratum {x_stratum.id} "
                f"(residual {mem.residual:.3g})"
            )
        d = float(np.linalg.norm(np.asarray(p) - y))
        if last is not None and d >= last * (1 + 1e-9):
            raise ProbeInvalid(
                f"probe {probe.label}: distance to landing increases at step {i}"
            )
        last = d
    return pts


def probe_from_direction(
    x_stratum: Stratum,
    y: Sequence[float],
    direction: Sequence[float],
    j_start: int = DEFAULT_J_START,
    j_end: int = DEFAULT_J_END,
) -> ProjectedProbe | None:
    """Project y + t_j d onto the stratum; None when too few projections stick."""
    yv = np.asarray([float(v) for v in y])
    d = np.asarray([float(v) for v in direction])
    nd = float(np.linalg.norm(d))
    if nd == 0:
        return None
    d = d / nd
    pts: list[tuple[float, ...]] = []
    for j in range(j_start, j_end + 1):
        t = 2.0 ** (-j)
        try:
            res = project_to_patch(x_stratum, tuple(yv + t * d))
        except (GuardViolation, RankDefect):
            break
        if not res.converged:
            break
        pt = tuple(float(v) for v in res.x)
        if not membership(x_stratum, pt).member:
            break
        dist = float(np.linalg.norm(np.asarray(pt) - yv))
        if pts and dist >= float(np.linalg.norm(np.asarray(pts[-1]) - yv)) * (1 + 1e-9):
            break
        if dist == 0.0:
            break
        pts.append(pt)
    if len(pts) < MIN_PROBE_POINTS:
        return None
    return ProjectedProbe(tuple(pts), tuple(float(v) for v in y))


@dataclass(frozen=True)
class ProbeWitness:
    label: str
    converged: bool
    deviation: float | None
    oscillation: float | None
    tau: LinearSubspace | None
    points_used: int
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "converged": self.converged,
            "deviation": self.deviation,
            "oscillation": self.oscillation,
            "points_used": self.points_used,
            "note": self.note,
        }


@dataclass(frozen=True)
class RegularityVerdict:
    pair: tuple[str, str]  # (X, Y): X accumulating on Y
    point: tuple[float, ...]
    status: str  # Regular | Fault | Inconclusive
    witness: ProbeWitness | None
    probes: tuple[ProbeWitness, ...]

    def to_dict(self) -> dict:
        return {
            "pair": list(self.pair),
            "point": [float(v) for v in self.point],
            "status": self.status,
            "witness": None if self.witness is None else self.witness.to_dict(),
            "probes": [p.to_dict() for p in self.probes],
        }


def _probe_witness(
    probe: Probe,
    x_stratum: Stratum,
    t_y: LinearSubspace,
    seq_tol: float,
) -> ProbeWitness:
    try:
        pts = validate_probe(probe, x_stratum)
    except ProbeInvalid as e:
        return ProbeWitness(probe.label, False, None, None, None, 0, str(e))
    tangents = []
    for p in pts:
        try:
            tangents.append(tangent_space(x_stratum, p, check_membership=False))
        except (RankDefect, GuardViolation) as e:
            return ProbeWitness(
                probe.label, False, None, None, None, len(tangents),
                f"tangent failed at {p}: {e}",
            )
    lim = sequence_limit(tangents, tol=seq_tol)
    dev = asym_deviation(t_y, lim.limit)
    return ProbeWitness(
        probe.label,
        lim.converged,
        float(dev),
        float(lim.oscillation),
        lim.limit,
        len(pts),
    )


def whitney_a_pair(
    x_stratum: Stratum,
    y_stratum: Stratum,
    y: Sequence[float],
    probes: Sequence[Probe],
    pass_threshold: float = PASS_THRESHOLD,
    fault_threshold: float = FAULT_THRESHOLD,
    seq_tol: float = 1e-4,
) -> RegularityVerdict:
    """Verdict for one adjacent pair at one base point.

    Fault needs a converged tangent limit whose deviation from containing
    T_yY exceeds fault_threshold; Regular needs every probe converged below
    pass_threshold; anything between, and any unconverged probe, is
    Inconclusive.  A Fault is a certificate; Regular is sampling evidence.
    """
    yt = tuple(float(v) for v in y)
    if not membership(y_stratum, yt).member:
        raise NotOnStratum(f"base point {yt} not on stratum {y_stratum.id}")
    t_y = tangent_space(y_stratum, yt, check_membership=False)
    if not probes:
        raise ProbeInvalid("no probes supplied")
    witnesses = tuple(_probe_witness(p, x_stratum, t_y, seq_tol) for p in probes)
    pair = (x_stratum.id, y_stratum.id)

    faults = [
        w for w in witnesses
        if w.converged and w.deviation is not None and w.deviation > fault_threshold
    ]
    if faults:
        worst = max(faults, key=lambda w: w.deviation)
        return RegularityVerdict(pair, yt, "Fault", worst, witnesses)
    if all(
        w.converged and w.deviation is not None and w.deviation < pass_threshold
        for w in witnesses
    ):
        worst = max(witnesses, key=lambda w: w.deviation)
        return RegularityVerdict(pair, yt, "Regular", worst, witnesses)
    return RegularityVerdict(pair, yt, "Inconclusive", None, witnesses)


@dataclass(frozen=True)
class PairEntry:
    pair: tuple[str, str]
    verdicts: tuple[RegularityVerdict, ...]

    def status(self) -> str:
        statuses = {v.status for v in self.verdicts}
        if "Fault" in statuses:
            return "Fault"
        if "Inconclusive" in statuses:
            return "Inconclusive"
        return "Regular"


@dataclass(frozen=True)
class RegularityReport:
    overall: str  # Regular | Fault | Inconclusive
    pairs: tuple[PairEntry, ...]
    notes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "overall": self.overall,
            "pairs": [
                {
                    "pair": list(e.pair),
                    "status": e.status(),
                    "verdicts": [v.to_dict() for v in e.verdicts],
                }
                for e in self.pairs
            ],
            "notes": list(self.notes),
        }


def whitney_a_stratification(
    strat: Stratification,
    rng: np.random.Generator | None = None,
    probe_budget: int = 5,
    base_points_per_pair: int = 5,
    pinned: dict[tuple[str, str], Sequence[Sequence[float]]] | None = None,
    probes: dict[tuple[str, str], Sequence[Probe]] | None = None,
    pass_threshold: float = PASS_THRESHOLD,
    fault_threshold: float = FAULT_THRESHOLD,
) -> RegularityReport:
    """Pair-by-pair verdicts over the declared adjacencies.

    Base points are sampled on the small stratum plus any pinned points
    (faults tend to live at special points, so pin them).  Probes are the
    user-supplied ones for the pair plus projected random-direction probes.
    Overall Regular only when every pair is Regular at every base point.
    """
    rng = rng or np.random.default_rng(0)
    pinned = pinned or {}
    probes = probes or {}
    notes: list[str] = []
    entries: list[PairEntry] = []
    for xid, yid in strat.adjacency:
        xs, ys = strat.stratum(xid), strat.stratum(yid)
        bases: list[tuple[float, ...]] = [
            tuple(float(v) for v in p) for p in pinned.get((xid, yid), ())
        ]
        for p in stratum_samples(ys, base_points_per_pair, rng):
            pt = tuple(float(v) for v in p)
            if pt not in bases:
                bases.append(pt)
        verdicts: list[RegularityVerdict] = []
        for y in bases[: base_points_per_pair + len(pinned.get((xid, yid), ()))]:
            plist: list[Probe] = list(probes.get((xid, yid), ()))
            tries = 0
            while (
                len([p for p in plist]) < probe_budget and tries < 6 * probe_budget
            ):
                d = rng.normal(size=strat.ambient_dim)
                got = probe_from_direction(xs, y, d)
                tries += 1
                if got is not None:
                    plist.append(got)
            if not plist:
                notes.append(f"pair ({xid}, {yid}) at {y}: no valid probes")
                verdicts.append(
                    RegularityVerdict((xid, yid), tuple(y), "Inconclusive", None, ())
                )
                continue
            verdicts.append(
                whitney_a_pair(
                    xs, ys, y, plist,
                    pass_threshold=pass_threshold,
                    fault_threshold=fault_threshold,
                )
            )
        entries.append(PairEntry((xid, yid), tuple(verdicts)))
    statuses = {e.status() for e in entries}
    if "Fault" in statuses:
        overall = "Fault"
    elif "Inconclusive" in statuses:
        overall = "Inconclusive"
    else:
        # no adjacent pairs means the condition is vacuous
        overall = "Regular"
        if not entries:
            notes.append("no adjacent pairs declared")
    return RegularityReport(overall, tuple(entries), tuple(notes))


# ---------------------------------------------------------------------------
# refinement bookkeeping
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RefinementRow:
    map_index: int
    fine_transverse: bool
    coarse_transverse: bool

    @property
    def violation(self) -> bool:
        return self.fine_transverse and not self.coarse_transverse


@dataclass(frozen=True)
class RefinementReport:
    rows: tuple[RefinementRow, ...]
    violations: tuple[int, ...]  # map indices; nonempty means a fixture bug
    notes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "rows": [
                {
                    "map": r.map_index,
                    "fine_transverse": r.fine_transverse,
                    "coarse_transverse": r.coarse_transverse,
                    "violation": r.violation,
                }
                for r in self.rows
            ],
            "violations": list(self.violations),
            "notes": list(self.notes),
        }


def _verify_refinement(
    coarse: Stratification,
    fine: Stratification,
    rng: np.random.Generator,
    samples_per_stratum: int = 8,
) -> None:
    if coarse.ambient_dim != fine.ambient_dim:
        raise NotARefinement("ambient dimensions differ")
    # each fine stratum sits inside exactly one coarse stratum
    for f in fine.strata:
        homes = set()
        for p in stratum_samples(f, samples_per_stratum, rng):
            owners = [c.id for c in coarse.strata if membership(c, tuple(p)).member]
            if not owners:
                raise NotARefinement(
                    f"fine stratum {f.id}: sample {tuple(p)} in no coarse stratum"
                )
            if len(owners) > 1:
                raise NotARefinement(
                    f"fine stratum {f.id}: sample {tuple(p)} in several coarse strata "
                    f"{owners}"
                )
            homes.add(owners[0])
        if len(homes) > 1:
            raise NotARefinement(
                f"fine stratum {f.id} straddles coarse strata {sorted(homes)}"
            )
    # each coarse stratum is covered by fine strata
    for c in coarse.strata:
        for p in stratum_samples(c, samples_per_stratum, rng):
            if not any(membership(f, tuple(p)).member for f in fine.strata):
                raise NotARefinement(
                    f"coarse stratum {c.id}: sample {tuple(p)} in no fine stratum"
                )


def refinement_inclusion_check(
    coarse: Stratification,
    fine: Stratification,
    maps: Sequence[DefMap],
    region: Region | None = None,
    samples: Sequence[Sequence[float]] | None = None,
    rng: np.random.Generator | None = None,
) -> RefinementReport:
    """Transversality to a refinement implies transversality to the original.

    The refinement structure is verified by membership sampling first; then
    each map is scanned against both stratifications at the same samples.
    A row where the fine scan passes and the coarse scan fails is reported
    as a violation: that is a fixture bug, not a possible outcome.
    """
    rng = rng or np.random.default_rng(0)
    _verify_refinement(coarse, fine, rng)
    rows: list[RefinementRow] = []
    notes: list[str] = []
    for i, f in enumerate(maps):
        rf = is_transverse_on(f, fine, region=region, samples=samples)
        rc = is_transverse_on(f, coarse, region=region, samples=samples)
        rows.append(RefinementRow(i, rf.transverse, rc.transverse))
        if rows[-1].violation:
            notes.append(f"map {i}: transverse to refinement but not to original")
    return RefinementReport(
        tuple(rows), tuple(r.map_index for r in rows if r.violation), tuple(notes)
    )
