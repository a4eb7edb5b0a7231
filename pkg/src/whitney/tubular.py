"""Tubular neighborhoods: normal spaces, nearest-point retraction, radius probes.

The retraction solves the orthogonality system (point on the stratum, offset
in the normal space) by damped Newton from a precomputed point-cloud initial
guess.  Radius estimates are probe-and-certify: per-point reach is bracketed
by doubling/halving retraction probes along normal directions, then a radius
expression from a small candidate family is verified against every probe.
All of it is sampled certification with reported margins.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cache
from typing import Sequence

import numpy as np

from .errors import CertificationFailure, GuardViolation, NoConvergence, OutOfDomain
from .expr import DefMap, Expr, Region, add, const, mul, norm_squared, power, recip
from .linalg import LinearSubspace, gauss_newton, orthogonal_complement
from .strata import (
    ImplicitPatch,
    ParamPatch,
    Stratum,
    membership,
    stratum_samples,
    tangent_space,
)


def normal_space(stratum: Stratum, x: Sequence[float], **kw) -> LinearSubspace:
    return orthogonal_complement(tangent_space(stratum, x, **kw))


@cache
def _second_partial(e: Expr, i: int, j: int) -> Expr:
    return e.diff(i).diff(j)


@dataclass(frozen=True)
class RetractResult:
    point: tuple[float, ...]
    distance: float
    iterations: int


@dataclass
class TubularNeighborhood:
    stratum: Stratum
    radius: Expr
    cloud: tuple[tuple[float, ...], ...]
    tol: float = 1e-10
    max_iter: int = 50

    def radius_at(self, x: Sequence[float]) -> float:
        return float(self.radius.evaluate(x))


def build_tubular(
    stratum: Stratum,
    rng: np.random.Generator,
    radius: Expr | None = None,
    cloud_size: int = 64,
    probe_budget: int = 12,
) -> TubularNeighborhood:
    cloud = tuple(stratum_samples(stratum, cloud_size, rng))
    if not cloud:
        raise CertificationFailure(f"could not sample stratum {stratum.id}")
    if radius is None:
        radius = estimate_radius(stratum, rng, probe_budget, cloud=cloud).radius
    return TubularNeighborhood(stratum, radius, cloud)


def _retract_implicit(
    patch: ImplicitPatch,
    w: np.ndarray,
    x0: np.ndarray,
    tol: float,
    max_iter: int,
) -> tuple[np.ndarray, int] | None:
    eqs = patch.equations
    n = patch.ambient_dim
    neq = len(eqs)

    def split(z):
        return z[:n], z[n:]

    def fun(z):
        x, lam = split(z)
        xt = tuple(x)
        try:
            top = [float(e.evaluate(xt)) for e in eqs]
            jac = np.asarray(
                [[float(e.diff(j).evaluate(xt)) for j in range(n)] for e in eqs]
            )
        except GuardViolation:
            return np.full(n + neq, 1e6)
        bottom = x + jac.T @ lam - w
        return np.concatenate([top, bottom])

    def jac_fn(z):
        x, lam = split(z)
        xt = tuple(x)
        try:
            de = np.asarray(
                [[float(e.diff(j).evaluate(xt)) for j in range(n)] for e in eqs]
            )
            hess_term = np.zeros((n, n))
            for i, e in enumerate(eqs):
                if lam[i] == 0.0:
                    continue
                h = np.asarray(
                    [
                        [float(_second_partial(e, a, b).evaluate(xt)) for b in range(n)]
                        for a in range(n)
                    ]
                )
                hess_term += lam[i] * h
        except GuardViolation:
            return np.eye(n + neq)
        out = np.zeros((n + neq, n + neq))
        out[:neq, :n] = de
        out[neq:, :n] = np.eye(n) + hess_term
        out[neq:, n:] = de.T
        return out

    de0 = np.asarray(
        [[float(e.diff(j).evaluate(tuple(x0))) for j in range(n)] for e in eqs]
    )
    lam0, *_ = np.linalg.lstsq(de0.T, w - x0, rcond=None)
    res = gauss_newton(fun, jac_fn, np.concatenate([x0, lam0]), tol=tol, max_iter=max_iter)
    if not res.converged:
        return None
    return res.x[:n], res.iterations


def _retract_param(
    patch: ParamPatch, w: np.ndarray, tol: float, max_iter: int
) -> tuple[np.ndarray, int] | None:
    chart = patch.chart

    def fun(u):
        return np.asarray([float(v) for v in chart.evaluate(tuple(u))]) - w

    def jac(u):
        return np.asarray([[float(v) for v in row] for row in chart.jacobian(tuple(u))])

    per_axis = {1: 41, 2: 9}.get(chart.domain_dim, 4)
    grid = sorted(chart.region.grid(per_axis), key=lambda s: float(np.linalg.norm(fun(np.asarray(s)))))

    def descend(u0: np.ndarray) -> tuple[np.ndarray, int] | None:
        u = u0
        for it in range(max_iter):
            r = fun(u)
            j = jac(u)
            grad = j.T @ r
            if np.linalg.norm(grad) <= max(tol, 1e-12 * max(1.0, float(np.linalg.norm(r)))):
                return u, it
            step, *_ = np.linalg.lstsq(j, -r, rcond=None)
            t, ok = 1.0, False
            base = float(np.linalg.norm(r))
            for _ in range(20):
                un = u + t * step
                if float(np.linalg.norm(fun(un))) < base:
                    u, ok = un, True
                    break
                t *= 0.5
            if not ok:
                return u, it
        return None

    # multi-start: the distance to the chart can have several critical
    # points and a grid point may sit exactly on a non-minimal one
    best: tuple[np.ndarray, int] | None = None
    for s in grid[:3]:
        got = descend(np.asarray(s, dtype=float))
        if got is None:
            continue
        if best is None or float(np.linalg.norm(fun(got[0]))) < float(
            np.linalg.norm(fun(best[0]))
        ):
            best = got
    if best is None:
        return None
    u, it = best
    return np.asarray([float(v) for v in chart.evaluate(tuple(u))]), it


def retract(tub: TubularNeighborhood, w: Sequence[float]) -> RetractResult:
    """Nearest-point retraction of w onto the stratum, gated by the tube radius.

    Raises NoConvergence when the orthogonality solve stalls and OutOfDomain
    when the retracted offset is not inside the tube (distance >= radius at
    the foot point).
    """
    wv = np.asarray([float(v) for v in w])
    geo = tub.stratum.geometry
    if isinstance(geo, ImplicitPatch):
        x0 = np.asarray(min(tub.cloud, key=lambda p: float(np.linalg.norm(np.asarray(p) - wv))))
        got = _retract_implicit(geo, wv, x0, tub.tol, tub.max_iter)
    else:
        got = _retract_param(geo, wv, tub.tol, tub.max_iter)
    if got is None:
        raise NoConvergence(f"retraction did not converge for w={tuple(wv)}")
    pt, iters = got
    point = tuple(float(v) for v in pt)
    if not membership(tub.stratum, point, tol=1e-6).member:
        raise NoConvergence(
            f"retraction landed off the stratum at {tuple(round(v, 6) for v in point)}"
        )
    dist = float(np.linalg.norm(wv - pt))
    r = tub.radius_at(point)
    if dist >= r:
        raise OutOfDomain(f"offset {dist:.6g} is not inside the tube (radius {r:.6g})")
    return RetractResult(point, dist, iters)


# ---------------------------------------------------------------------------
# radius estimation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProbeRecord:
    base: tuple[float, ...]
    direction: tuple[float, ...]
    reach: float


@dataclass(frozen=True)
class RadiusEstimate:
    radius: Expr
    family: str
    probes: tuple[ProbeRecord, ...]
    verified: int
    worst_ratio: float  # max over probes of radius(x)/reach(x); must stay < 1


def _returns_home(
    stratum: Stratum,
    cloud: tuple[tuple[float, ...], ...],
    x: np.ndarray,
    w: np.ndarray,
    t: float,
) -> bool:
    geo = stratum.geometry
    if isinstance(geo, ImplicitPatch):
        # start at the cloud point nearest to w, not at the base: the
        # orthogonality system is also satisfied at far critical points,
        # and the probe must find the global nearest point to be honest
        starts = cloud if cloud else (tuple(float(v) for v in x),)
        x0 = np.asarray(min(starts, key=lambda p: float(np.linalg.norm(np.asarray(p) - w))))
        got = _retract_implicit(geo, w, x0, 1e-10, 50)
    else:
        got = _retract_param(geo, w, 1e-10, 50)
    if got is None:
        return False
    pt = got[0]
    if not membership(stratum, tuple(float(v) for v in pt), tol=1e-6).member:
        return False
    # the foot must be the base point itself, up to curvature-induced slide
    return float(np.linalg.norm(pt - x)) <= 0.25 * t + 1e-9


def estimate_radius(
    stratum: Stratum,
    rng: np.random.Generator,
    budget: int = 12,
    cloud: tuple[tuple[float, ...], ...] | None = None,
    max_reach: float = 4.0,
) -> RadiusEstimate:
    """Probe-and-certify a radius expression for the stratum's tube.

    Per-point reach is bracketed by doubling/halving normal probes; the
    candidate family (constant, then inverse powers of 1+|x|^2) is scaled
    to 0.9 of the worst probe and re-verified against every probe.
    """
    if cloud is None:
        cloud = tuple(stratum_samples(stratum, max(budget, 8), rng))
    if not cloud:
        raise CertificationFailure(f"no samples available on stratum {stratum.id}")
    bases = cloud[: max(4, budget)]
    records: list[ProbeRecord] = []
    for base in bases:
        x = np.asarray(base)
        nsp = normal_space(stratum, base)
        if nsp.dim == 0:
            records.append(ProbeRecord(base, (0.0,) * len(base), max_reach))
            continue
        dirs = [nsp.basis[:, i] for i in range(nsp.dim)]
        dirs += [-d for d in dirs]
        for d in dirs:
            t = 0.05
            good = 0.0
            while t <= max_reach and _returns_home(stratum, cloud, x, x + t * d, t):
                good = t
                t *= 2.0
            if good == 0.0:
                # even the smallest probe failed; bisect downward
                t = 0.025
                for _ in range(6):
                    if _returns_home(stratum, cloud, x, x + t * d, t):
                        good = t
                        break
                    t /= 2.0
            if good > 0.0:
                lo, hi = good, min(good * 2.0, max_reach * 1.01)
                for _ in range(10):
                    mid = 0.5 * (lo + hi)
                    if _returns_home(stratum, cloud, x, x + mid * d, mid):
                        lo = mid
                    else:
                        hi = mid
                records.append(ProbeRecord(base, tuple(float(v) for v in d), lo))
    if not records:
        raise CertificationFailure("no probe produced a positive reach")

    m = stratum.ambient_dim
    reach_min = min(r.reach for r in records)
    candidates: list[tuple[str, Expr]] = [
        ("constant", const(0.9 * reach_min))
    ]
    base_expr = add(1, norm_squared(m))
    for d in (1, 2):
        scale = 0.9 * min(
            r.reach * float(base_expr.evaluate(r.base)) ** d for r in records
        )
        candidates.append((f"inverse_power_{d}", mul(scale, recip(power(base_expr, d)))))

    failures = []
    for name, expr in candidates:
        ok = True
        worst = 0.0
        verified = 0
        for r in records:
            rx = float(expr.evaluate(r.base))
            if rx <= 0 or rx >= r.reach:
                ok = False
                failures.append(f"{name}: radius {rx:.3g} vs probed reach {r.reach:.3g}")
                break
            x = np.asarray(r.base)
            d = np.asarray(r.direction)
            if np.any(d != 0.0) and not _returns_home(stratum, cloud, x, x + rx * d, rx):
                ok = False
                failures.append(f"{name}: probe at radius {rx:.3g} failed at {r.base}")
                break
            worst = max(worst, rx / r.reach)
            verified += 1
        if ok:
            return RadiusEstimate(expr, name, tuple(records), verified, worst)
    raise CertificationFailure(
        "no radius candidate certifies; attempts: " + "; ".join(failures[:4])
    )
