"""Subspace arithmetic: spans, containment, limits, and dual-route ranks.

Floating-point work is SVD-based throughout (rank decisions use a relative
threshold, default 1e-8).  For polynomial data at rational points the exact
Fraction routes (exact_rank / exact_kernel) give tolerance-free answers; the
two routes are deliberately kept separate and cross-checked in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import AmbientMismatch, DimMismatch, NoConvergence, ZeroVector

DEFAULT_RANK_TOL = 1e-8
ORTHONORMALITY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class LinearSubspace:
    """Linear subspace of R^n held as an orthonormal column basis.

    The zero subspace is an (n, 0) basis and is a first-class citizen: it is
    contained in everything and deviates from nothing.
    """

    ambient_dim: int
    basis: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float)
        if b.ndim != 2 or b.shape[0] != self.ambient_dim:
            raise ValueError(f"basis shape {b.shape} does not match ambient {self.ambient_dim}")
        if b.shape[1]:
            g = b.T @ b
            if not np.allclose(g, np.eye(b.shape[1]), atol=ORTHONORMALITY_TOL):
                raise ValueError("basis columns are not orthonormal to 1e-10")
        object.__setattr__(self, "basis", b)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @staticmethod
    def zero(ambient_dim: int) -> LinearSubspace:
        return LinearSubspace(ambient_dim, np.zeros((ambient_dim, 0)))

    @staticmethod
    def full(ambient_dim: int) -> LinearSubspace:
        return LinearSubspace(ambient_dim, np.eye(ambient_dim))

    @staticmethod
    def from_spanning(
        vectors: Sequence[Sequence[float]] | np.ndarray,
        ambient_dim: int | None = None,
        rank_tol: float = DEFAULT_RANK_TOL,
    ) -> LinearSubspace:
        """Span of the given vectors (rows), orthonormalized by SVD."""
        a = np.asarray(vectors, dtype=float)
        if a.size == 0:
            if ambient_dim is None:
                raise ValueError("need ambient_dim for an empty spanning set")
            return LinearSubspace.zero(ambient_dim)
        if a.ndim == 1:
            a = a[None, :]
        n = a.shape[1]
        if ambient_dim is not None and ambient_dim != n:
            raise AmbientMismatch(f"vectors live in R^{n}, expected R^{ambient_dim}")
        q, _ = orthonormal_columns(a.T, rank_tol)
        return LinearSubspace(n, q)

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def contains(self, v: Sequence[float], tol: float = DEFAULT_RANK_TOL) -> "ContainsResult":
        w = np.asarray(v, dtype=float)
        if w.shape != (self.ambient_dim,):
            raise AmbientMismatch(f"vector of dim {w.shape} vs ambient {self.ambient_dim}")
        nv = np.linalg.norm(w)
        if nv == 0.0:
            raise ZeroVector("containment of the zero vector is ill-posed")
        res = float(np.linalg.norm(w - self.basis @ (self.basis.T @ w)) / nv)
        return ContainsResult(res <= tol, res)


@dataclass(frozen=True)
class ContainsResult:
    contained: bool
    residual: float


def orthonormal_columns(a: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL) -> tuple[np.ndarray, float]:
    """Rank-revealing orthonormalization of the columns of `a`.

    Returns (Q, smallest retained singular value); columns with singular
    value <= rank_tol * sigma_max are dropped.
    """
    a = np.asarray(a, dtype=float)
    if a.size == 0 or not a.shape[1]:
        return np.zeros((a.shape[0], 0)), math.inf
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((a.shape[0], 0)), math.inf
    keep = s > rank_tol * s[0]
    r = int(np.count_nonzero(keep))
    if r == 0:
        return np.zeros((a.shape[0], 0)), math.inf
    return u[:, :r], float(s[r - 1])


@dataclass(frozen=True)
class SpanSumResult:
    space: LinearSubspace
    smallest_retained_sv: float


def span_sum(a: LinearSubspace, b: LinearSubspace, rank_tol: float = DEFAULT_RANK_TOL) -> SpanSumResult:
    if a.ambient_dim != b.ambient_dim:
        raise AmbientMismatch(f"ambient {a.ambient_dim} vs {b.ambient_dim}")
    cols = np.hstack([a.basis, b.basis])
    q, smallest = orthonormal_columns(cols, rank_tol)
    return SpanSumResult(LinearSubspace(a.ambient_dim, q), smallest)


def orthogonal_complement(s: LinearSubspace) -> LinearSubspace:
    n, d = s.ambient_dim, s.dim
    if d == 0:
        return LinearSubspace.full(n)
    u, _, _ = np.linalg.svd(s.basis, full_matrices=True)
    return LinearSubspace(n, u[:, d:])


def intersection(
    a: LinearSubspace, b: LinearSubspace, rank_tol: float = DEFAULT_RANK_TOL
) -> LinearSubspace:
    """A cap B as the joint kernel of the two rejection operators."""
    if a.ambient_dim != b.ambient_dim:
        raise AmbientMismatch(f"ambient {a.ambient_dim} vs {b.ambient_dim}")
    n = a.ambient_dim
    eye = np.eye(n)
    stacked = np.vstack([eye - a.projector(), eye - b.projector()])
    u, s, vh = np.linalg.svd(stacked)
    smax = s[0] if s.size else 0.0
    rank = int(np.count_nonzero(s > rank_tol * smax)) if smax > 0 else 0
    return LinearSubspace(n, vh[rank:].T)


def asym_deviation(y: LinearSubspace, t: LinearSubspace) -> float:
    """How far Y sticks out of T: max over unit u in Y of dist(u, T), in [0, 1].

    Zero iff Y is contained in T; this is the asymmetric quantity Whitney (a)
    regularity is stated with (largest singular value of (I - P_T) restricted
    to Y).
    """
    if y.ambient_dim != t.ambient_dim:
        raise AmbientMismatch(f"ambient {y.ambient_dim} vs {t.ambient_dim}")
    if y.dim == 0:
        return 0.0
    rejected = y.basis - t.basis @ (t.basis.T @ y.basis)
    s = np.linalg.svd(rejected, compute_uv=False)
    return float(min(1.0, s[0]))


def gap_distance(a: LinearSubspace, b: LinearSubspace) -> float:
    """Projector gap ||P_A - P_B||_2; a metric on the full Grassmannian."""
    if a.ambient_dim != b.ambient_dim:
        raise AmbientMismatch(f"ambient {a.ambient_dim} vs {b.ambient_dim}")
    s = np.linalg.svd(a.projector() - b.projector(), compute_uv=False)
    return float(s[0]) if s.size else 0.0


def principal_angles(a: LinearSubspace, b: LinearSubspace) -> np.ndarray:
    if a.ambient_dim != b.ambient_dim:
        raise AmbientMismatch(f"ambient {a.ambient_dim} vs {b.ambient_dim}")
    if a.dim == 0 or b.dim == 0:
        return np.zeros(0)
    s = np.linalg.svd(a.basis.T @ b.basis, compute_uv=False)
    return np.arccos(np.clip(s, -1.0, 1.0))


@dataclass(frozen=True)
class SequenceLimit:
    converged: bool
    limit: LinearSubspace | None
    oscillation: float
    tail_gaps: tuple[float, ...]


def sequence_limit(
    items: Sequence[LinearSubspace],
    tol: float = 1e-4,
    tail: int = 4,
) -> SequenceLimit:
    """Cauchy test on the last `tail` items in the projector-gap metric.

    Converged sequences report the final item as the limit (plain last-item
    selection, no extrapolation); divergent ones report the oscillation
    magnitude instead.
    """
    if not items:
        raise DimMismatch("empty subspace sequence")
    n = items[0].ambient_dim
    d = items[0].dim
    for s in items:
        if s.ambient_dim != n:
            raise AmbientMismatch("sequence mixes ambient dimensions")
        if s.dim != d:
            raise DimMismatch(f"sequence mixes dims {d} and {s.dim}")
    window = list(items[-max(2, tail):])
    gaps = tuple(
        gap_distance(window[i], window[j])
        for i in range(len(window))
        for j in range(i + 1, len(window))
    )
    osc = max(gaps) if gaps else 0.0
    if osc < tol:
        return SequenceLimit(True, items[-1], osc, gaps)
    return SequenceLimit(False, None, osc, gaps)


# ---------------------------------------------------------------------------
# exact Fraction routes
# ---------------------------------------------------------------------------


def exact_rank(rows: Sequence[Sequence[Fraction]]) -> int:
    """Rank over Q by Gaussian elimination; no tolerances involved."""
    m = [list(map(Fraction, r)) for r in rows]
    if not m:
        return 0
    rank = 0
    cols = len(m[0])
    row = 0
    for col in range(cols):
        piv = next((r for r in range(row, len(m)) if m[r][col] != 0), None)
        if piv is None:
            continue
        m[row], m[piv] = m[piv], m[row]
        inv = Fraction(1) / m[row][col]
        m[row] = [v * inv for v in m[row]]
        for r in range(len(m)):
            if r != row and m[r][col] != 0:
                f = m[r][col]
                m[r] = [a - f * b for a, b in zip(m[r], m[row])]
        rank += 1
        row += 1
        if row == len(m):
            break
    return rank


def exact_kernel(rows: Sequence[Sequence[Fraction]], width: int) -> list[list[Fraction]]:
    """Basis of the kernel of the given matrix over Q (vectors of length `width`)."""
    m = [list(map(Fraction, r)) for r in rows]
    pivots: list[int] = []
    row = 0
    for col in range(width):
        piv = next((r for r in range(row, len(m)) if m[r][col] != 0), None)
        if piv is None:
            continue
        m[row], m[piv] = m[piv], m[row]
        inv = Fraction(1) / m[row][col]
        m[row] = [v * inv for v in m[row]]
        for r in range(len(m)):
            if r != row and m[r][col] != 0:
                f = m[r][col]
                m[r] = [a - f * b for a, b in zip(m[r], m[row])]
        pivots.append(col)
        row += 1
        if row == len(m):
            break
    free = [c for c in range(width) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * width
        v[fc] = Fraction(1)
        for r, pc in enumerate(pivots):
            v[pc] = -m[r][fc]
        basis.append(v)
    return basis


# ---------------------------------------------------------------------------
# damped Gauss-Newton (shared by retraction, membership projection, probes)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussNewtonResult:
    x: np.ndarray
    residual_norm: float
    converged: bool
    iterations: int


def gauss_newton(
    fun: Callable[[np.ndarray], np.ndarray],
    jac: Callable[[np.ndarray], np.ndarray],
    x0: Sequence[float],
    tol: float = 1e-10,
    max_iter: int = 50,
    raise_on_failure: bool = False,
) -> GaussNewtonResult:
    """Least-squares Newton with backtracking halving line search."""
    x = np.asarray(x0, dtype=float).copy()
    r = np.asarray(fun(x), dtype=float)
    rnorm = float(np.linalg.norm(r))
    for it in range(1, max_iter + 1):
        if rnorm <= tol:
            return GaussNewtonResult(x, rnorm, True, it - 1)
        j = np.asarray(jac(x), dtype=float)
        step, *_ = np.linalg.lstsq(j, -r, rcond=None)
        if not np.all(np.isfinite(step)):
            break
        t = 1.0
        improved = False
        for _ in range(25):
            xn = x + t * step
            rn = np.asarray(fun(xn), dtype=float)
            rn_norm = float(np.linalg.norm(rn))
            if rn_norm < rnorm:
                x, r, rnorm = xn, rn, rn_norm
                improved = True
                break
            t *= 0.5
        if not improved:
            break
    if rnorm <= tol:
        return GaussNewtonResult(x, rnorm, True, max_iter)
    if raise_on_failure:
        raise NoConvergence(f"Gauss-Newton stalled at residual {rnorm:.3g}")
    return GaussNewtonResult(x, rnorm, False, max_iter)
