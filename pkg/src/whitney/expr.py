"""Closed expression language for definable smooth maps.

Expressions are immutable trees over a fixed node alphabet: rational/float
constants, coordinates, sums, products, integer powers, exp, guarded sqrt,
guarded reciprocal, a one-sided exponential kernel (``Glue``), and bump
functions built from it.  The language is closed under symbolic partial
differentiation, which is how every derivative in this package is computed;
finite differences appear only in tests as an independent oracle.

Arithmetic is dual-mode: polynomial-only expressions with Fraction constants
evaluated at rational points produce exact Fractions, anything touching exp,
sqrt, recip or bump falls through to binary64.  Guarded nodes raise
GuardViolation when their argument is not strictly positive at the
evaluation point; positivity on a declared region is certified separately by
sampling (certify_guards), never assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cache
from itertools import product as _cartesian
from math import comb
from typing import Callable, Iterable, Sequence, Union

from .errors import (
    BadRadii,
    CertificationFailure,
    GuardViolation,
    NotCm,
    ProblemFormatError,
)

Number = Union[int, Fraction, float]


def as_number(v: Number | str) -> Number:
    """Normalize a scalar: ints and p/q strings become Fractions, floats stay."""
    if isinstance(v, bool):
        raise TypeError("bool is not a number here")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, Fraction):
        return v
    if isinstance(v, float):
        return v
    if isinstance(v, str):
        return Fraction(v)
    raise TypeError(f"not a number: {v!r}")


def number_to_json(v: Number) -> int | float | str:
    """Exact JSON encoding: Fractions become ints or 'p/q' strings."""
    if isinstance(v, Fraction):
        if v.denominator == 1:
            return int(v)
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, int):
        return v
    return float(v)


def number_from_json(v) -> Number:
    if isinstance(v, bool):
        raise ProblemFormatError(f"expected a number, got {v!r}")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, float):
        return v
    if isinstance(v, str):
        try:
            return Fraction(v)
        except (ValueError, ZeroDivisionError) as e:
            raise ProblemFormatError(f"bad rational literal {v!r}") from e
    raise ProblemFormatError(f"expected a number, got {v!r}")


def is_rational(v) -> bool:
    return isinstance(v, (int, Fraction)) and not isinstance(v, bool)


def rational_point(x: Sequence[Number]) -> bool:
    return all(is_rational(c) for c in x)


# ---------------------------------------------------------------------------
# multi-indices in graded lexicographic order
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MultiIndex:
    """Multi-index alpha in N^m, ordered graded-lexicographically.

    Rank 0 is the zero index; within a degree block, larger leading entries
    come first, so for m=2 the order starts (0,0), (1,0), (0,1), (2,0),
    (1,1), (0,2).
    """

    entries: tuple[int, ...]

    def __post_init__(self):
        if not self.entries or any(e < 0 for e in self.entries):
            raise ValueError(f"bad multi-index {self.entries}")

    @property
    def m(self) -> int:
        return len(self.entries)

    @property
    def order(self) -> int:
        return sum(self.entries)

    def factorial(self) -> int:
        out = 1
        for e in self.entries:
            out *= math.factorial(e)
        return out

    def rank(self) -> int:
        d = self.order
        m = self.m
        base = comb(m + d - 1, m)  # count of indices of order < d
        return base + _block_position(self.entries, d)

    @staticmethod
    def unrank(m: int, rank: int) -> MultiIndex:
        if m < 1 or rank < 0:
            raise ValueError("need m >= 1 and rank >= 0")
        d = 0
        while comb(m + d, m) <= rank:
            d += 1
        pos = rank - comb(m + d - 1, m)
        return MultiIndex(_block_unrank(m, d, pos))

    @staticmethod
    def all_up_to(m: int, k: int, include_zero: bool = False) -> tuple[MultiIndex, ...]:
        """All indices with |alpha| <= k (optionally including 0), grlex order."""
        out = []
        for d in range(0 if include_zero else 1, k + 1):
            out.extend(MultiIndex(e) for e in _degree_block(m, d))
        return tuple(out)

    def monomial_value(self, x: Sequence[Number]) -> Number:
        out: Number = 1
        for xi, e in zip(x, self.entries):
            if e:
                out = out * xi**e
        return out

    def var_sequence(self) -> tuple[int, ...]:
        """Variables to differentiate by, one entry per derivative order."""
        seq: list[int] = []
        for i, e in enumerate(self.entries):
            seq.extend([i] * e)
        return tuple(seq)


def _degree_block(m: int, d: int) -> list[tuple[int, ...]]:
    if m == 1:
        return [(d,)]
    out = []
    for lead in range(d, -1, -1):
        out.extend((lead,) + rest for rest in _degree_block(m - 1, d - lead))
    return out


def _block_position(entries: tuple[int, ...], d: int) -> int:
    m = len(entries)
    if m == 1:
        return 0
    lead = entries[0]
    # blocks with larger leading entry come first
    ahead = sum(comb(d - v + m - 2, m - 2) for v in range(d, lead, -1))
    return ahead + _block_position(entries[1:], d - lead)


def _block_unrank(m: int, d: int, pos: int) -> tuple[int, ...]:
    if m == 1:
        return (d,)
    for lead in range(d, -1, -1):
        count = comb(d - lead + m - 2, m - 2)
        if pos < count:
            return (lead,) + _block_unrank(m - 1, d - lead, pos)
        pos -= count
    raise ValueError("position out of range")


def jet_dimension(m: int, k: int) -> int:
    """Number of multi-indices with 1 <= |alpha| <= k."""
    return comb(m + k, m) - 1


# ---------------------------------------------------------------------------
# regions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Region:
    """Axis-aligned box, optionally marked open-ended per axis.

    Open-ended axes carry a finite horizon for sampling; stress grids double
    the horizon so decay requirements cannot be faked by a short box.
    """

    lo: tuple[Number, ...]
    hi: tuple[Number, ...]
    unbounded_lo: tuple[bool, ...] = ()
    unbounded_hi: tuple[bool, ...] = ()

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise ValueError("lo/hi length mismatch")
        if any(float(a) >= float(b) for a, b in zip(self.lo, self.hi)):
            raise ValueError("need lo < hi per axis")
        if not self.unbounded_lo:
            object.__setattr__(self, "unbounded_lo", (False,) * len(self.lo))
        if not self.unbounded_hi:
            object.__setattr__(self, "unbounded_hi", (False,) * len(self.lo))

    @property
    def dim(self) -> int:
        return len(self.lo)

    def contains(self, x: Sequence[Number], margin: float = 0.0) -> bool:
        return all(
            float(a) - margin <= float(c) <= float(b) + margin
            for a, b, c in zip(self.lo, self.hi, x)
        )

    def grid(self, per_axis: int) -> list[tuple[float, ...]]:
        axes = []
        for a, b in zip(self.lo, self.hi):
            a, b = float(a), float(b)
            if per_axis == 1:
                axes.append([(a + b) / 2])
            else:
                step = (b - a) / (per_axis - 1)
                axes.append([a + i * step for i in range(per_axis)])
        return [tuple(p) for p in _cartesian(*axes)]

    def stress(self) -> Region:
        """Same box with doubled span on any open-ended axis."""
        lo, hi = list(self.lo), list(self.hi)
        for i in range(self.dim):
            span = float(hi[i]) - float(lo[i])
            if self.unbounded_hi[i]:
                hi[i] = float(hi[i]) + span
            if self.unbounded_lo[i]:
                lo[i] = float(lo[i]) - span
        return Region(tuple(lo), tuple(hi), self.unbounded_lo, self.unbounded_hi)

    def sample(self, rng, count: int) -> list[tuple[float, ...]]:
        lo = [float(a) for a in self.lo]
        hi = [float(b) for b in self.hi]
        return [
            tuple(rng.uniform(a, b) for a, b in zip(lo, hi)) for _ in range(count)
        ]

    def to_dict(self) -> dict:
        d = {
            "lo": [number_to_json(v) for v in self.lo],
            "hi": [number_to_json(v) for v in self.hi],
        }
        if any(self.unbounded_lo):
            d["unbounded_lo"] = list(self.unbounded_lo)
        if any(self.unbounded_hi):
            d["unbounded_hi"] = list(self.unbounded_hi)
        return d

    @staticmethod
    def from_dict(d: dict) -> Region:
        lo = tuple(number_from_json(v) for v in d["lo"])
        hi = tuple(number_from_json(v) for v in d["hi"])
        ulo = tuple(d.get("unbounded_lo", [False] * len(lo)))
        uhi = tuple(d.get("unbounded_hi", [False] * len(lo)))
        return Region(lo, hi, ulo, uhi)


# ---------------------------------------------------------------------------
# expression nodes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Expr:
    """Base node. Subclasses are immutable and hashable."""

    def evaluate(self, x: Sequence[Number]) -> Number:
        raise NotImplementedError

    def diff(self, var: int) -> Expr:
        return _diff(self, var)

    def partial(self, alpha: MultiIndex | Sequence[int], x: Sequence[Number]) -> Number:
        if not isinstance(alpha, MultiIndex):
            alpha = MultiIndex(tuple(alpha))
        e: Expr = self
        for v in alpha.var_sequence():
            e = _diff(e, v)
        return e.evaluate(x)

    # arithmetic sugar for fixture building
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return add(self, mul(-1, other))

    def __rsub__(self, other):
        return add(other, mul(-1, self))

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __pow__(self, k: int):
        return power(self, k)

    def __neg__(self):
        return mul(-1, self)

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Const(Expr):
    value: Number

    def evaluate(self, x):
        return self.value

    def to_dict(self):
        return {"op": "const", "value": number_to_json(self.value)}


@dataclass(frozen=True)
class Coord(Expr):
    index: int

    def evaluate(self, x):
        if self.index >= len(x):
            raise ProblemFormatError(
                f"coordinate {self.index} out of range for point of dim {len(x)}"
            )
        v = x[self.index]
        return Fraction(v) if isinstance(v, int) else v

    def to_dict(self):
        return {"op": "coord", "index": self.index}


@dataclass(frozen=True)
class Sum(Expr):
    terms: tuple[Expr, ...]

    def evaluate(self, x):
        out: Number = 0
        for t in self.terms:
            out = out + t.evaluate(x)
        return out

    def to_dict(self):
        return {"op": "add", "args": [t.to_dict() for t in self.terms]}


@dataclass(frozen=True)
class Product(Expr):
    factors: tuple[Expr, ...]

    def evaluate(self, x):
        out: Number = 1
        for f in self.factors:
            out = out * f.evaluate(x)
        return out

    def to_dict(self):
        return {"op": "mul", "args": [f.to_dict() for f in self.factors]}


@dataclass(frozen=True)
class Power(Expr):
    base: Expr
    exponent: int

    def __post_init__(self):
        if self.exponent < 0:
            raise ValueError("power exponent must be >= 0; use recip for negatives")

    def evaluate(self, x):
        return self.base.evaluate(x) ** self.exponent

    def to_dict(self):
        return {"op": "pow", "base": self.base.to_dict(), "exponent": self.exponent}


@dataclass(frozen=True)
class Exp(Expr):
    arg: Expr

    def evaluate(self, x):
        return math.exp(float(self.arg.evaluate(x)))

    def to_dict(self):
        return {"op": "exp", "arg": self.arg.to_dict()}


@dataclass(frozen=True)
class Sqrt(Expr):
    """Square root, guarded: argument must be strictly positive."""

    arg: Expr
    region: Region | None = None

    def evaluate(self, x):
        v = self.arg.evaluate(x)
        if v <= 0:
            raise GuardViolation(f"sqrt argument {float(v):.6g} <= 0 at x={tuple(x)}")
        return math.sqrt(float(v))

    def to_dict(self):
        d = {"op": "sqrt", "arg": self.arg.to_dict()}
        if self.region is not None:
            d["region"] = self.region.to_dict()
        return d


@dataclass(frozen=True)
class Recip(Expr):
    """Reciprocal, guarded: argument must be strictly positive."""

    arg: Expr
    region: Region | None = None

    def evaluate(self, x):
        v = self.arg.evaluate(x)
        if v <= 0:
            raise GuardViolation(f"recip argument {float(v):.6g} <= 0 at x={tuple(x)}")
        if isinstance(v, Fraction):
            return Fraction(1) / v
        return 1.0 / v

    def to_dict(self):
        d = {"op": "recip", "arg": self.arg.to_dict()}
        if self.region is not None:
            d["region"] = self.region.to_dict()
        return d


@dataclass(frozen=True)
class Glue(Expr):
    """One-sided exponential kernel R(1/t) * exp(-1/t) for t > 0, else 0.

    R is a polynomial with rational coefficients (low order first).  The
    family is closed under differentiation, which is what lets bumps live
    inside the language: d/dt [R(1/t) e^(-1/t)] = Q(1/t) e^(-1/t) with
    Q(u) = u^2 (R(u) - R'(u)).
    """

    arg: Expr
    coeffs: tuple[Fraction, ...] = (Fraction(1),)

    def evaluate(self, x):
        v = self.arg.evaluate(x)
        if v <= 0:
            return 0.0
        u = 1.0 / float(v)
        r = 0.0
        for c in reversed(self.coeffs):
            r = r * u + float(c)
        return r * math.exp(-u)

    def to_dict(self):
        return {
            "op": "glue",
            "arg": self.arg.to_dict(),
            "coeffs": [number_to_json(c) for c in self.coeffs],
        }


@dataclass(frozen=True)
class Bump(Expr):
    """Smooth bump: 1 on the closed ball B(center, r_in), 0 outside B(center, r_out).

    Evaluation and differentiation both go through the composite body built
    from Glue kernels, so plateau values and plateau derivatives come out
    exactly 1.0 / 0.0 in binary64.
    """

    center: tuple[Number, ...]
    r_in: Number
    r_out: Number

    def __post_init__(self):
        if not (0 < float(self.r_in) < float(self.r_out)):
            raise BadRadii(f"need 0 < r_in < r_out, got {self.r_in}, {self.r_out}")

    def body(self) -> Expr:
        return _bump_body(self)

    def evaluate(self, x):
        # direct form of body(): the recip-multiply in the ratio can round
        # plateau values to 1 - ulp, so divide directly and short-circuit
        # the flats; derivatives keep going through the symbolic body
        rin2 = float(self.r_in) ** 2
        rout2 = float(self.r_out) ** 2
        u = 0.0
        for xi, ci in zip(x, self.center):
            d = float(xi) - float(ci)
            u += d * d
        t = (rout2 - u) / (rout2 - rin2)
        if t >= 1.0:
            return 1.0
        if t <= 0.0:
            return 0.0
        g_up = math.exp(-1.0 / t)
        g_down = math.exp(-1.0 / (1.0 - t))
        return g_up / (g_up + g_down)

    def to_dict(self):
        return {
            "op": "bump",
            "center": [number_to_json(c) for c in self.center],
            "r_in": number_to_json(self.r_in),
            "r_out": number_to_json(self.r_out),
        }


# ---------------------------------------------------------------------------
# smart constructors (constant folding only, no other simplification)
# ---------------------------------------------------------------------------


def _wrap(v) -> Expr:
    if isinstance(v, Expr):
        return v
    return Const(as_number(v))


def const(v) -> Const:
    return Const(as_number(v))


def coord(i: int) -> Coord:
    return Coord(i)


def add(*terms) -> Expr:
    flat: list[Expr] = []
    const_acc: Number = 0
    for t in terms:
        t = _wrap(t)
        if isinstance(t, Sum):
            parts: Iterable[Expr] = t.terms
        else:
            parts = (t,)
        for p in parts:
            if isinstance(p, Const):
                const_acc = const_acc + p.value
            else:
                flat.append(p)
    if const_acc != 0 or not flat:
        flat.append(Const(const_acc if const_acc != 0 else as_number(0)))
    if len(flat) == 1:
        return flat[0]
    return Sum(tuple(flat))


def mul(*factors) -> Expr:
    flat: list[Expr] = []
    const_acc: Number = 1
    for f in factors:
        f = _wrap(f)
        if isinstance(f, Product):
            parts: Iterable[Expr] = f.factors
        else:
            parts = (f,)
        for p in parts:
            if isinstance(p, Const):
                const_acc = const_acc * p.value
            else:
                flat.append(p)
    if const_acc == 0:
        return Const(as_number(0))
    if const_acc != 1 or not flat:
        flat.insert(0, Const(const_acc))
    if len(flat) == 1:
        return flat[0]
    return Product(tuple(flat))


def power(base, k: int) -> Expr:
    base = _wrap(base)
    if k < 0:
        raise ValueError("power exponent must be >= 0; use recip for negatives")
    if k == 0:
        return Const(as_number(1))
    if k == 1:
        return base
    if isinstance(base, Const):
        return Const(base.value**k)
    if isinstance(base, Power):
        return Power(base.base, base.exponent * k)
    return Power(base, k)


def exp(arg) -> Expr:
    arg = _wrap(arg)
    if isinstance(arg, Const) and arg.value == 0:
        return Const(as_number(1))
    return Exp(arg)


def sqrt(arg, region: Region | None = None) -> Expr:
    return Sqrt(_wrap(arg), region)


def recip(arg, region: Region | None = None) -> Expr:
    arg = _wrap(arg)
    if isinstance(arg, Const):
        v = arg.value
        if v <= 0:
            raise GuardViolation(f"recip of non-positive constant {v}")
        if isinstance(v, Fraction):
            return Const(Fraction(1) / v)
        return Const(1.0 / v)
    return Recip(arg, region)


def glue(arg, coeffs: Sequence[Number] = (1,)) -> Glue:
    return Glue(_wrap(arg), tuple(Fraction(c) for c in coeffs))


def bump(center: Sequence[Number], r_in, r_out) -> Bump:
    return Bump(
        tuple(as_number(c) for c in center), as_number(r_in), as_number(r_out)
    )


def norm_squared(m: int, center: Sequence[Number] | None = None) -> Expr:
    terms = []
    for i in range(m):
        if center is None or center[i] == 0:
            terms.append(power(coord(i), 2))
        else:
            terms.append(power(add(coord(i), -as_number(center[i])), 2))
    return add(*terms)


def poly_from_coeffs(coeffs: Sequence[Number], var: int = 0) -> Expr:
    """Univariate polynomial sum_j coeffs[j] * x_var^j."""
    return add(*(mul(c, power(coord(var), j)) for j, c in enumerate(coeffs)))


def smoothstep_rising(var_expr: Expr, a: Number, b: Number) -> Expr:
    """Smooth monotone step: 0 for t <= a, 1 for t >= b (a < b), in-language."""
    a, b = as_number(a), as_number(b)
    width = b - a
    if float(width) <= 0:
        raise BadRadii("smoothstep needs a < b")
    t = mul(add(var_expr, -a), Const(_inv(width)))
    g_up = Glue(t)
    g_down = Glue(add(1, mul(-1, t)))
    # denominator is strictly positive for every t, so the guard never fires
    return mul(g_up, Recip(add(g_up, g_down)))


def _inv(v: Number) -> Number:
    if isinstance(v, Fraction):
        return Fraction(1) / v
    return 1.0 / v


def _bump_parts(b: Bump) -> tuple[Expr, Expr, Expr]:
    rin2 = b.r_in * b.r_in
    rout2 = b.r_out * b.r_out
    u = norm_squared(len(b.center), b.center)
    # t = (r_out^2 - |x-c|^2) / (r_out^2 - r_in^2): >=1 inside, <=0 outside
    t = mul(add(rout2, mul(-1, u)), Const(_inv(rout2 - rin2)))
    return t, Glue(t), Glue(add(1, mul(-1, t)))


@cache
def _bump_body(b: Bump) -> Expr:
    _, g_up, g_down = _bump_parts(b)
    return mul(g_up, Recip(add(g_up, g_down)))


@cache
def _bump_diff(b: Bump, var: int) -> Expr:
    # combined quotient rule: d bump = t' [G'(t) g_down + g_up G'(1-t)] / S^2
    # with S = g_up + g_down.  In this shape every additive term keeps a
    # glue factor that is exactly 0.0 on the plateau and outside the outer
    # ball, and differentiating again preserves that property, so plateau
    # derivatives of all orders evaluate to exactly 0.0.
    t, g_up, g_down = _bump_parts(b)
    q = _glue_diff_coeffs((Fraction(1),))
    core = add(
        mul(Glue(t, q), g_down),
        mul(g_up, Glue(add(1, mul(-1, t)), q)),
    )
    return mul(_diff(t, var), core, Power(Recip(add(g_up, g_down)), 2))


# ---------------------------------------------------------------------------
# symbolic differentiation
# ---------------------------------------------------------------------------


@cache
def _diff(e: Expr, var: int) -> Expr:
    if isinstance(e, Const):
        return Const(as_number(0))
    if isinstance(e, Coord):
        return Const(as_number(1 if e.index == var else 0))
    if isinstance(e, Sum):
        return add(*(_diff(t, var) for t in e.terms))
    if isinstance(e, Product):
        parts = []
        for i, f in enumerate(e.factors):
            df = _diff(f, var)
            rest = e.factors[:i] + e.factors[i + 1 :]
            parts.append(mul(df, *rest))
        return add(*parts)
    if isinstance(e, Power):
        return mul(e.exponent, power(e.base, e.exponent - 1), _diff(e.base, var))
    if isinstance(e, Exp):
        return mul(e, _diff(e.arg, var))
    if isinstance(e, Sqrt):
        # d sqrt(u) = u' / (2 sqrt(u)); the guard region carries over
        return mul(Fraction(1, 2), Recip(Sqrt(e.arg, e.region), e.region), _diff(e.arg, var))
    if isinstance(e, Recip):
        return mul(-1, Power(Recip(e.arg, e.region), 2), _diff(e.arg, var))
    if isinstance(e, Glue):
        return mul(Glue(e.arg, _glue_diff_coeffs(e.coeffs)), _diff(e.arg, var))
    if isinstance(e, Bump):
        return _bump_diff(e, var)
    raise TypeError(f"cannot differentiate {type(e).__name__}")


def _glue_diff_coeffs(coeffs: tuple[Fraction, ...]) -> tuple[Fraction, ...]:
    # R(u) -> Q(u) = u^2 (R(u) - R'(u)) with u = 1/t
    p = len(coeffs)
    rminus = [Fraction(0)] * p
    for j in range(p):
        rminus[j] += coeffs[j]
        if j + 1 < p:
            rminus[j] -= (j + 1) * coeffs[j + 1]
    out = [Fraction(0), Fraction(0)] + rminus
    while len(out) > 1 and out[-1] == 0:
        out.pop()
    return tuple(out)


# ---------------------------------------------------------------------------
# substitution / composition
# ---------------------------------------------------------------------------


@cache
def _substitute(e: Expr, subs: tuple[Expr, ...]) -> Expr:
    if isinstance(e, Const):
        return e
    if isinstance(e, Coord):
        if e.index >= len(subs):
            raise ProblemFormatError(
                f"substitution is {len(subs)}-dimensional, expression uses x_{e.index}"
            )
        return subs[e.index]
    if isinstance(e, Sum):
        return add(*(_substitute(t, subs) for t in e.terms))
    if isinstance(e, Product):
        return mul(*(_substitute(f, subs) for f in e.factors))
    if isinstance(e, Power):
        return power(_substitute(e.base, subs), e.exponent)
    if isinstance(e, Exp):
        return exp(_substitute(e.arg, subs))
    if isinstance(e, Sqrt):
        # region metadata describes the old coordinates; re-certify downstream
        return Sqrt(_substitute(e.arg, subs), None)
    if isinstance(e, Recip):
        return Recip(_substitute(e.arg, subs), None)
    if isinstance(e, Glue):
        return Glue(_substitute(e.arg, subs), e.coeffs)
    if isinstance(e, Bump):
        return _substitute(e.body(), subs)
    raise TypeError(f"cannot substitute into {type(e).__name__}")


def substitute(e: Expr, subs: Sequence[Expr]) -> Expr:
    return _substitute(e, tuple(subs))


# ---------------------------------------------------------------------------
# predicates
# ---------------------------------------------------------------------------


def is_polynomial(e: Expr) -> bool:
    if isinstance(e, (Const, Coord)):
        return True
    if isinstance(e, Sum):
        return all(is_polynomial(t) for t in e.terms)
    if isinstance(e, Product):
        return all(is_polynomial(f) for f in e.factors)
    if isinstance(e, Power):
        return is_polynomial(e.base)
    return False


def has_rational_constants(e: Expr) -> bool:
    if isinstance(e, Const):
        return is_rational(e.value)
    if isinstance(e, Coord):
        return True
    if isinstance(e, Sum):
        return all(has_rational_constants(t) for t in e.terms)
    if isinstance(e, Product):
        return all(has_rational_constants(f) for f in e.factors)
    if isinstance(e, Power):
        return has_rational_constants(e.base)
    return False


def is_exact(e: Expr) -> bool:
    """True when evaluation at rational points is exact (Fraction arithmetic)."""
    return is_polynomial(e) and has_rational_constants(e)


def guarded_nodes(e: Expr) -> list[Expr]:
    out: list[Expr] = []

    def walk(node: Expr):
        if isinstance(node, (Sqrt, Recip)):
            out.append(node)
            walk(node.arg)
        elif isinstance(node, Sum):
            for t in node.terms:
                walk(t)
        elif isinstance(node, Product):
            for f in node.factors:
                walk(f)
        elif isinstance(node, Power):
            walk(node.base)
        elif isinstance(node, (Exp, Glue)):
            walk(node.arg)
        elif isinstance(node, Bump):
            pass  # body denominators are positive by construction

    walk(e)
    return out


@dataclass(frozen=True)
class GuardCertificate:
    node_count: int
    worst_value: float
    points_checked: int


def certify_guards(e: Expr, region: Region, per_axis: int = 17, margin: float = 0.0) -> GuardCertificate:
    """Sample-check that every guarded argument is > margin on the region.

    This is a certificate by sampling, not a proof; the margin is reported so
    callers can judge how much slack the guards have.
    """
    nodes = guarded_nodes(e)
    if not nodes:
        return GuardCertificate(0, math.inf, 0)
    grid = region.grid(per_axis)
    worst = math.inf
    for node in nodes:
        target = node.region if node.region is not None else region
        pts = grid if target is region else target.grid(per_axis)
        for x in pts:
            try:
                v = float(node.arg.evaluate(x))
            except GuardViolation as exc:
                raise CertificationFailure(
                    f"nested guard failed while certifying at x={x}: {exc}"
                ) from exc
            worst = min(worst, v)
            if v <= margin:
                raise CertificationFailure(
                    f"guard argument {v:.6g} <= {margin} at x={x}"
                )
    return GuardCertificate(len(nodes), worst, len(grid))


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def expr_from_dict(d: dict) -> Expr:
    if not isinstance(d, dict) or "op" not in d:
        raise ProblemFormatError(f"expression node must be an object with 'op': {d!r}")
    op = d["op"]
    try:
        if op == "const":
            return Const(number_from_json(d["value"]))
        if op == "coord":
            return Coord(int(d["index"]))
        if op == "add":
            return add(*(expr_from_dict(a) for a in d["args"]))
        if op == "mul":
            return mul(*(expr_from_dict(a) for a in d["args"]))
        if op == "pow":
            return power(expr_from_dict(d["base"]), int(d["exponent"]))
        if op == "exp":
            return exp(expr_from_dict(d["arg"]))
        if op == "sqrt":
            reg = Region.from_dict(d["region"]) if "region" in d else None
            return Sqrt(expr_from_dict(d["arg"]), reg)
        if op == "recip":
            reg = Region.from_dict(d["region"]) if "region" in d else None
            return Recip(expr_from_dict(d["arg"]), reg)
        if op == "glue":
            return Glue(
                expr_from_dict(d["arg"]),
                tuple(Fraction(number_from_json(c)) for c in d["coeffs"]),
            )
        if op == "bump":
            return bump(
                [number_from_json(c) for c in d["center"]],
                number_from_json(d["r_in"]),
                number_from_json(d["r_out"]),
            )
    except (KeyError, TypeError, ValueError) as e:
        raise ProblemFormatError(f"malformed {op!r} node: {e}") from e
    raise ProblemFormatError(f"unknown expression op {op!r}")


# ---------------------------------------------------------------------------
# definable maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DefMap:
    """Definable smooth map given by one expression per output component."""

    domain_dim: int
    codomain_dim: int
    components: tuple[Expr, ...]
    region: Region | None = None

    def __post_init__(self):
        if len(self.components) != self.codomain_dim:
            raise ValueError("component count != codomain_dim")
        if self.region is not None and self.region.dim != self.domain_dim:
            raise ValueError("region dimension != domain_dim")

    def evaluate(self, x: Sequence[Number]) -> tuple[Number, ...]:
        if len(x) != self.domain_dim:
            raise ProblemFormatError(
                f"point has dim {len(x)}, map domain is {self.domain_dim}"
            )
        return tuple(c.evaluate(x) for c in self.components)

    def component_partial(self, i: int, alpha: MultiIndex) -> Expr:
        return _map_partial(self, i, alpha)

    def partial(self, alpha: MultiIndex | Sequence[int], x: Sequence[Number]) -> tuple[Number, ...]:
        if not isinstance(alpha, MultiIndex):
            alpha = MultiIndex(tuple(alpha))
        return tuple(
            self.component_partial(i, alpha).evaluate(x)
            for i in range(self.codomain_dim)
        )

    def jacobian(self, x: Sequence[Number]) -> list[list[Number]]:
        """Rows indexed by output component, columns by input coordinate."""
        rows = []
        for i in range(self.codomain_dim):
            row = []
            for j in range(self.domain_dim):
                alpha = MultiIndex(tuple(1 if t == j else 0 for t in range(self.domain_dim)))
                row.append(self.component_partial(i, alpha).evaluate(x))
            rows.append(row)
        return rows

    def is_exact(self) -> bool:
        return all(is_exact(c) for c in self.components)

    def to_dict(self) -> dict:
        d = {
            "domain_dim": self.domain_dim,
            "codomain_dim": self.codomain_dim,
            "components": [c.to_dict() for c in self.components],
        }
        if self.region is not None:
            d["region"] = self.region.to_dict()
        return d

    @staticmethod
    def from_dict(d: dict) -> DefMap:
        try:
            comps = tuple(expr_from_dict(c) for c in d["components"])
            reg = Region.from_dict(d["region"]) if "region" in d else None
            return DefMap(int(d["domain_dim"]), int(d["codomain_dim"]), comps, reg)
        except KeyError as e:
            raise ProblemFormatError(f"map object is missing {e}") from e


@cache
def _map_partial(f: DefMap, i: int, alpha: MultiIndex) -> Expr:
    e = f.components[i]
    for v in alpha.var_sequence():
        e = _diff(e, v)
    return e


def identity_map(m: int, region: Region | None = None) -> DefMap:
    return DefMap(m, m, tuple(coord(i) for i in range(m)), region)


def compose(outer: DefMap, inner: DefMap) -> DefMap:
    """outer o inner, realized by symbolic substitution."""
    if inner.codomain_dim != outer.domain_dim:
        raise ProblemFormatError(
            f"cannot compose: inner codomain {inner.codomain_dim} != outer domain {outer.domain_dim}"
        )
    comps = tuple(substitute(c, inner.components) for c in outer.components)
    return DefMap(inner.domain_dim, outer.codomain_dim, comps, inner.region)


# ---------------------------------------------------------------------------
# positive minorants (smooth phi with |d^a phi| < eps on a region)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MinorantCertificate:
    family: str
    scale: float
    order: int
    worst_relative_margin: float  # min over stress grid of (eps - |d^a phi|) / eps
    grid_points: int
    stress_points: int


@dataclass(frozen=True)
class Minorant:
    phi: Expr
    certificate: MinorantCertificate


def _eps_callable(eps) -> Callable[[Sequence[float]], float]:
    if isinstance(eps, Expr):
        return lambda x: float(eps.evaluate(x))
    if callable(eps):
        return lambda x: float(eps(x))
    v = float(eps)
    return lambda x: v


def _minorant_candidates(m: int):
    yield "constant", Const(as_number(1))
    base = add(1, norm_squared(m))
    for d in (1, 2, 3):
        yield f"inverse_power_{d}", recip(power(base, d))
    yield "gaussian", exp(mul(-1, norm_squared(m)))


def positive_minorant(
    eps,
    order: int,
    region: Region,
    grid_per_axis: int = 33,
) -> Minorant:
    """Find smooth phi > 0 with |d^alpha phi| < eps pointwise, |alpha| <= order.

    Candidates are tried in a fixed order (constant, inverse powers,
    Gaussian); each is scaled from the certification grid and then re-checked
    on a stress grid with doubled horizon on open-ended axes, which is what
    rules out constants against decaying eps.  The certificate records the
    worst relative margin on the stress grid.
    """
    eps_at = _eps_callable(eps)
    m = region.dim
    alphas = MultiIndex.all_up_to(m, order, include_zero=True)
    grid = region.grid(grid_per_axis)
    stress_grid = region.stress().grid(2 * grid_per_axis + 1)

    for x in grid:
        if eps_at(x) <= 0:
            raise CertificationFailure(f"eps is not positive at x={x}")

    failures = []
    for name, base in _minorant_candidates(m):
        derivs = {a: base for a in alphas}
        for a in alphas:
            e: Expr = base
            for v in a.var_sequence():
                e = _diff(e, v)
            derivs[a] = e
        ratio_max = 0.0
        for x in grid:
            ex = eps_at(x)
            worst = max(abs(float(derivs[a].evaluate(x))) for a in alphas)
            ratio_max = max(ratio_max, worst / ex)
        if ratio_max == 0.0:
            failures.append(f"{name}: degenerate (zero derivatives)")
            continue
        c = 1.0 / (2.0 * ratio_max)
        margin = math.inf
        ok = True
        for x in stress_grid:
            ex = eps_at(x)
            if ex <= 0:
                ok = False
                failures.append(f"{name}: eps <= 0 at stress point {x}")
                break
            worst = max(abs(c * float(derivs[a].evaluate(x))) for a in alphas)
            if worst >= ex:
                ok = False
                failures.append(
                    f"{name}: |d^a phi| = {worst:.3g} >= eps = {ex:.3g} at stress point {x}"
                )
                break
            margin = min(margin, (ex - worst) / ex)
        if ok:
            return Minorant(
                mul(c, base),
                MinorantCertificate(
                    name, c, order, margin, len(grid), len(stress_grid)
                ),
            )
    raise CertificationFailure(
        "no candidate family certifies; attempts: " + "; ".join(failures)
    )


# ---------------------------------------------------------------------------
# smooth approximation of piecewise polynomials (1-D)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PiecewisePoly:
    """Piecewise polynomial on R: piece i applies on [b_{i-1}, b_i).

    len(pieces) == len(breakpoints) + 1; pieces are univariate polynomial
    expressions in coord(0).
    """

    breakpoints: tuple[Number, ...]
    pieces: tuple[Expr, ...]

    def __post_init__(self):
        if len(self.pieces) != len(self.breakpoints) + 1:
            raise ValueError("need len(pieces) == len(breakpoints) + 1")
        bs = [float(b) for b in self.breakpoints]
        if any(a >= b for a, b in zip(bs, bs[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        for p in self.pieces:
            if not is_polynomial(p):
                raise ValueError("pieces must be polynomial expressions")

    def piece_index(self, x: Number) -> int:
        i = 0
        for b in self.breakpoints:
            if float(x) >= float(b):
                i += 1
            else:
                break
        return i

    def value(self, x: Number, order: int = 0) -> Number:
        e = self.pieces[self.piece_index(x)]
        for _ in range(order):
            e = _diff(e, 0)
        return e.evaluate((x,))

    def one_sided(self, bp_index: int, order: int) -> tuple[Number, Number]:
        """(left, right) derivative values of the given order at a breakpoint."""
        b = self.breakpoints[bp_index]
        left, right = self.pieces[bp_index], self.pieces[bp_index + 1]
        for _ in range(order):
            left = _diff(left, 0)
            right = _diff(right, 0)
        return left.evaluate((b,)), right.evaluate((b,))


@dataclass(frozen=True)
class SmoothApproximation:
    g: DefMap
    window: float | None  # half-width of blend windows; None when g == f exactly
    worst_margin: float
    points_checked: int


def smooth_approximate(
    f: PiecewisePoly,
    eps,
    order: int,
    region: Region,
    grid_per_axis: int = 201,
    max_halvings: int = 40,
) -> SmoothApproximation:
    """Blend a C^order piecewise polynomial into one smooth expression.

    Pieces are joined by smoothstep windows of half-width h around each
    breakpoint; h is halved until |d^a (f - g)| < eps holds on the
    certification grid (uniform backbone plus points clustered in each
    window) for all |a| <= order.  Raises NotCm when one-sided derivatives
    up to `order` disagree at a breakpoint.
    """
    if region.dim != 1:
        raise ProblemFormatError("smooth_approximate handles 1-D domains only")
    eps_at = _eps_callable(eps)

    exact = all(is_exact(p) for p in f.pieces) and rational_point(f.breakpoints)
    for bi in range(len(f.breakpoints)):
        for j in range(order + 1):
            lv, rv = f.one_sided(bi, j)
            if exact:
                bad = lv != rv
            else:
                scale = max(1.0, abs(float(lv)), abs(float(rv)))
                bad = abs(float(lv) - float(rv)) > 1e-9 * scale
            if bad:
                raise NotCm(
                    f"order-{j} one-sided derivatives differ at breakpoint "
                    f"{f.breakpoints[bi]}: {lv} vs {rv}"
                )

    identical = all(p == f.pieces[0] for p in f.pieces)
    if not f.breakpoints or identical:
        g = DefMap(1, 1, (f.pieces[0],), region)
        return SmoothApproximation(g, None, math.inf, 0)

    gaps = [float(b) - float(a) for a, b in zip(f.breakpoints, f.breakpoints[1:])]
    edge = [float(f.breakpoints[0]) - float(region.lo[0]),
            float(region.hi[0]) - float(f.breakpoints[-1])]
    h0 = min(gaps + [2 * e for e in edge if e > 0] or [1.0]) / 4.0

    backbone = region.grid(grid_per_axis)
    h = h0
    for _ in range(max_halvings):
        comp: Expr = f.pieces[0]
        for i, b in enumerate(f.breakpoints):
            step = smoothstep_rising(coord(0), b - _window(b, h), b + _window(b, h))
            comp = add(comp, mul(step, add(f.pieces[i + 1], mul(-1, f.pieces[i]))))
        g = DefMap(1, 1, (comp,), region)

        pts = [x[0] for x in backbone]
        for b in f.breakpoints:
            bf = float(b)
            pts.extend(bf - h + 2 * h * j / 40.0 for j in range(41))
        margin = math.inf
        ok = True
        for x in pts:
            if not region.contains((x,)):
                continue
            ex = eps_at((x,))
            for j in range(order + 1):
                fv = float(f.value(x, j))
                gv = float(g.component_partial(0, MultiIndex((j,))).evaluate((x,)))
                gap = ex - abs(fv - gv)
                margin = min(margin, gap)
                if gap <= 0:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            return SmoothApproximation(g, h, margin, len(pts))
        h /= 2.0
    raise CertificationFailure(
        f"no blend window down to h={h:.3g} certifies |d^a (f-g)| < eps"
    )


def _window(b: Number, h: float) -> Number:
    # keep window endpoints rational when the breakpoint is rational, so the
    # smoothstep coefficients stay exact
    if is_rational(b):
        return Fraction(h).limit_denominator(1_000_000_000)
    return h
