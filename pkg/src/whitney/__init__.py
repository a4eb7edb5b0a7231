"""Numerical transversality and Whitney (a)-regularity toolkit.

Definable smooth maps in a closed expression language, stratified
semialgebraic sets, jets and jet-metric neighborhoods, sampled
transversality and regularity verdicts, explicit transverse perturbations,
and the experiment suite behind them.  Everything stochastic takes an
explicit seed; everything "certified" is certified by sampling with a
reported margin, never claimed as a proof.
"""

from .expr import (
    Bump,
    Const,
    Coord,
    DefMap,
    Expr,
    MultiIndex,
    Region,
    add,
    bump,
    compose,
    const,
    coord,
    exp,
    identity_map,
    jet_dimension,
    mul,
    norm_squared,
    poly_from_coeffs,
    positive_minorant,
    power,
    recip,
    smooth_approximate,
    sqrt,
)

__version__ = "0.1.0"
