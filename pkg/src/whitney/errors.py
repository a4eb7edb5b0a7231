"""Shared exception types.

Every failure that callers are expected to handle derives from ToolError so
the CLI can map them to exit code 2 uniformly.
"""

from __future__ import annotations


class ToolError(Exception):
    """Base class for all package-level failures."""


# -- expression language -----------------------------------------------------

class GuardViolation(ToolError):
    """sqrt/recip argument was not strictly positive at an evaluation point."""


class OutOfDomain(ToolError):
    """Evaluation point lies outside the declared domain region."""


class BadRadii(ToolError):
    """Bump radii must satisfy 0 < r_in < r_out."""


class CertificationFailure(ToolError):
    """A sampled certificate could not be established within budget."""


class NotCm(ToolError):
    """Piecewise input is not C^m: one-sided derivatives disagree."""


# -- linear algebra -----------------------------------------------------------

class AmbientMismatch(ToolError):
    """Subspaces or vectors live in different ambient dimensions."""


class ZeroVector(ToolError):
    """Containment test received the zero vector."""


class DimMismatch(ToolError):
    """Subspace sequence mixes dimensions."""


# -- strata -------------------------------------------------------------------

class NotOnStratum(ToolError):
    """Tangent space requested at a point that fails membership."""


class RankDefect(ToolError):
    """Jacobian rank does not certify the declared stratum dimension."""


class NotSubmersion(ToolError):
    """A map required to be a submersion drops rank at a witness point."""


class NotARefinement(ToolError):
    """Claimed refinement has a sample in no / in several coarse strata."""


class ProbeInvalid(ToolError):
    """Probe curve leaves its stratum or fails to approach its landing point."""


# -- tubular ------------------------------------------------------------------

class NoConvergence(ToolError):
    """Iterative solve failed to reach tolerance within the iteration cap."""


# -- transversality / experiments ----------------------------------------------

class SpecMismatch(ToolError):
    """Jet operands disagree on (m, n, k)."""


class HypothesisFailed(ToolError):
    """A construction's precondition fails on the given data."""


class ExhaustedDraws(ToolError):
    """Random search used up its draw budget without an accepted candidate."""


class ZeroPolynomial(ToolError):
    """The escape experiment needs a nonzero polynomial."""


class ProblemFormatError(ToolError):
    """Problem/fixture file is malformed (schema or semantic error)."""
