"""Exception types shared across the library."""


class SketchNewtonError(Exception):
    """Base class for all library errors."""


class NonSymmetric(SketchNewtonError):
    """A matrix expected to be symmetric is not, beyond tolerance."""


class NonFinite(SketchNewtonError):
    """NaN or Inf encountered in an input that must be finite."""


class NoConvergence(SketchNewtonError):
    """An iterative spectral estimate failed to meet its tolerance."""


class DimensionMismatch(SketchNewtonError):
    """Operand shapes are inconsistent."""


class InvalidTau(SketchNewtonError):
    """Requested sketch size exceeds the system dimension."""


class EmptyDistribution(SketchNewtonError):
    """A sketch distribution has no mass to sample from."""


class BadSubset(SketchNewtonError):
    """An index subset is out of range, unsorted, or has duplicates."""


class InfeasibleConstraint(SketchNewtonError):
    """The sketched Newton system admits no solution."""


class SingularW(SketchNewtonError):
    """The weighting matrix of a changing-norm step is not positive-definite."""


class DegenerateRow(SketchNewtonError):
    """A Kaczmarz step hit a row with (numerically) zero gradient."""


class SingularHessianSum(SketchNewtonError):
    """The averaged Hessian of a stochastic Newton step is singular."""


class Diverged(SketchNewtonError):
    """Residual norm blew past the divergence guard."""


class LineSearchStalled(SketchNewtonError):
    """Backtracking drove the stepsize below the underflow floor."""


class MalformedLine(SketchNewtonError):
    """A LibSVM line does not match the grammar."""

    def __init__(self, lineno: int, reason: str = ""):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {reason}" if reason else f"line {lineno}")


class NonMonotoneIndex(MalformedLine):
    """Feature indices on a LibSVM line are not strictly increasing."""


class NonBinaryLabels(SketchNewtonError):
    """A dataset carries more than two distinct labels."""


class BadParameter(SketchNewtonError):
    """A generator or config parameter is outside its valid range."""


class ConfigError(SketchNewtonError):
    """An experiment config fails validation.

    Carries the flat key path of the offending entry.
    """

    def __init__(self, key: str, reason: str):
        self.key = key
        super().__init__(f"{key}: {reason}")
