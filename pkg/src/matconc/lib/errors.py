"""Exception hierarchy.

Every error raised deliberately by matconc derives from MatconcError.
Value-shaped problems also derive from ValueError so callers that only
know the standard library still catch them.
"""


class MatconcError(Exception):
    """Base class for all matconc errors."""


class MatrixError(MatconcError, ValueError):
    """Malformed matrix input: shape, symmetry or text format."""


class NotPSDError(MatrixError):
    """Matrix has an eigenvalue below the PSD tolerance."""


class ZeroMatrixError(MatrixError):
    """Operation undefined on the zero matrix."""


class NotUnitError(MatrixError):
    """Vector is not of unit Euclidean norm."""


class GapDegeneracyError(MatrixError):
    """Spectral gap g_j is zero or numerically negligible."""


class ConvergenceError(MatconcError):
    """The eigensolver failed to converge."""


class BoundDomainError(MatconcError, ValueError):
    """A bound was evaluated outside its stated validity range."""


class EnumerationLimitError(MatconcError, ValueError):
    """Input too large for a brute-force oracle."""


class ResolutionError(MatconcError, ValueError):
    """Too few Monte Carlo trials to resolve the requested level."""


class ConfigError(MatconcError, ValueError):
    """Semantically invalid experiment configuration."""


class ReportError(MatconcError):
    """Report is incomplete or cannot be written."""
