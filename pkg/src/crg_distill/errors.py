"""Exception taxonomy shared by every module in the package."""


class CrgDistillError(Exception):
    """Base class for all errors raised by this package."""


class MalformedHeader(CrgDistillError):
    """NPY magic, version, or header dict is invalid."""


class UnsupportedDtype(CrgDistillError):
    """Element type is not little-endian 32- or 64-bit IEEE float."""


class RankError(CrgDistillError):
    """Array rank or dimension sizes are outside the accepted contract."""


class PayloadLengthError(CrgDistillError):
    """Declared element count disagrees with the payload byte length."""


class NonFiniteData(CrgDistillError):
    """A NaN or Inf was found; carries the first offending flat index."""

    def __init__(self, flat_index: int, message: str | None = None):
        self.flat_index = int(flat_index)
        super().__init__(message or f"non-finite value at flat index {flat_index}")


class IoError(CrgDistillError):
    """File could not be read or written."""


class ShapeMismatch(CrgDistillError):
    """Two tensors that must share a shape do not."""


class DimensionMismatch(CrgDistillError):
    """A matrix argument has incompatible dimensions (e.g. not square)."""


class NonPositiveDegree(CrgDistillError):
    """An adjacency row sum is <= 0; the degree matrix is not invertible."""


class ConvergenceFailure(CrgDistillError):
    """The symmetric eigensolver did not converge."""


class BadN(CrgDistillError):
    """Requested embedding size is outside [1, C]."""


class DegenerateChannel(CrgDistillError):
    """A channel vector has (near-)zero norm where a direction is required."""


class DegenerateSpectrum(CrgDistillError):
    """Eigenvalue gaps are too small for analytic eigenvector gradients."""


class Divergence(CrgDistillError):
    """An optimization produced a non-finite objective value."""


class DegenerateSpectrumWarning(UserWarning):
    """A spectral embedding was computed from a (near-)degenerate spectrum."""
