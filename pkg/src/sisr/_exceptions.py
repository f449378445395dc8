"""Exception hierarchy shared across the package."""


class SISRError(Exception):
    """Base class for all errors raised by this package."""


class CapacityError(SISRError, ValueError):
    """Requested problem size exceeds the supported enumeration budget."""


class StructuralError(SISRError, ValueError):
    """Inputs have inconsistent shapes, lengths or coalition structure."""


class DataError(SISRError, ValueError):
    """Input data contains invalid values (NaN, unparsable fields, ...)."""


class DomainError(SISRError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigurationError(SISRError, ValueError):
    """Unknown option or scheme name."""


class UnsupportedInputError(SISRError, ValueError):
    """The operation cannot handle this kind of input (e.g. a sampled table)."""


class FlatPayoffError(SISRError, ValueError):
    """All payoffs are equal after baseline adjustment; nothing to attribute."""


class NonInvertibleTransformError(SISRError, ValueError):
    """The fitted transform is constant and cannot be inverted."""


class DegenerateThresholdError(SISRError, ArithmeticError):
    """Hard thresholding produced the zero vector, which cannot be normalized."""


class NumericalError(SISRError, ArithmeticError):
    """A linear-algebra routine failed (singular system, Cholesky failure)."""
