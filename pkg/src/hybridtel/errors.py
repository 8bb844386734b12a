"""Exception types raised by the simulator."""


class HybridTelError(Exception):
    """Base class for all simulator errors."""


class TruncationOverflowError(HybridTelError):
    """Probability leaking past the top Fock level exceeds the tail tolerance."""


class DegenerateCatError(HybridTelError):
    """Odd cat state requested with alpha = 0 (zero vector)."""


class DuplicateModeLabelError(HybridTelError):
    """Tensor product over states that share a mode label."""


class UnknownModeError(HybridTelError):
    """Mode label not present in the state."""


class DimensionMismatchError(HybridTelError):
    """Operands act on incompatible truncated spaces."""


class ZeroNormError(HybridTelError):
    """State vector has (numerically) zero norm."""


class ZeroProbabilityError(HybridTelError):
    """Conditioning on an effect with vanishing probability."""


class GridCoverageError(HybridTelError):
    """Quadrature grid does not cover the state's spread."""


class NonUnitaryError(HybridTelError):
    """Constructed mode transformation failed the unitarity check."""


class ConfigError(HybridTelError):
    """Invalid experiment configuration."""
