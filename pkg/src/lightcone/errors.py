"""Exception types raised by the lightcone package."""


class LightconeError(Exception):
    """Base class for all package-specific errors."""


class InvalidBandlimitError(LightconeError, ValueError):
    """Bandlimit outside the supported range (L >= 4)."""


class GridTooCoarseError(LightconeError, ValueError):
    """Grid cannot represent the requested bandlimit."""


class BandlimitMismatchError(LightconeError, ValueError):
    """Two spectral fields have incompatible bandlimits."""


class InvalidSectionError(LightconeError, ValueError):
    """Conformal factor fails positivity (min omega <= 0 or degenerate)."""


class NotRestrictedLorentzError(LightconeError, ValueError):
    """Matrix is not in the identity component of the Lorentz group."""


class MappedSectionInvalidError(LightconeError, RuntimeError):
    """Lorentz image of a section lost positivity numerically."""


class InvalidReferenceVectorError(LightconeError, ValueError):
    """Reference 4-vector is not timelike future-pointing."""


class BalanceFailedError(LightconeError, RuntimeError):
    """Balancing iteration did not reach tolerance."""

    def __init__(self, residual, msg=None):
        self.residual = residual
        super().__init__(msg or f"balance failed, first-moment residual {residual:.3e}")


class FlowSingularError(LightconeError, RuntimeError):
    """Flow step could not preserve positivity (finite-time singularity)."""


class MonitorUndefinedError(LightconeError, ValueError):
    """Gradient monitor requires strictly positive spacetime mean curvature."""


class InvalidInputError(LightconeError, ValueError):
    """Operation precondition on input data violated."""


class InvalidRhsError(LightconeError, ValueError):
    """Poisson right-hand side has nonzero surface mean."""


class SRangeTooLargeError(LightconeError, ValueError):
    """Perturbation range violates positivity of the conformal factor."""


class PreconditionViolatedError(LightconeError, ValueError):
    """Section is not balanced/rescaled as required by the operation."""


class GenerationFailedError(LightconeError, ValueError):
    """Section generation parameters violate positivity."""


class QuadratureFailureError(LightconeError, RuntimeError):
    """Internal consistency check failed; indicates broken quadrature."""


class ParseError(LightconeError, ValueError):
    """Malformed input file."""
