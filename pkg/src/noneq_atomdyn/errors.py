"""Exception hierarchy.

All library errors derive from :class:`AtomDynError` so callers (the sweep
engine in particular) can record a numerical failure per grid point without
swallowing unrelated bugs.
"""


class AtomDynError(Exception):
    """Base class for every error raised by this package."""


class InvalidInput(AtomDynError, ValueError):
    """A precondition on the arguments is violated."""


# matprops
class MirrorHasNoFinitePermittivity(AtomDynError):
    pass


class TabulatedOutOfRange(AtomDynError, ValueError):
    pass


class NoSurfaceResonance(AtomDynError):
    pass


class TabulatedParseError(AtomDynError, ValueError):
    pass


# slab_optics
class DegenerateDenominator(AtomDynError, ArithmeticError):
    pass


class ResonantDenominator(AtomDynError, ArithmeticError):
    pass


# quadrature
class QuadratureNoConvergence(AtomDynError):
    def __init__(self, message, worst_component=None, error=None):
        super().__init__(message)
        self.worst_component = worst_component
        self.error = error


class DivergentAtContact(AtomDynError, ValueError):
    pass


class RegimeParameterMismatch(AtomDynError, ValueError):
    pass


# rates
class BothAlphasZero(AtomDynError, ArithmeticError):
    pass


# atom_dynamics
class InvalidState(AtomDynError, ValueError):
    pass


class DegenerateRateMatrix(AtomDynError):
    pass


class ZeroTotalRate(AtomDynError, ArithmeticError):
    pass


class BothChannelsDark(AtomDynError, ArithmeticError):
    pass


class DisconnectedLevels(AtomDynError, ValueError):
    pass


class DegenerateScheme(AtomDynError, ValueError):
    pass


class NonDiagonalInput(AtomDynError, ValueError):
    pass


# sweep_cli
class ConfigError(AtomDynError, ValueError):
    """Malformed or inconsistent sweep configuration (CLI exit code 2)."""
