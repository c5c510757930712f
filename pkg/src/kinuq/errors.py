"""Exception types shared across the solver and estimator modules."""


class KinuqError(Exception):
    """Base class for all package errors."""


class InvalidStateError(KinuqError):
    """A field or moment state violates its invariants (NaN, negative density, ...)."""


class DegenerateDensityError(InvalidStateError):
    """Density fell below the configured floor in at least one cell."""


class GridMismatchError(KinuqError):
    """Two fields that must share grids do not."""


class StabilityError(KinuqError):
    """A time step violates the advective CFL bound."""

    def __init__(self, dt, dt_max):
        super().__init__(f"dt={dt:g} exceeds the stable bound dt_max={dt_max:g}")
        self.dt = dt
        self.dt_max = dt_max


class CapacityError(KinuqError):
    """Requested resolution exceeds the supported kernel size."""


class OracleSizeError(KinuqError):
    """The dense collision oracle refuses grids it cannot afford."""


class NumericBreakdownError(KinuqError):
    """A transform or update produced non-finite values."""


class FluidVacuumError(KinuqError):
    """The fluid update lost positivity of density or internal energy."""

    def __init__(self, cell, what="density"):
        super().__init__(f"positivity loss ({what}) in cell {cell}")
        self.cell = cell


class ConfigError(KinuqError):
    """Invalid or inconsistent experiment configuration."""
