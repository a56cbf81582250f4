"""Exception types shared across the package."""


class NlfisherError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(NlfisherError, ValueError):
    """Bad input: kernel, grid, or run configuration rejected before compute."""


class InvalidKernel(ValidationError):
    """Kernel violates one of the standing hypotheses (nonnegativity,
    positivity at the origin, unit mass, finite second moment)."""


class DivergentMoment(InvalidKernel):
    """Requested kernel moment does not exist (integral diverges)."""


class NonpositiveMu(ValidationError):
    """Growth slope mu must be strictly positive."""


class ConfigError(ValidationError):
    """Simulation configuration rejected (time step, grid, pads, ...)."""


class StencilOverrun(ValidationError):
    """Tabulated kernel radius does not fit inside the grid half-length."""


class TruncationFailure(NlfisherError, RuntimeError):
    """Kernel truncation radius would exceed the configured hard cap."""


class DegenerateIntegral(NlfisherError, RuntimeError):
    """An integral that must be positive underflowed to (numerical) zero."""


class InconclusiveScan(NlfisherError, RuntimeError):
    """Transform sign could not be certified on the scanned wavenumber range."""


class NoCrossing(NlfisherError, ValueError):
    """Profile never crosses the requested level."""


class InsufficientSamples(NlfisherError, ValueError):
    """Not enough trailing samples for a least-squares speed fit."""


class BlowUp(NlfisherError, RuntimeError):
    """Simulation produced NaN/Inf or exceeded the a-priori amplitude cap.

    Carries the step index and time at which the blow-up was detected.  When
    raised from an evolution loop, ``trajectory`` holds the partial history
    recorded up to that point (or None).
    """

    def __init__(self, message, step_index=None, time=None, trajectory=None):
        super().__init__(message)
        self.step_index = step_index
        self.time = time
        self.trajectory = trajectory
