"""Exception types raised across the package."""


class MeshFormatError(ValueError):
    """Malformed mesh, snapshot or ledger text."""


class MeshInvariantError(ValueError):
    """A mesh violates a structural invariant (orientation, tagging, ...)."""


class ConfigError(ValueError):
    """Invalid or unknown simulation configuration key."""


class ConstraintViolation(ValueError):
    """A damage field leaves its feasible box."""


class SingularSystemError(RuntimeError):
    """Equilibrium system is not positive definite on the free DOFs."""


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before reaching its tolerance.

    ``iterate`` holds the best iterate and ``residual`` the residual reached.
    """

    def __init__(self, message, iterate=None, residual=float("nan")):
        super().__init__(message)
        self.iterate = iterate
        self.residual = residual


class AuditFailure(RuntimeError):
    """An energy-accounting certificate failed."""


class StepUnderflow(RuntimeError):
    """The adaptive time step fell below ``tau_min``.

    ``certificate`` carries the failing audit or solver message.
    """

    def __init__(self, message, t=None, certificate=None):
        super().__init__(message)
        self.t = t
        self.certificate = certificate
