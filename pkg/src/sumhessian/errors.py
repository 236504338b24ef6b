"""Exception types shared across the package."""


class ConeViolationError(ValueError):
    """A cone precondition failed (fractional power of a nonpositive value,
    inadmissible Hessian, ...)."""


class SamplingExhaustedError(RuntimeError):
    """Rejection sampling hit its draw budget with too low an acceptance rate."""


class JacobiConvergenceError(RuntimeError):
    """The cyclic Jacobi eigensolver did not converge within its sweep cap."""


class InstanceError(ValueError):
    """A PDE instance is ill-posed on the solve trajectory (nonpositive or
    non-finite right-hand side)."""


class LinearSolveError(RuntimeError):
    """The inner linear solver failed to reach its required relative residual."""


class NonConvergenceError(RuntimeError):
    """Damped Newton stalled or ran out of iterations; carries the trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace if trace is not None else []


class MaxPrincipleError(ValueError):
    """A field violates the sign expected from the maximum principle."""


class DegenerateFieldError(ValueError):
    """Every interior point was excluded from a diagnostic."""


class ConfigError(ValueError):
    """A run configuration file is malformed or inconsistent."""
