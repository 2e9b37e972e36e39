"""Exception types shared across the solver."""


class ConfigurationError(ValueError):
    """Invalid mesh, quadrature, weight or scheme parameters."""


class NonconvergenceError(RuntimeError):
    """The per-step fixed-point iteration failed.

    Carries enough context to diagnose a CFL violation: the step index at
    which the iteration stalled, the number of iterations performed and the
    last increment norm seen before giving up.
    """

    def __init__(self, message, step_index=None, iterations=None, last_increment=None):
        super().__init__(message)
        self.step_index = step_index
        self.iterations = iterations
        self.last_increment = last_increment
