"""Failure modes raised by the integrators."""


class NewtonDivergence(RuntimeError):
    """Nonlinear stage solve failed to contract within its iteration budget."""


class StepUnderflow(RuntimeError):
    """A step controller drove the step size below its representable floor."""
