"""Exception types shared across the package."""


class CuspLabError(Exception):
    """Base class for all package errors."""


class DomainMargin(CuspLabError):
    """Point too close to the chart boundary for a finite-difference stencil."""


class NonPositiveDefinite(CuspLabError):
    """Metric coefficients fail a Cholesky factorization."""


class SingularMetric(CuspLabError):
    """Metric matrix cannot be inverted."""


class DegeneratePlane(CuspLabError):
    """Two tangent vectors do not span a plane."""


class IncompatibleJ(CuspLabError):
    """Supplied almost-complex structure does not square to -Id."""


class OutOfChart(CuspLabError):
    """Coordinates outside the declared chart domain."""


class WrongModel(CuspLabError):
    """Operation called with a geometry it does not support."""


class StepFailure(CuspLabError):
    """Adaptive integrator could not meet the tolerance above the step floor."""

    def __init__(self, message, t=None, sample_ids=None):
        super().__init__(message)
        self.t = t
        self.sample_ids = sample_ids


class BlowupDetected(CuspLabError):
    """Riccati solution diverged inside the interval."""


class EmptyTrajectory(CuspLabError):
    """Trajectory has too few samples for the requested operation."""


class PreconditionFailed(CuspLabError):
    """A documented precondition of a check does not hold."""


class SingularDirection(CuspLabError):
    """Section direction on the singular set (beta = 0)."""


class QuadratureFailure(CuspLabError):
    """Adaptive quadrature did not converge."""


class BadParameters(CuspLabError):
    """Parameter values outside the admissible range."""


class FitFailure(CuspLabError):
    """Regression or extrapolation could not be carried out."""


class Infeasible(CuspLabError):
    """No parameter choice satisfies the constraint chain."""


class ConfigError(CuspLabError):
    """Invalid or incomplete run configuration."""
