"""Exception hierarchy shared by all escrate modules."""


class EscrateError(Exception):
    """Base class for all escrate errors."""


class NonPositiveCoefficient(EscrateError):
    """Radial coefficient is not strictly positive where it must be."""


class QuadratureFailure(EscrateError):
    """Adaptive integration could not reach the requested tolerance."""


class OutOfRange(EscrateError):
    """Inversion target lies outside the range of the monotone function."""


class SingularOrigin(EscrateError):
    """Evaluation requested below the configured origin floor."""


class DomainError(EscrateError):
    """Argument outside the domain where the formula is defined."""


class NonMonotoneTransform(EscrateError):
    """Supplied transform f is not strictly increasing on the grid."""


class NonPositiveDenominator(EscrateError):
    """Rate integrand denominator fails positivity.

    Carries the first offending radius in ``.radius``.
    """

    def __init__(self, radius, message=None):
        self.radius = radius
        super().__init__(message or f"denominator not positive at r={radius!r}")


class FiniteTotalIntegral(EscrateError):
    """The rate integral converges to a finite limit below the requested time.

    The profile is in the non-conservative regime: no radius R satisfies
    phi(R) = t.
    """


class ExtrapolationError(EscrateError):
    """Evaluation requested beyond the sampled domain of a rate table."""


class NonFiniteState(EscrateError):
    """A simulation step produced a non-finite value.

    Carries the offending step index in ``.step``.
    """

    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"non-finite state at step {step}")


class DriftOrderViolated(EscrateError):
    """Pointwise drift domination fails.

    Carries a grid point where the order fails in ``.radius``.
    """

    def __init__(self, radius, message=None):
        self.radius = radius
        super().__init__(message or f"drift order violated at r={radius!r}")


class ConfigError(EscrateError):
    """Run configuration is missing, malformed, or carries unknown keys."""
