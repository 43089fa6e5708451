"""Exception hierarchy shared by every eqcavity module."""


class EqcavityError(Exception):
    """Base class for library errors."""


class InvalidParameterError(EqcavityError, ValueError):
    pass


class SourceSingularityError(EqcavityError, ValueError):
    """Evaluation point coincides with a point source."""


class CoincidentPointsError(EqcavityError, ValueError):
    pass


class DegenerateRegionError(EqcavityError, ValueError):
    """Region boundary is not a smooth closed curve (e.g. a lemniscate touching 0)."""


class UnsupportedRegimeError(EqcavityError):
    """The requested configuration lies outside the constructible set."""


class InvalidSourceError(UnsupportedRegimeError, ValueError):
    """A point source lies on or outside the base support."""


class ClosedFormUnavailableError(EqcavityError):
    pass


class OriginOnBoundaryError(EqcavityError, ValueError):
    pass


class AlphaOutsideError(EqcavityError, ValueError):
    pass


class SingularFitError(EqcavityError, ValueError):
    pass


class IntegrationError(EqcavityError):
    """Requested tolerance was not reached; carries the best available answer."""

    def __init__(self, message, value, error_estimate):
        super().__init__(message)
        self.value = value
        self.error_estimate = error_estimate


class NewtonDivergenceError(EqcavityError):
    """Newton continuation of a local inverse failed.

    ``valid_theta`` holds the angles (radians) on which the continuation had
    converged before the failure, so callers can see how far it got.
    """

    def __init__(self, message, valid_theta=()):
        super().__init__(message)
        self.valid_theta = tuple(valid_theta)
