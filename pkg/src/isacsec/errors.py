"""Exception types shared across the package."""


class IsacsecError(Exception):
    """Base class for all package errors."""


class UnsupportedGeometryError(IsacsecError):
    """Array geometry outside the supported family (odd or too-small counts)."""


class AngleDomainError(IsacsecError):
    """Angle outside [-pi/2, pi/2]."""


class InvalidCovarianceError(IsacsecError):
    """Matrix expected to be Hermitian PSD is not."""


class ProjectorDegenerateError(IsacsecError):
    """Channel matrix is rank deficient; null-space projector undefined."""


class DetectionFailureError(IsacsecError):
    """Fewer spectral peaks than expected targets."""


class EstimationDegenerateError(IsacsecError):
    """Fisher matrix too ill-conditioned to invert."""

    def __init__(self, message, condition_number=None):
        super().__init__(message)
        self.condition_number = condition_number


class IllConditionedEstimateError(IsacsecError):
    """Closed-form amplitude estimator hit a singular inner matrix."""


class NumericalDegeneracyError(IsacsecError):
    """Nonpositive denominator or similar numerical breakdown."""


class NoSidelobeRegionError(IsacsecError):
    """Main-lobe intervals cover the whole angular domain."""


class OptimizationFailureError(IsacsecError):
    """Conic solver failed or returned an unusable status."""

    def __init__(self, message, status=None):
        super().__init__(message)
        self.status = status


class InfeasibleProblemError(OptimizationFailureError):
    """Constraint set of an optimization problem is empty."""


class ConfigError(IsacsecError):
    """Scenario configuration file is malformed or inconsistent."""
