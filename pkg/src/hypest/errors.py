"""Exception hierarchy shared by the fitting and estimation layers."""


class EstimationError(Exception):
    """Base class for failures of a fit or an estimator on a given dataset."""


class RankDeficientError(EstimationError):
    """Design matrix is numerically rank deficient."""


class SeparationError(EstimationError):
    """Logistic MLE diverged or failed to converge (quasi/complete separation)."""


class OneClassOnlyError(EstimationError):
    """Binary response takes a single value."""


class DimensionMismatchError(EstimationError, ValueError):
    """Covariates do not match the design of a fitted model."""


class NoIceFreeRecordsError(EstimationError):
    """No records with R=0 are available to fit the no-ICE outcome model."""


class EmptyArmError(EstimationError):
    """One of the randomised arms has no records."""


class EmptyStratumError(EstimationError):
    """An R-stratum needed by an estimator is empty."""


class ExtremeWeightsError(EstimationError):
    """A fitted probability of the observed ICE status is below the floor."""


class ZeroDenominatorError(EstimationError):
    """Closed-form estimating equation has a vanishing denominator."""


class PositivityIndeterminableError(EstimationError):
    """The ICE model needed for the positivity diagnostic could not be fitted."""


class SingularConditionalCovarianceError(ValueError):
    """Conditional covariance matrix of (A, L1) is singular."""


class ConfigInvalidError(ValueError):
    """Scenario or run configuration is invalid."""
