"""Exception hierarchy shared across the package."""


class SeqDiscError(Exception):
    """Base class for all domain errors."""


class OutOfBounds(SeqDiscError):
    """A design point or parameter vector violates its box."""


class EvaluationFailure(SeqDiscError):
    """A model evaluation produced a non-finite result or crashed."""


class IntegrationFailure(EvaluationFailure):
    """The adaptive ODE integrator could not reach the requested time."""


class ProtocolError(SeqDiscError):
    """An external model process broke the line-delimited protocol."""


class FitFailure(SeqDiscError):
    """No parameter-fit start produced a finite objective."""


class TrainingFailure(SeqDiscError):
    """Every hyperparameter restart failed (e.g. Cholesky breakdown)."""


class SingularInformation(SeqDiscError):
    """The regularised Fisher information matrix is numerically singular."""


class SingularCovariance(SeqDiscError):
    """A predictive covariance entering a criterion is not invertible."""


class InsufficientData(SeqDiscError):
    """Not enough observations for the requested statistic (NE <= D_i)."""


class IndiscriminableTermination(SeqDiscError):
    """max_x D_BF < E: predictions too close to the noise floor to separate."""


class CampaignTerminated(SeqDiscError):
    """propose/observe called on a campaign in a terminal status."""


class AllLikelihoodsZero(SeqDiscError):
    """Every model likelihood underflowed; posteriors left unchanged."""
