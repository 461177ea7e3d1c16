"""Exception hierarchy shared across the package."""


class PacifierError(Exception):
    """Base class for all package errors."""


class InvalidGraph(PacifierError):
    pass


class InvalidAction(PacifierError):
    pass


class InvalidInput(PacifierError):
    pass


class InvalidBudget(PacifierError):
    pass


class InvalidPlan(PacifierError):
    pass


class GenerationFailed(PacifierError):
    pass


class NumericalFailure(PacifierError):
    pass


class NonConverged(PacifierError):
    """Raised when an iterative solver runs out of iterations.

    The last iterate is kept on ``self.last`` so callers can still inspect it.
    """

    def __init__(self, message, last=None, iterations=None):
        super().__init__(message)
        self.last = last
        self.iterations = iterations


class NonConvergedWarning(RuntimeWarning):
    pass


class UnsupportedVariant(PacifierError):
    pass


class Refused(PacifierError):
    pass


class ShapeError(PacifierError):
    pass


class StateError(PacifierError):
    pass


class EpisodeDone(PacifierError):
    pass


class TrainingDiverged(PacifierError):
    def __init__(self, message, checkpoint=None):
        super().__init__(message)
        self.checkpoint = checkpoint


class IngestError(PacifierError):
    pass


class ConfigError(PacifierError):
    pass
