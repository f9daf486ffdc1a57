"""Exception hierarchy shared by every layer of the engine."""


class GfError(Exception):
    """Base class for all engine errors."""


class FrontEndError(GfError):
    """Problems found before evaluation (syntax, validation)."""


class ValidationError(FrontEndError):
    def __init__(self, message, span=None):
        super().__init__(message)
        self.span = span


class UnknownVariable(ValidationError):
    pass


class UnsupportedEvent(ValidationError):
    pass


class ContinuousObservation(ValidationError):
    pass


class DesugarError(ValidationError):
    pass


class EvaluationError(GfError):
    """Problems raised while computing a posterior."""


class DivisionByZero(EvaluationError):
    pass


class DomainError(EvaluationError):
    pass


class UnsupportedOp(EvaluationError):
    pass


class ZeroEvidence(EvaluationError):
    pass


class MassesUnavailable(EvaluationError):
    pass


class NegativeMass(EvaluationError):
    pass


class OracleUnavailable(EvaluationError):
    pass
