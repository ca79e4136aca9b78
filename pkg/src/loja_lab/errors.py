"""Exception hierarchy shared by all modules."""


class LojaLabError(Exception):
    pass


class ContractViolation(LojaLabError, ValueError):
    """A precondition on the arguments of an operation does not hold."""


class NumericalFailure(LojaLabError, ArithmeticError):
    pass


class DomainError(LojaLabError, ValueError):
    """Field lies outside the open admissible set of a model."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class ConstraintDegeneracyError(LojaLabError):
    """Constraint gradients are (numerically) linearly dependent.

    This is the failure of the surjectivity (linear independence) hypothesis at
    the evaluation point; messages name it as hypothesis (vi).
    """


class SurjectivityError(ConstraintDegeneracyError):
    pass


class RetractionError(LojaLabError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ChartDomainError(LojaLabError):
    pass


class ChartDegeneracyError(LojaLabError):
    pass


class StepRejected(LojaLabError):
    pass


class SearchFailure(LojaLabError):
    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class IllConditionedFit(LojaLabError, ValueError):
    pass
