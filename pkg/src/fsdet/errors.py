"""Exceptions raised by fsdet."""


class ModelError(ValueError):
    """Invalid model parameters."""


class CommunalityError(ModelError):
    """A variable's implied communality reaches or exceeds 1 (Heywood-type case)."""


class SingularMatrixError(ModelError):
    """The correlation matrix is singular or not positive definite."""


class UnreachableTargetError(ModelError):
    """A requested determinacy cannot be reached with the given number of variables."""


class DegenerateSimulationError(ModelError):
    """A simulated quantity has zero variance, so a correlation is undefined."""
