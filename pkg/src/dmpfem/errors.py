"""Exception hierarchy shared by every dmpfem module."""


class DmpFemError(Exception):
    """Base class for all dmpfem faults."""


class InvalidArgumentError(DmpFemError, ValueError):
    """An argument is outside the documented domain of an operation."""


class ComputationError(DmpFemError, RuntimeError):
    """A numerical procedure failed to converge or produced unusable output."""


class MeshError(DmpFemError):
    """Inverted or inconsistent mesh geometry."""


class DegenerateCoefficientError(ComputationError):
    """A coefficient field lost definiteness at an evaluation point."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class FormulationError(ComputationError):
    """The assembled system is not positive definite (bad formulation or BCs)."""


class InternalError(DmpFemError, AssertionError):
    """Broken internal bookkeeping, e.g. an inconsistent DOF map."""
