"""Exception types raised by the solver."""


class DgIfeError(Exception):
    """Base class for all package errors."""


class InvalidArgument(DgIfeError, ValueError):
    pass


class HypothesisViolation(DgIfeError):
    """The interface meets the mesh in a way the IFE construction cannot handle.

    ``hypothesis`` is ``"H1"`` (an edge crosses the interface more than once)
    or ``"H2"`` (the interface meets an element in more than two points).
    """

    def __init__(self, hypothesis, message, element=None, edge=None):
        self.hypothesis = hypothesis
        self.element = element
        self.edge = edge
        super().__init__(f"({hypothesis}) {message}; refine the mesh")


class DegenerateCut(DgIfeError):
    pass


class IfeConstructionError(DgIfeError):
    def __init__(self, message, element=None, cut=None):
        self.element = element
        self.cut = cut
        super().__init__(message)


class SolverError(DgIfeError):
    def __init__(self, message, residuals=(), step=None):
        self.residuals = list(residuals)
        self.step = step
        super().__init__(message)


class InvalidConfiguration(DgIfeError, ValueError):
    pass
