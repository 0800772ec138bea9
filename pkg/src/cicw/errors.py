"""Exception types raised by the weight solvers and the training harness."""


class CicwError(Exception):
    """Base class for solver-level failures (CLI maps these to exit code 3)."""


class NumericRangeError(CicwError):
    """A weight computation left the representable floating-point range."""

    def __init__(self, message, lam=None, loss_span=None):
        super().__init__(message)
        self.lam = lam
        self.loss_span = loss_span


class InfeasibleHyperparameterError(CicwError):
    """Hyperparameter violates a solver precondition (e.g. L_i + mu <= 0)."""

    def __init__(self, message, minimum_admissible=None):
        super().__init__(message)
        self.minimum_admissible = minimum_admissible


class DegenerateBatchError(CicwError):
    """Every candidate weight was clamped to zero; no distribution exists."""


class DegeneratePairError(CicwError):
    """A mixing pair has zero combined weight, so the mix is undefined."""


class SolverFailureError(CicwError):
    """An iterative solver failed to converge or to bracket its root.

    ``history`` carries the probe trail (bracket endpoints or residuals)
    for post-mortem diagnostics.
    """

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class RadiusTooLargeError(CicwError):
    """The class-weight radius would drive the annotated class weight to zero."""


class InternalConsistencyError(CicwError):
    """A closed-form solver exhausted its candidate set; indicates a bug."""
