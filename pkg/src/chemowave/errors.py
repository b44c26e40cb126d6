"""Exception hierarchy shared by all modules."""


class ChemoWaveError(Exception):
    """Base class for package errors."""


class DomainError(ChemoWaveError, ValueError):
    """An argument lies outside the domain of the operation."""


class InadmissibleParameters(ChemoWaveError, ValueError):
    """(p, mu) does not satisfy the admissibility constraint."""


class WindowUndefined(ChemoWaveError, ValueError):
    """The speed window is undefined (chi at or above the threshold)."""


class NoRoot(ChemoWaveError, ValueError):
    """No admissible root exists for the requested equation."""


class NoConstruction(ChemoWaveError, ValueError):
    """An explicit eigenpair construction has violated hypotheses."""


class NotApplicable(ChemoWaveError, ValueError):
    """The operation's hypotheses do not apply to the given input."""


class BudgetExceeded(ChemoWaveError, RuntimeError):
    """An iteration did not converge within its budget.

    ``last`` holds the last iterate and ``history`` any recorded norms.
    """

    def __init__(self, msg, last=None, history=None):
        super().__init__(msg)
        self.last = last
        self.history = list(history) if history is not None else []


class Divergence(ChemoWaveError, RuntimeError):
    """The evolution left the bounded regime."""

    def __init__(self, msg, t=None, sup=None):
        super().__init__(msg)
        self.t = t
        self.sup = sup
