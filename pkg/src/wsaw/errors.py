"""Exception types shared across the lab."""


class BudgetExceededError(RuntimeError):
    """An exact or sampled computation was asked to exceed its resource budget."""


class DegenerateEnsembleError(RuntimeError):
    """An ensemble operation has no usable mass (all weights zero, empty bins)."""


class DegenerateInputError(ValueError):
    """An input is structurally valid but carries no information for the operation."""


class UndefinedEstimateError(RuntimeError):
    """An estimator's denominator is empty (no centers, no defined bins)."""


class MissingValueError(KeyError):
    """A table lookup hit an undefined entry."""


class ChainInitializationError(RuntimeError):
    """The MCMC chain could not produce a valid initial state."""
