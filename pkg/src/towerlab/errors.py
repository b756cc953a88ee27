"""Package-specific error types."""


class BudgetError(RuntimeError):
    """A construction or enumeration would exceed its configured resource budget."""


class InsufficientSampleError(ValueError):
    """An estimator was asked to run on fewer samples than its floor allows."""
