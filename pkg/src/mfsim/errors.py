"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument is outside its documented domain."""


class EstimationError(RuntimeError):
    """An estimator or calibration could not reach its target."""

    def __init__(self, message, best_value=None):
        super().__init__(message)
        self.best_value = best_value


class OrderNotFoundError(KeyError):
    """Referenced order id is not resting in the book."""


class OrderFlowParseError(ValueError):
    """An order-flow record is malformed; carries the offending index."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index
