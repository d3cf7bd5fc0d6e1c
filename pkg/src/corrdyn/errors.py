"""Exception types shared across the package."""


class ParameterError(ValueError):
    """Parameter ``a`` outside the domain an operation supports."""


class UnsupportedParameterError(ParameterError):
    """Klein pair requested outside the disk |a - 4| <= 3."""


class SizeLimitError(ValueError):
    pass


class DomainError(ValueError):
    pass


class InconsistencyError(RuntimeError):
    """Both images of a point fell strictly inside the J-domain."""


class DegenerateResultantError(ArithmeticError):
    pass


class ConditioningError(ArithmeticError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class RootFinderError(ArithmeticError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class CompositionError(ArithmeticError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class CrossValidationError(RuntimeError):
    def __init__(self, message, discrepancies=()):
        super().__init__(message)
        self.discrepancies = list(discrepancies)


class ComparisonError(ValueError):
    pass


class RefusalError(ValueError):
    pass
