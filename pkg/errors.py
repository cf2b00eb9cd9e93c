"""
Exception types raised by the clumsy coupon collector toolkit
"""


class ClumsyCollectorError(Exception):
    """Base class for every error raised by this package"""


class ParameterError(ClumsyCollectorError, ValueError):
    """An operation was called outside its preconditions"""


class QuadratureError(ClumsyCollectorError, RuntimeError):
    """Adaptive quadrature stopped before reaching the requested tolerance"""

    def __init__(self, message, estimate=None, error_estimate=None):
        super().__init__(message)
        self.estimate = estimate
        self.error_estimate = error_estimate


class StepCapExceeded(ClumsyCollectorError, RuntimeError):
    """A trajectory ran past the per-trajectory step cap"""

    def __init__(self, message, stream_index=None, step_cap=None):
        super().__init__(message)
        self.stream_index = stream_index
        self.step_cap = step_cap


class SampleCapExceeded(ClumsyCollectorError, MemoryError):
    """A retained batch would exceed the configured sample cap"""


class NumericOverflow(ClumsyCollectorError, OverflowError):
    """A value does not fit in a machine float; log10 of its magnitude is kept"""

    def __init__(self, message, log10_value=None):
        super().__init__(message)
        self.log10_value = log10_value
