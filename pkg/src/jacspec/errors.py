"""Exception types shared across the package."""


class JacspecError(Exception):
    """Base class for all package errors."""


class NotHermitianError(JacspecError):
    pass


class NoConvergenceError(JacspecError):
    pass


class SingularBlockError(JacspecError):
    def __init__(self, message, smallest_sv=None):
        super().__init__(message)
        self.smallest_sv = smallest_sv


class NearKernelError(JacspecError):
    """An eigenvalue sits too close to zero for the modulus inverse square root."""


class CapExceededError(JacspecError):
    pass


class DynamicRangeError(JacspecError):
    """Entry magnitudes span more than the dense assembly can represent."""


class OutOfRangeError(JacspecError):
    pass


class RecursionOverflowError(JacspecError):
    def __init__(self, message, last_good=None):
        super().__init__(message)
        self.last_good = last_good


class ModelMismatchError(JacspecError):
    pass


class ConfigError(JacspecError):
    pass
