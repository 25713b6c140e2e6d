"""Exception hierarchy shared by all modules."""


class DetectionError(Exception):
    """Base class for library errors."""


class DimensionMismatch(DetectionError, ValueError):
    pass


class LengthMismatch(DetectionError, ValueError):
    pass


class BadCount(DetectionError, ValueError):
    pass


class RankDeficient(DetectionError, ArithmeticError):
    """Channel draw is numerically rank deficient; resample it."""


class Singular(DetectionError, ArithmeticError):
    pass


class NonFinite(DetectionError, ArithmeticError):
    """A computation produced inf/nan (diverged optimizer, overflow in k**b)."""


class BudgetExceeded(DetectionError, RuntimeError):
    """Exhaustive enumeration would exceed the configured candidate budget."""


class EmptySample(DetectionError, ValueError):
    pass


class ConfigInvalid(DetectionError, ValueError):
    pass


class ModelMissing(DetectionError, FileNotFoundError):
    pass
