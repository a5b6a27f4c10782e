"""Exception hierarchy shared by the library and the CLI."""


class WeakIntError(Exception):
    """Base class for all errors raised by weakint."""


class ConfigError(WeakIntError, ValueError):
    """An experiment config or statistic spec string could not be resolved."""


class BudgetExceededError(WeakIntError, RuntimeError):
    """An exact enumeration would exceed the configured evaluation budget."""


class NumericalError(WeakIntError, ArithmeticError):
    """A computation produced a non-finite value or failed to converge."""


class RangeError(WeakIntError, RuntimeError):
    """A composed statistic left the domain of the outer map."""
