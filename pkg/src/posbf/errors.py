class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


class NumericalError(ArithmeticError):
    """Numerical failure such as a rank-deficient channel or singular combiner (CLI exit code 3)."""
