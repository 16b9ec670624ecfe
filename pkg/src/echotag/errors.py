"""Error taxonomy shared by the library and the CLI exit codes."""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration (CLI exit code 2)."""


class DataError(ValueError):
    """Missing, malformed, or incompatible data artifacts (CLI exit code 3)."""


class NumericError(RuntimeError):
    """Numerical failure such as training divergence (CLI exit code 4)."""


EXIT_CODES = {ConfigError: 2, DataError: 3, NumericError: 4}
