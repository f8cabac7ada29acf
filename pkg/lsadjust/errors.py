"""Exception hierarchy shared by the library and the command line.

Every error carries the exit code the CLI reports for it, the way an HTTP
error carries its status code: 1 for bad input or configuration, 2 for a
numerical failure.
"""


class LsadjustError(Exception):
    exit_code = 1

    def __init__(self, detail: str, kind: str | None = None):
        super().__init__(detail)
        self.detail = detail
        self.kind = kind

    def __str__(self) -> str:
        return self.detail


class DataError(LsadjustError):
    """Malformed, missing or mutually inconsistent input data."""

    exit_code = 1


class ConfigError(LsadjustError):
    """Invalid controls, flags or pipeline preconditions."""

    exit_code = 1


class NumericalError(LsadjustError):
    """Rank deficiency, non-finite likelihood and similar failures."""

    exit_code = 2
