"""Error types shared across the package.

Every error carries a stable ``code`` string; the HTTP layer and the CLI
map codes to status / exit codes.
"""


class DaisenError(Exception):
    code = "E_INTERNAL"

    def __init__(self, message=""):
        super().__init__(message or self.code)
        self.message = message or self.code


class SessionClosedError(DaisenError):
    code = "E_SESSION_CLOSED"


class UnknownIdError(DaisenError):
    code = "E_UNKNOWN_ID"


class TimeOrderError(DaisenError):
    code = "E_TIME_ORDER"


class SameLocationError(DaisenError):
    code = "E_SAME_LOCATION"


class ChildOpenError(DaisenError):
    code = "E_CHILD_OPEN"


class BadRangeError(DaisenError):
    code = "E_BAD_RANGE"


class BadRegexError(DaisenError):
    code = "E_BAD_REGEX"


class CycleError(DaisenError):
    code = "E_CYCLE"


class ConfigError(DaisenError):
    code = "E_CONFIG"


class BindError(DaisenError):
    code = "E_BIND"


class StoreIOError(DaisenError):
    code = "E_IO"


class ValidationError(DaisenError):
    """Raised by strict ingest when the trace has validation errors."""

    code = "E_VALIDATION"

    def __init__(self, report, message=""):
        super().__init__(message or f"trace failed validation ({len(report.errors)} errors)")
        self.report = report
