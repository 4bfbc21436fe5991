"""Error types shared across the workbench.

Every error carries a stable ``code`` string so the HTTP service and the
CLI can map failures to responses without inspecting exception classes.
"""


class ExplainLabError(Exception):
    """Base class for all workbench errors."""

    code = "Error"
    http_status = 500

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)
        self.message = message or self.code


class NotFound(ExplainLabError):
    code = "NotFound"
    http_status = 404


class InvalidInput(ExplainLabError):
    code = "InvalidInput"
    http_status = 400


class InvalidParam(ExplainLabError):
    code = "InvalidParam"
    http_status = 400


class InvalidPatch(ExplainLabError):
    code = "InvalidPatch"
    http_status = 400


class LogOrderViolation(ExplainLabError):
    code = "LogOrderViolation"
    http_status = 409


class UnsupportedFormat(ExplainLabError):
    code = "UnsupportedFormat"
    http_status = 400


class CorruptModel(ExplainLabError):
    code = "CorruptModel"
    http_status = 400


class DanglingReference(ExplainLabError):
    code = "DanglingReference"
    http_status = 409


class InsufficientCheckpoints(ExplainLabError):
    code = "InsufficientCheckpoints"
    http_status = 400


class Busy(ExplainLabError):
    code = "Busy"
    http_status = 409
