from typing import Any, Optional

from pydantic import BaseModel


class ErrorResponse(BaseModel):
    code: str
    message: str
    details: Optional[Any] = None


class BitrelException(Exception):
    def __init__(self, exit_code: int, code: str, message: str, details: Optional[Any] = None):
        self.exit_code = exit_code
        self.code = code
        self.message = message
        self.details = details
        super().__init__(message)

    def to_response(self) -> ErrorResponse:
        return ErrorResponse(code=self.code, message=self.message, details=self.details)


class UsageError(BitrelException, ValueError):
    def __init__(self, message: str = "Invalid usage", details: Optional[Any] = None):
        super().__init__(exit_code=2, code="USAGE_ERROR", message=message, details=details)


class ParseError(BitrelException):
    def __init__(self, message: str = "Malformed input", details: Optional[Any] = None):
        super().__init__(exit_code=3, code="PARSE_ERROR", message=message, details=details)


class StorageError(BitrelException):
    def __init__(self, message: str = "I/O failure", details: Optional[Any] = None):
        super().__init__(exit_code=4, code="IO_ERROR", message=message, details=details)


class InternalError(BitrelException):
    def __init__(self, message: str = "Internal error", details: Optional[Any] = None):
        super().__init__(exit_code=1, code="INTERNAL_ERROR", message=message, details=details)
