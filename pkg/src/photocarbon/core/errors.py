from typing import Any, ClassVar, Dict, Optional

from pydantic import BaseModel


class ErrorInfo(BaseModel):
    """Serializable description of a photocarbon failure"""
    code: str
    message: str
    detail: Optional[Dict[str, Any]] = None


class PhotocarbonError(Exception):
    """Base exception for the photocarbon system"""
    code: ClassVar[str] = "PHOTOCARBON_ERROR"
    # 1 = computation error, 2 = usage/file error
    exit_code: ClassVar[int] = 1

    def __init__(self, message: str, detail: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.detail = detail or {}

    @property
    def info(self) -> ErrorInfo:
        return ErrorInfo(code=self.code, message=str(self), detail=self.detail or None)


class UnitError(PhotocarbonError):
    code = "UNIT_ERROR"


class ConfigError(PhotocarbonError):
    code = "CONFIG_ERROR"
    exit_code = 2


class ParseError(PhotocarbonError):
    """An input document could not be read.

    Always carries a 1-based line and column so messages point at the
    offending text.
    """
    code = "PARSE_ERROR"
    exit_code = 2

    def __init__(
        self,
        message: str,
        line: int = 1,
        column: int = 1,
        source: Optional[str] = None,
        detail: Optional[Dict[str, Any]] = None,
    ):
        self.line = max(line, 1)
        self.column = max(column, 1)
        self.source = source
        super().__init__(message, detail)

    def __str__(self) -> str:
        return f"{self.source or '<input>'}:{self.line}:{self.column}: {self.message}"

    @property
    def info(self) -> ErrorInfo:
        detail = {"line": self.line, "column": self.column, **self.detail}
        if self.source:
            detail["source"] = self.source
        return ErrorInfo(code=self.code, message=self.message, detail=detail)


class CatalogError(ParseError):
    code = "CATALOG_ERROR"


class FlowSyntaxError(ParseError):
    code = "FLOW_ERROR"


class DatasetError(ParseError):
    code = "DATASET_ERROR"


class DanglingReferenceError(DatasetError):
    code = "DANGLING_REFERENCE"


class AggregationError(PhotocarbonError):
    code = "AGGREGATION_ERROR"


class YieldError(PhotocarbonError):
    code = "YIELD_ERROR"


class InfeasibleYieldError(YieldError):
    code = "INFEASIBLE_YIELD"


class ScenarioError(PhotocarbonError):
    code = "SCENARIO_ERROR"


class SweepError(PhotocarbonError):
    code = "SWEEP_ERROR"
    exit_code = 2


def handle_error(error: Exception) -> ErrorInfo:
    """Convert exceptions to ErrorInfo format"""
    if isinstance(error, PhotocarbonError):
        return error.info
    return ErrorInfo(
        code="UNKNOWN_ERROR",
        message="An unexpected error occurred",
        detail={"error": str(error)}
    )
