from typing import Optional


class GradualChangeError(ValueError):
    """Base class for domain failures; `code` is the machine-readable name."""
    code = "GradualChange"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def as_dict(self) -> dict:
        return {"code": self.code, "message": self.message}


class DegenerateDesignError(GradualChangeError):
    code = "DegenerateDesign"


class EmptyWindowError(GradualChangeError):
    code = "EmptyWindow"


class ShapeMismatchError(GradualChangeError):
    code = "ShapeMismatch"


class EmptyPrefixError(GradualChangeError):
    code = "EmptyPrefix"


class InvalidBlocksError(GradualChangeError):
    code = "InvalidBlocks"


class EmptyExtremalSetError(GradualChangeError):
    code = "EmptyExtremalSet"


class SeriesTooShortError(GradualChangeError):
    code = "SeriesTooShort"


class InvalidConfigError(GradualChangeError):
    code = "InvalidConfig"


class TooFewCurvesError(GradualChangeError):
    code = "TooFewCurves"


class TooFewRowsError(GradualChangeError):
    code = "TooFewRows"


class NonMonotoneGridError(GradualChangeError):
    code = "NonMonotoneGrid"


class ParseError(GradualChangeError):
    code = "ParseError"

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        super().__init__(message)
        self.row = row
        self.column = column

    def as_dict(self) -> dict:
        return {**super().as_dict(), "row": self.row, "column": self.column}
