"""Typed errors raised across the package.

Every error a caller is expected to catch has its own class; CLI maps any
LbsimtscError to exit code 2 (data error) and argparse failures to 1.
"""


class LbsimtscError(Exception):
    """Base class for all errors raised by this package."""


# --- dataset ingestion ---

class RaggedData(LbsimtscError):
    def __init__(self, line_no: int):
        super().__init__(f"line {line_no}: row length differs from previous rows")
        self.line_no = line_no


class ParseError(LbsimtscError):
    def __init__(self, line_no: int, col_no: int, detail: str = "not a number"):
        super().__init__(f"line {line_no}, field {col_no}: {detail}")
        self.line_no = line_no
        self.col_no = col_no


class EmptyData(LbsimtscError):
    pass


class DegenerateSplit(LbsimtscError):
    pass


class InsufficientLabels(LbsimtscError):
    def __init__(self, class_id: int, have: int, need: int):
        super().__init__(
            f"class {class_id} has {have} training instances, need {need}"
        )
        self.class_id = class_id


# --- distance kernels ---

class LengthMismatch(LbsimtscError):
    pass


class FormatError(LbsimtscError):
    pass


class TruncatedFile(LbsimtscError):
    pass


# --- graph construction ---

class InvalidDistance(LbsimtscError):
    pass


class KTooLarge(LbsimtscError):
    pass


# --- model / training ---

class NumericalDivergence(LbsimtscError):
    pass


class ShapeError(LbsimtscError):
    pass


class NoSupervision(LbsimtscError):
    pass


# --- statistics ---

class DegenerateTest(LbsimtscError):
    pass


# --- cli-level validation ---

class KindMismatch(LbsimtscError):
    pass
