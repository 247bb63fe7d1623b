class DimensionError(ValueError):
    """Operand shapes do not line up."""


class NumericalFailure(ArithmeticError):
    """An iteration diverged, stalled, or produced non-finite values."""


class DataFormatError(ValueError):
    """Malformed input data.

    ``line`` is 1-based. For LIBSVM input ``column`` is the 1-based position
    of the offending ``index:value`` pair; label errors carry no column.
    """

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            loc = f"line {line}" + (f", column {column}" if column is not None else "")
            message = f"{loc}: {message}"
        super().__init__(message)
