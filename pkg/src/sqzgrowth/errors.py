"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class InconsistentNoiseError(DomainError):
    """Detected noise lower than the source noise: loss cannot reduce noise."""


class NumericalPrecisionError(ArithmeticError):
    pass


class FitError(RuntimeError):
    """Model fit impossible for the given data (flat, rank deficient, too short)."""


class SchemaError(ValueError):
    """Malformed input file. ``row`` is 1-based over data rows (header excluded)."""

    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class ConfigError(ValueError):
    """Invalid or unknown run-configuration entry."""
