"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class FloodRankError(Exception):
    exit_code = 1
    code = "ERROR"


class ConfigError(FloodRankError):
    exit_code = 2
    code = "CONFIG_ERROR"


class DataError(FloodRankError):
    exit_code = 3
    code = "DATA_ERROR"


class SchemaError(DataError):
    code = "SCHEMA_ERROR"


class RowError(DataError):
    """A single malformed input row, addressed by 1-based file line and column name."""

    code = "ROW_ERROR"

    def __init__(self, message, line, column=None, source=None):
        self.line = line
        self.column = column
        self.source = source
        where = f"line {line}"
        if column is not None:
            where += f", column {column!r}"
        if source is not None:
            where = f"{source}: {where}"
        super().__init__(f"{where}: {message}")


class IngestErrors(DataError):
    """Collects every row error of a file so nothing is dropped silently."""

    code = "ROW_ERROR"

    def __init__(self, errors):
        self.errors = list(errors)
        head = "; ".join(str(e) for e in self.errors[:5])
        more = f" (+{len(self.errors) - 5} more)" if len(self.errors) > 5 else ""
        super().__init__(f"{len(self.errors)} row error(s): {head}{more}")


class DegenerateError(FloodRankError):
    exit_code = 4
    code = "DEGENERATE"


class ContractError(ValueError):
    """Caller violated an operation's precondition (programming error, not data)."""
