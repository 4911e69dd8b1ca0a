"""Exception hierarchy shared across the package.

The CLI maps these onto stable exit codes: ConfigError -> 1,
DataError -> 2, ExecutionError -> 3.
"""


class PanelAuditError(Exception):
    """Base class for all package errors."""


class ConfigError(PanelAuditError):
    """Invalid configuration, schema, or parameter values."""


class DataError(PanelAuditError):
    """The data violates a structural contract (parse errors, duplicate keys, ...)."""


class SchemaError(ConfigError):
    """A declared column is missing or the schema is self-inconsistent."""


class ParseError(DataError):
    """A cell could not be parsed as a number."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class DuplicateKeyError(DataError):
    """The same (unit, period) key appears more than once."""


class GroupConsistencyError(DataError):
    """A unit is mapped to more than one group."""


class ContractError(PanelAuditError):
    """An operation was called outside its preconditions."""


class ExecutionError(PanelAuditError):
    """A model fit or grid run failed."""


class RankDeficiencyError(ExecutionError):
    """The design matrix is rank deficient; names the dependent columns."""

    def __init__(self, dependent_columns):
        self.dependent_columns = list(dependent_columns)
        super().__init__(
            "design matrix is rank deficient; linearly dependent columns: "
            + ", ".join(str(c) for c in self.dependent_columns)
        )
