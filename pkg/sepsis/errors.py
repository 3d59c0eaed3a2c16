"""
Errors Module
Exception hierarchy shared by every stage, each error carrying its CLI exit code
"""

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_PIPELINE = 4


class SepsisError(Exception):
    """Base class for all pipeline errors"""

    exit_code = EXIT_PIPELINE


class ConfigError(SepsisError):
    """Invalid or unreadable configuration"""

    exit_code = EXIT_CONFIG


class DataError(SepsisError):
    """Problem with the input tables"""

    exit_code = EXIT_DATA


class SchemaError(DataError):
    """A required column is missing from a table header"""

    def __init__(self, column: str, table: str = ""):
        self.column = column
        self.table = table
        where = f" in {table}" if table else ""
        super().__init__(f"missing required column {column}{where}")


class RowError(DataError):
    """A cell could not be parsed; `line` is the 1-based line in the file"""

    def __init__(self, line: int, column: str, value: str, path: str = ""):
        self.line = line
        self.column = column
        self.value = value
        prefix = f"{path}:" if path else "line "
        super().__init__(f"{prefix}{line}: cannot parse {column}={value!r}")


class InputError(DataError):
    """Argument values that violate an operation's preconditions"""


class IntegrityError(DataError):
    """Dangling keys between tables, or a model with inconsistent node covers"""


class PipelineError(SepsisError):
    """Failure while transforming, training or evaluating"""


class ParameterError(PipelineError):
    """An operation or learner parameter is out of range"""


class SplitError(PipelineError):
    """Stratified split or fold assignment is impossible"""


class RebalanceError(PipelineError):
    """SMOTE cannot run on the given training set"""


class EvaluationError(PipelineError):
    """A metric is undefined for the given labels"""


class ExplanationError(PipelineError):
    """SHAP requested for a model kind that has no tree structure"""


class OracleError(PipelineError):
    """The exhaustive Shapley oracle refuses inputs that are too large"""


class StageError(PipelineError):
    """Wraps any failure raised inside a named pipeline stage"""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        if isinstance(cause, SepsisError):
            self.exit_code = cause.exit_code
        elif isinstance(cause, OSError):
            self.exit_code = EXIT_DATA
        else:
            self.exit_code = EXIT_PIPELINE
        super().__init__(f"stage '{stage}' failed: {cause}")
