"""Exception hierarchy for the package."""


class ShapeError(ValueError):
    """A tensor or weight shape violates an operation's preconditions."""


class GenotypeError(ValueError):
    """A genotype or blueprint does not belong to the search space."""

    def __init__(self, message, index=None, field=None):
        super().__init__(message)
        self.index = index
        self.field = field


class EvaluationError(RuntimeError):
    """An evaluator could not produce objectives for a candidate."""


class KeyNotFoundError(EvaluationError, KeyError):
    """A tabular benchmark has no entry for the requested architecture."""

    def __str__(self):
        return RuntimeError.__str__(self)


class BenchmarkFormatError(ValueError):
    """A benchmark file is malformed or violates entry invariants."""

    def __init__(self, message, line=None, key=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
        self.key = key


class ConfigError(ValueError):
    """A run configuration is invalid."""
