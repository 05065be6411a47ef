"""Exception types raised across the package."""


class DimensionError(ValueError):
    """Operands have incompatible shapes."""


class DomainError(ValueError):
    """A value lies outside the domain an operation accepts."""


class NumericError(ArithmeticError):
    """A computation produced NaN or infinity."""


class CapacityError(ValueError):
    """A request exceeds a hard size limit."""


class ProtocolError(ValueError):
    """A data-handling precondition of the training protocol is violated."""


class ParseError(ValueError):
    """A file could not be parsed.

    ``line`` is the 1-based line number of the offending line, when known.
    """

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class ConfigError(ValueError):
    """Invalid experiment configuration; ``key`` names the offending entry."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


class TrainingDiverged(NumericError):
    """A loss became non-finite during training."""

    def __init__(self, step, loss_name, value):
        self.step = step
        self.loss_name = loss_name
        self.value = value
        super().__init__(f"non-finite {loss_name} ({value!r}) at step {step}")
