"""Exception types raised across the package."""


class InvalidInputError(ValueError):
    """Input violates a documented precondition (shape, finiteness, range)."""


class MissingRegimeError(InvalidInputError):
    def __init__(self, node: int):
        super().__init__(f"no interventional regime for node {node} (1-based); "
                         "cannot estimate its exogenous variance")
        self.node = node


class DegenerateDataError(InvalidInputError):
    """A column that must carry variance is constant."""


class SingularProfileError(ArithmeticError):
    """Profile likelihood evaluated at a zero residual column (log of zero)."""


class StratificationError(InvalidInputError):
    """A regime has fewer rows than the number of CV folds."""


class DatasetParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line


class SolverDivergedError(RuntimeError):
    """Objective became non-finite; ``last_w`` holds the last finite iterate."""

    def __init__(self, message: str, last_w=None):
        super().__init__(message)
        self.last_w = last_w
