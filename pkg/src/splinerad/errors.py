"""Exception hierarchy shared by every module of the package."""


class SplineRadError(Exception):
    """Base class; ``exit_code`` is what the CLI returns for it."""

    exit_code = 3


class WrongArity(SplineRadError):
    def __init__(self, n, expected=20):
        super().__init__(f"expected {expected} descriptor entries, got {n}")
        self.n = n


class OutOfBounds(SplineRadError):
    def __init__(self, k, name, value, lo, hi):
        super().__init__(f"descriptor {k} ({name}) = {value!r} outside [{lo!r}, {hi!r}]")
        self.k = k
        self.name = name


class SelfIntersecting(SplineRadError):
    pass


class NoCrossing(SplineRadError):
    pass


class UndefinedRatio(SplineRadError):
    pass


class ZeroThreshold(SplineRadError):
    pass


class SingularCorrelation(SplineRadError):
    pass


class DuplicateInput(SplineRadError):
    pass


class ParseError(SplineRadError):
    def __init__(self, path, line, msg):
        super().__init__(f"{path}:{line}: {msg}")
        self.path = path
        self.line = line


class GridMismatch(SplineRadError):
    pass


class MetricError(SplineRadError):
    """A metric extractor failed at one frequency of a band."""

    def __init__(self, frequency, cause):
        super().__init__(f"at f={frequency:.6g} Hz: {type(cause).__name__}: {cause}")
        self.frequency = frequency
        self.cause = cause


class ConfigError(SplineRadError):
    exit_code = 2


class IoError(SplineRadError):
    exit_code = 4

    def __init__(self, path, msg):
        super().__init__(f"{path}: {msg}")
        self.path = path
