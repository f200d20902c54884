class KGBenchError(Exception):
    """Base class for toolkit errors."""


class ParseError(KGBenchError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SamplingError(KGBenchError):
    pass


class TrainingDivergedError(KGBenchError, FloatingPointError):
    pass


class DegenerateTrainingSetError(KGBenchError, ValueError):
    pass


class LeakageError(KGBenchError, AssertionError):
    """A test triple reached embedding or classifier training."""
