class ShiftFusionError(Exception):
    """Base class for every error raised by shiftfusion."""


class ConfigError(ShiftFusionError, ValueError):
    pass


class DimensionError(ShiftFusionError, ValueError):
    pass


class CorpusValidationError(ShiftFusionError, ValueError):
    """Raised when a corpus on disk or in memory breaks the schema.

    Messages carry split / dialogue / utterance coordinates so the offending
    record can be located.
    """


class DivergenceError(ShiftFusionError, RuntimeError):
    pass


class NonFiniteGradientError(DivergenceError):
    def __init__(self, name: str):
        super().__init__(f"Non-finite gradient in parameter {name!r}")
        self.name = name


class GradCheckError(ShiftFusionError, RuntimeError):
    pass
