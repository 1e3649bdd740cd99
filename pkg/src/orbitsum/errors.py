"""Exception hierarchy shared across the package."""


class OrbitsumError(Exception):
    """Base class for all errors raised by orbitsum."""


class ConfigError(OrbitsumError, ValueError):
    """A spec or problem config violates a documented constraint."""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        prefix = ""
        if field is not None:
            prefix += f"{field}: "
        if line is not None:
            prefix = f"line {line}: " + prefix
        super().__init__(prefix + message)


class DimensionError(ConfigError):
    def __init__(self, expected, got, what="point", field=None):
        self.expected = expected
        self.got = got
        super().__init__(f"dimension mismatch for {what}: expected {expected}, got {got}", field=field)


class NumericOverflowError(OrbitsumError, ArithmeticError):
    """A map evaluation produced a non-finite coordinate."""


class OrbitOverflowError(NumericOverflowError):
    """Overflow inside an orbit run; ``trace`` holds the steps completed before it."""

    def __init__(self, message, trace):
        self.trace = trace
        super().__init__(message)


class MisdeclaredContractionError(OrbitsumError):
    pass


class ScheduleExhaustedError(OrbitsumError):
    pass


class PotentialInconsistencyError(OrbitsumError):
    """A potential evaluated below its declared lower bound."""


class NotCheckableError(OrbitsumError):
    """The requested check is vacuous or undefined at this input (e.g. phi(x) = +inf)."""


class NotConvergedError(OrbitsumError):
    pass
