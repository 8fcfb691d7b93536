"""Exception hierarchy shared by every module."""


class AnalysisError(Exception):
    """Base class for all domain errors raised by the package."""


class InputError(AnalysisError):
    """Bad or inconsistent input data (CLI maps these to exit code 1)."""


class NonPositiveValue(InputError):
    def __init__(self, year, what="value"):
        super().__init__(f"non-positive {what} in year {year}")
        self.year = year


class NonPositivePopulation(NonPositiveValue):
    def __init__(self, year):
        super().__init__(year, "population")


class NonPositiveReference(NonPositiveValue):
    def __init__(self, year):
        super().__init__(year, "reference value")


class EmptyOverlap(InputError):
    pass


class SeriesTooShort(InputError):
    pass


# Alternative names for the same condition.
SpanTooShort = SeriesTooShort
TooFewObservations = SeriesTooShort


class SpanMismatch(InputError):
    pass


class InsufficientOverlap(InputError):
    pass


class MissingFile(InputError):
    pass


class ParseError(InputError):
    def __init__(self, path, line, reason):
        super().__init__(f"{path}:{line}: {reason}")
        self.path = path
        self.line = line


class DuplicateCountryYear(InputError):
    pass


class MissingBaseline(InputError):
    pass


class EmptyPanel(InputError):
    pass


class ConfigError(InputError):
    pass


class NumericalError(AnalysisError):
    pass


class DegenerateInnovationVariance(NumericalError):
    def __init__(self, t, value):
        super().__init__(f"innovation variance {value:.3g} at step {t} is below the floor")
        self.t = t
        self.value = value


class DegenerateRegressor(NumericalError):
    pass


class RankDeficient(NumericalError):
    pass


class IoError(AnalysisError):
    """Output could not be written."""
