"""Exception hierarchy shared by every radtag module."""


class RadtagError(Exception):
    """Base class for all errors raised by radtag."""


class ConfigError(RadtagError):
    pass


class SchemaError(RadtagError):
    def __init__(self, column, message=None):
        self.column = column
        super().__init__(message or f"schema error in column {column!r}")


class SectionNotFound(RadtagError):
    pass


class EmptyCorpus(RadtagError):
    pass


class ParseError(RadtagError):
    def __init__(self, lineno, message):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}")


class UnknownLabel(RadtagError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class BadPattern(RadtagError):
    def __init__(self, row, message):
        self.row = row
        super().__init__(f"row {row}: {message}")


class UnknownConcept(RadtagError):
    def __init__(self, row, concept):
        self.row = row
        self.concept = concept
        super().__init__(f"row {row}: unknown location concept {concept!r}")


class EmptyVocabulary(RadtagError):
    pass


class TooFewVectors(RadtagError):
    pass


class InvalidConfig(ConfigError):
    pass


class EmptySequence(RadtagError):
    pass


class DimensionMismatch(RadtagError, ValueError):
    pass


class LabelSpaceMismatch(RadtagError):
    pass


class EmptySet(RadtagError):
    pass


class TooFewSamples(RadtagError):
    pass


class LengthMismatch(RadtagError, ValueError):
    pass


class EmptyLabelSpace(RadtagError, ValueError):
    pass


class SpecTooSmall(RadtagError):
    pass
