"""Exception hierarchy shared by every garkit module."""

from __future__ import annotations


class GarkitError(Exception):
    """Base class for all library errors."""


class InputError(GarkitError):
    """Bad user input or configuration (CLI exit code 2)."""


class DegenerateData(GarkitError):
    """Data for which the statistic is undefined (CLI exit code 3)."""


class NumericalFailure(GarkitError):
    """Non-finite values during a computation (CLI exit code 4)."""


class EmptySample(InputError):
    pass


class BadValue(InputError):
    def __init__(self, index: int, value: float, reason: str = "non-finite value"):
        self.index = index
        self.value = value
        super().__init__(f"{reason} at index {index}: {value!r}")


class DomainError(InputError):
    pass


class ConfigError(InputError):
    pass


class ModelError(InputError):
    pass


class DegenerateSample(DegenerateData):
    pass


class DivideByZeroConstant(DegenerateData):
    pass


class EvalError(NumericalFailure):
    def __init__(self, reason: str, index: int | None = None):
        self.index = index
        self.reason = reason
        where = "" if index is None else f" (at index {index})"
        super().__init__(f"{reason}{where}")


class ExperimentError(NumericalFailure):
    pass


class ParseError(InputError):
    def __init__(self, offset: int, expected: "set[str] | frozenset[str]", message: str = ""):
        self.offset = offset
        self.expected = frozenset(expected)
        text = message or f"expected one of {sorted(self.expected)}"
        super().__init__(f"parse error at offset {offset}: {text}")


class UnknownName(ParseError):
    def __init__(self, offset: int, name: str):
        self.name = name
        super().__init__(offset, frozenset({"x", "function name"}), f"unknown identifier {name!r}")


class MissingModel(EvalError):
    def __init__(self):
        super().__init__("cdf() used but no distribution model is bound")
