# Copyright 2025 evoforms developers
#
# Licensed under the Apache License, Version 2.0 (the "License"); you may
# not use this file except in compliance with the License. You may obtain
# a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
# WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
# License for the specific language governing permissions and limitations
#  under the License.

"""Exceptions raised by the evoforms engine and the error controller."""

import enum


class ErrorType(enum.IntEnum):
    """Defines constants representing types of errors.

    The order of the members is the priority used by ErrorCtrl.get.

    Attributes:
        ERROR_USAGE: The command line is invalid (unknown verb, unknown
           object, malformed flag). Exit status 2.
        ERROR_DOCUMENT: The DSL document cannot be parsed or resolved.
           Exit status 1.
        ERROR_ENGINE: An engine operation rejected its input.
           Exit status 1.
        ERROR_INTERNAL: Inconsistency in the internal processing.
           Exit status 1.
    """

    ERROR_USAGE = enum.auto()
    ERROR_DOCUMENT = enum.auto()
    ERROR_ENGINE = enum.auto()
    ERROR_INTERNAL = enum.auto()


class BaseEvoFormsError(Exception):
    """Base class of every error raised by evoforms.

    Attributes:
        error_type (ErrorType): Category used to select the exit status.
        additional_message (str): Free text appended to reports.
    """

    error_type = ErrorType.ERROR_ENGINE

    def __init__(self, *args: object, additional_message: str = "") -> None:
        super().__init__(*args)
        self.additional_message = additional_message


class InternalError(BaseEvoFormsError):
    """Detected an inconsistency in the internal processing."""

    error_type = ErrorType.ERROR_INTERNAL


class ConfigurationError(BaseEvoFormsError):
    """The engine configuration file cannot be read."""

    error_type = ErrorType.ERROR_USAGE


class UsageError(BaseEvoFormsError):
    """The command line refers to an unknown verb, object or flag."""

    error_type = ErrorType.ERROR_USAGE


class ChartError(BaseEvoFormsError):
    """A variable does not belong to the chart, or the chart is invalid."""


class ChartMismatchError(BaseEvoFormsError):
    """Two objects were combined that live on different charts."""


class DegreeError(BaseEvoFormsError):
    """Form degrees are out of range or inconsistent."""


class UnsupportedIntegrandError(BaseEvoFormsError):
    """The integrand is not polynomial in the integration variable."""


class NotClosedError(BaseEvoFormsError):
    """A potential was requested for a form that is not closed."""


class UnsupportedMetricError(BaseEvoFormsError):
    """The metric is not diagonal."""


class MetricError(BaseEvoFormsError):
    """The metric is not symmetric or is degenerate."""


class ProbeDimensionError(BaseEvoFormsError):
    """The probe point does not have one coordinate per chart variable."""


class PreconditionError(BaseEvoFormsError):
    """An operation was called on an object outside its domain."""


class NoOriginationError(BaseEvoFormsError):
    """The restricted relation is still nonidentical."""


class ClassificationRangeError(BaseEvoFormsError):
    """The (p, k, N) degrees are outside the classification table."""


class ArityError(BaseEvoFormsError):
    """The number of functions does not fit the chart."""


class UnsupportedDegreeError(BaseEvoFormsError):
    """The balance relation degree is not supported."""


class DocumentError(BaseEvoFormsError):
    """Base class of positioned DSL errors.

    Attributes:
        line (int): 1-based line of the offending token.
        column (int): 1-based column of the offending token.
        expected (list[str]): Tokens that would have been accepted.
    """

    error_type = ErrorType.ERROR_DOCUMENT

    def __init__(
        self,
        message: str,
        line: int = 0,
        column: int = 0,
        expected: list[str] | None = None,
        additional_message: str = "",
    ) -> None:
        super().__init__(message, additional_message=additional_message)
        self.message = message
        self.line = line
        self.column = column
        self.expected = sorted(expected or [])

    def __str__(self) -> str:
        text = f"{self.line}:{self.column}: {self.message}"
        if self.expected:
            text += f" (expected one of: {', '.join(self.expected)})"
        return text


class LexicalError(DocumentError):
    """Unexpected character in the document."""


class SyntacticError(DocumentError):
    """Unexpected token in the document."""


class NameResolutionError(DocumentError):
    """A name is used before it is defined, or defined twice."""


class DimensionError(DocumentError):
    """A declared degree or dimension disagrees with the body."""


class ErrorCtrl:
    """Control errors.

    Holds error types in a list without immediately raising them, so a
    command can report every target before it decides its exit status.
    Engine and document exceptions can be put directly; their error type
    is derived from the exception class and the exception is kept.

    Attributes:
        error (list[ErrorType]): Error types stored so far.
        failures (list[BaseEvoFormsError]): Exceptions stored so far.
    """

    _exit_status = {
        ErrorType.ERROR_USAGE: 2,
        ErrorType.ERROR_DOCUMENT: 1,
        ErrorType.ERROR_ENGINE: 1,
        ErrorType.ERROR_INTERNAL: 1,
    }

    def __init__(self):
        self.error: list[ErrorType] = []
        self.failures: list[BaseEvoFormsError] = []

    def put(self, errno: ErrorType | BaseEvoFormsError = ErrorType.ERROR_ENGINE) -> None:
        """Retain error information.

        Args:
            errno (ErrorType | BaseEvoFormsError): The error type to add,
                or an exception whose error_type is added. Optional. If
                omitted, ERROR_ENGINE will be added.

        Returns:
            None

        Raises:
            None
        """
        if isinstance(errno, BaseEvoFormsError):
            self.failures.append(errno)
            errno = errno.error_type
        self.error.append(errno)

    def describe(self) -> list[str]:
        """Return "<ExceptionClass>: <message>" for each stored exception.

        Args:
            None

        Returns:
            One line per exception in the order they were put.

        Raises:
            None
        """
        return [f"{type(err).__name__}: {err}" for err in self.failures]

    def get(self) -> ErrorType | None:
        """Extract the highest-priority error stored in the error list.

        Args:
            None

        Returns:
            The stored ErrorType with the highest priority, or None if
            no error has been put.

        Raises:
            None
        """
        for err in ErrorType:
            if err in self.error:
                return err
        return None

    def exit_status(self) -> int:
        """Return the process exit status for the stored errors.

        Args:
            None

        Returns:
            0 if no error was stored, 2 for usage errors, 1 otherwise.

        Raises:
            None
        """
        err = self.get()
        if err is None:
            return 0
        return self._exit_status[err]
