"""Exception hierarchy shared across the package.

The CLI maps these onto its exit-code contract: usage errors exit 1,
data errors exit 2, numeric failures exit 3.
"""


class NloDesignError(Exception):
    """Base class for all package errors."""


class DataError(NloDesignError):
    """Malformed or inconsistent input data (files, schemas, widths)."""


class VocabularyError(DataError):
    """Vocabulary file violates the documented schema or its invariants."""


class DatasetError(DataError):
    """Dataset file violates the documented schema or its invariants."""


class NumericError(NloDesignError):
    """A numeric procedure failed (exploding step, damping ceiling, ...).

    Carries the last stable state where one exists so callers can report
    diagnostics instead of losing the whole run.
    """

    def __init__(self, message: str, last_stable=None):
        super().__init__(message)
        self.last_stable = last_stable
