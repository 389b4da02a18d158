"""Exception hierarchy shared by the whole package.

Resource exhaustion is deliberately distinct from invalid input so that
callers (and the CLI exit-code table) can tell "your request is malformed"
apart from "the computation blew a configured cap".
"""


class UalgError(Exception):
    """Base class for all errors raised by this package."""


class InputError(UalgError):
    """Malformed document, out-of-range element, unknown symbol, bad arity."""


class NotClosedError(UalgError):
    """A tuple set claimed to be a subuniverse is not closed.

    Carries a witness: (symbol, argument tuples, missing result tuple).
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class ResourceLimitError(UalgError):
    """A configured cap (closure size, enumeration count, ...) was exceeded."""

    def __init__(self, message, limit=None, reached=None):
        super().__init__(message)
        self.limit = limit
        self.reached = reached
