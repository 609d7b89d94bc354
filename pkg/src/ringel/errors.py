"""Exception types shared across the package.

Every error carries a stable machine-readable ``code`` and a ``details``
dict so the command line layer can serialize failures without parsing
message strings.
"""

from __future__ import annotations


class RingelError(Exception):
    """Base class for all package errors."""

    code = "error"

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_json_dict(self) -> dict:
        return {"code": self.code, "message": self.message, "details": self.details}


class ParameterError(RingelError):
    """An argument is outside its documented domain."""

    code = "parameter"


class InvalidEdgeError(ParameterError):
    """A vertex pair does not name an edge (loop or out of range)."""

    code = "invalid-edge"


class TreeError(ParameterError):
    """An edge list does not describe a tree on {0..m-1}."""

    code = "not-a-tree"


class NotApplicableError(RingelError):
    """A procedure's structural hypothesis does not hold for this input."""

    code = "not-applicable"


class GuaranteeViolationError(RingelError):
    """A counting guarantee failed on a concrete instance.

    Raised instead of returning a weakened result; the details name the
    bound that failed and the quantities involved.
    """

    code = "guarantee-violation"


class DecompositionError(RingelError):
    """A layer decomposition missed one of its size bounds."""

    code = "decomposition"


class EmbeddingFailureError(RingelError):
    """A greedy embedding stage ran out of admissible choices."""

    code = "embedding-failure"


class ConstructionFailureError(RingelError):
    """A gadget construction stalled; details name the blocking step."""

    code = "construction-failure"


class InternalInvariantError(RingelError):
    """A step the counting argument says cannot fail did fail."""

    code = "internal-invariant"


class CertificateError(RingelError):
    """A certificate file is malformed, corrupt, or fails re-verification."""

    code = "certificate"
