"""Exception hierarchy shared by the library, the HTTP service, and the CLI.

Every error carries a ``category`` that maps one-to-one onto a CLI exit code
and onto the ``error.category`` field of service error responses:

    usage      -> 2   bad arguments or contract violations
    format     -> 3   malformed files or payloads
    numeric    -> 4   singular / numerically degenerate systems
    infeasible -> 5   well-formed inputs that admit no solution
"""

CATEGORY_EXIT_CODES = {
    "usage": 2,
    "format": 3,
    "numeric": 4,
    "infeasible": 5,
}


class PalstreamError(Exception):
    """Base class for all domain errors."""

    category = "usage"

    @property
    def exit_code(self) -> int:
        return CATEGORY_EXIT_CODES[self.category]


class ContractError(PalstreamError):
    """A precondition on arguments was violated (dimension mismatch, bad range)."""

    category = "usage"


class FormatError(PalstreamError):
    """A byte stream or text document does not match its declared format."""

    category = "format"


class ProfileError(FormatError):
    """A device profile is missing a key, has an unparseable value, or is out of range."""


class NumericError(PalstreamError):
    """A computation is numerically undefined for the given data."""

    category = "numeric"


class SingularDesignError(NumericError):
    """The regression design matrix is rank deficient."""


class InfeasibleError(PalstreamError):
    """Inputs are well formed but the requested operation has no solution."""

    category = "infeasible"


class TraceError(InfeasibleError):
    """A bandwidth trace does not cover the requested session."""


def error_from_category(category: str, message: str) -> PalstreamError:
    """Rebuild a domain error from its wire representation."""
    cls = {
        "usage": ContractError,
        "format": FormatError,
        "numeric": NumericError,
        "infeasible": InfeasibleError,
    }.get(category, PalstreamError)
    return cls(message)
