"""Exception and warning types shared across the package."""


class WnlsError(Exception):
    """Base class for all package errors."""


class DivergedFieldError(WnlsError):
    """A field contains NaN/Inf samples where finite data is required."""


class InvalidFrequencyError(WnlsError):
    """Frequency cutoff N must be positive."""


class InvalidCouplingError(WnlsError):
    """Coupling constants must be nonzero to derive weights."""


class InvalidParamsError(WnlsError):
    """System parameters violate a structural constraint."""


class UnsupportedDimensionError(WnlsError):
    """Operation is only defined for a specific spatial dimension."""


class NotFocusingError(WnlsError):
    """Blowup certification requires focusing couplings (both negative)."""


class NotEnoughDataError(WnlsError):
    """Too few samples to evaluate the requested verdict."""


class FormatError(WnlsError):
    """Checkpoint bytes do not match the expected layout.

    Carries the byte offset at which decoding failed.
    """

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message if offset is None else f"{message} (offset {offset})")
        self.offset = offset


class UnsupportedVersionError(WnlsError):
    """Checkpoint version is not understood by this build."""


class ConfigError(WnlsError):
    """Configuration text failed validation.

    ``errors`` is a list of (line_number, message) pairs; line_number is 0
    for file-level problems such as missing mandatory sections.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        lines = "; ".join(f"line {ln}: {msg}" for ln, msg in self.errors)
        super().__init__(f"invalid config: {lines}")


class TruncationUnreliableWarning(UserWarning):
    """Mass near the domain boundary exceeds the configured tolerance.

    Functionals that rely on spatial decay (variance, x-weighted norms)
    are no longer faithful to their whole-space counterparts.
    """
