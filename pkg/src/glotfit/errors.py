"""Exception and warning types shared across the package."""


class GlotfitError(Exception):
    """Base class for all package-specific errors."""


class InvalidParams(GlotfitError, ValueError):
    """Parameter set violates a documented precondition."""


class NoRoot(GlotfitError):
    """A scalar constraint equation has no admissible root.

    Raised for degenerate glottal shapes, e.g. ta >= tc - te, where the
    return-phase equation cannot be satisfied by any positive decay rate.
    """


class DegenerateGrid(GlotfitError):
    """Rounding collapsed the per-cycle sample grid (duplicate or unusable
    phase boundaries)."""


class SingularNormalEquations(GlotfitError):
    """Least-squares design matrix is rank deficient beyond the ridge term
    (e.g. constant or identically-zero excitation)."""


class OrderTooLarge(GlotfitError):
    """Model order does not fit in the analysis window."""


class NyquistViolation(GlotfitError, ValueError):
    """Resonance frequency at or above fs/2."""


class NoVoicedRegion(GlotfitError):
    """No periodicity found in the plausible pitch range."""


class DegenerateSignal(GlotfitError):
    """Signal unusable for linear-prediction analysis (e.g. all zeros)."""


class Diverged(GlotfitError):
    """Training produced a non-finite loss."""


class EstimationFailed(GlotfitError):
    """Every analysis window of an utterance failed."""


class ZeroTruth(GlotfitError, ValueError):
    """Relative error against a zero-valued ground truth is undefined."""


class LengthMismatch(GlotfitError, ValueError):
    """Signals differ in length beyond the allowed alignment window."""


class FormatError(GlotfitError):
    """Malformed external file.

    Carries the byte offset at which parsing failed.
    """

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


class UnstableFilterWarning(UserWarning):
    """A synthesis filter has a pole on or outside the unit circle."""
