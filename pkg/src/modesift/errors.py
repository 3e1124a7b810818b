"""Exception types raised by modesift.

Every domain failure derives from ModesiftError so callers (and the CLI)
can distinguish contract violations from programming errors.
"""


class ModesiftError(Exception):
    """Base class for all modesift domain errors."""


# --- sequence I/O ---

class MalformedHeaderError(ModesiftError):
    """Raw tensor file has a bad magic, truncated header, or inconsistent sizes."""


class DimensionMismatchError(ModesiftError):
    """Array shapes violate a structural requirement (frame dims, snapshot shapes)."""


class TooFewFramesError(ModesiftError):
    """A sequence needs at least two frames."""


class IoFailureError(ModesiftError):
    """Reading or writing sequence data failed at the filesystem level."""


# --- decomposition ---

class DegenerateInputError(ModesiftError):
    """Snapshot matrix is numerically zero; no modes can be extracted."""


class EigFailureError(ModesiftError):
    """Eigendecomposition of the reduced operator did not converge."""


class EmptyMaskError(ModesiftError):
    """Reconstruction was asked to use an all-false mode mask."""


# --- sparsity selection ---

class AllZeroError(ModesiftError):
    """Every amplitude fell below the zero threshold; no structure to keep."""


# --- sampling ---

class TooShortError(ModesiftError):
    """A sampling strategy would retain fewer than two frames."""


# --- analysis ---

class MixedFpsError(ModesiftError):
    """Aggregation requires all decompositions to share one frame rate."""


class LengthMismatchError(ModesiftError):
    """Profile inputs disagree about sequence length or mode count."""


# --- features ---

class SequenceTooShortError(ModesiftError):
    """Too few frames for the temporal radius of the descriptor."""


class FrameTooSmallError(ModesiftError):
    """Frame dimensions cannot contain the spatial radii of the descriptor."""


# --- evaluation ---

class InsufficientSubjectsError(ModesiftError):
    """Leave-one-subject-out needs at least two distinct subjects."""


class InsufficientSamplesError(ModesiftError):
    """Leave-one-video-out needs at least two samples."""


class LabelOutsideClassSetError(ModesiftError):
    """A true or predicted label is not in the declared class set."""


class EmptyClassError(ModesiftError):
    """Classifier training set is empty."""
