"""Exception hierarchy. The CLI maps any BlockprobeError to exit code 1,
printing the concrete class name so callers can script against it."""


class BlockprobeError(Exception):
    """Base class for all pipeline errors."""


class ImageDecodeError(BlockprobeError):
    """Raised when an image file cannot be decoded."""


class ManifestError(BlockprobeError):
    """Malformed or inconsistent image manifest."""


class ModelError(BlockprobeError):
    """Exported-graph parsing or execution failure."""


class LayoutNumericsError(BlockprobeError):
    """Layout optimization produced NaN coordinates."""


class CurveFitError(BlockprobeError):
    """Output-curve fit failed to reach the residual bound."""


class RetrievalError(BlockprobeError):
    """Query id missing or store id sets inconsistent."""


class StoreError(BlockprobeError):
    """Base class for feature-store I/O failures."""


class StoreMagicError(StoreError):
    """File does not start with the VAFS magic."""


class StoreVersionError(StoreError):
    """Unsupported feature-store version."""


class StoreTruncatedError(StoreError):
    """File ends mid-record or carries trailing bytes."""


class StoreDuplicateIdError(StoreError):
    """Two records share an image id."""


class StoreValueError(StoreError):
    """Non-finite values or inconsistent dimensions."""
