"""Exception types shared across the package."""


class PromptsegError(Exception):
    """Base class for all package errors."""


class EmptySource(PromptsegError):
    """An operation requiring a non-empty mask received an empty one."""


class NoBackground(PromptsegError):
    """Negative points were requested but the mask covers the whole grid."""


class DimensionMismatch(PromptsegError):
    """Two grids that must share dimensions do not."""


class EmptyInput(PromptsegError):
    """An aggregation received no rows."""


class ChannelCount(PromptsegError):
    """A channel-composition input has the wrong number of channels."""


class NotSquare(PromptsegError):
    """A resize step requires a square input."""


class IdOverflow(PromptsegError):
    """An instance id does not fit the 16-bit label file format."""


class EmptyDataset(PromptsegError):
    """Manifest building found no samples."""


class IncompatibleDims(PromptsegError):
    """Pixel shuffle would produce a non-integral dimension."""


class WidthMismatch(PromptsegError):
    """Token vectors of differing widths were combined."""


class NoVisualTokens(PromptsegError):
    """A token sequence has no visual prefix to split off."""


class DegeneratePrompts(PromptsegError):
    """A positive and a negative prompt point coincide."""


class PackingFailure(PromptsegError):
    """Synthetic instance placement failed after bounded retries."""


class ProtocolError(PromptsegError):
    """A remote segmentation backend returned a malformed response."""


class Unreachable(PromptsegError):
    """A remote segmentation backend could not be contacted."""


class Timeout(PromptsegError):
    """A remote segmentation call exceeded its deadline."""
