class ExportError(Exception):
    """Base class for everything this package raises on purpose."""


class AudioError(ExportError):
    """Audio file cannot be decoded or has the wrong shape/rate."""


class LayerError(ExportError):
    """Requested encoder layer index is outside 1..n."""
