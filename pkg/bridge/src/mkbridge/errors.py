"""Domain errors for the bridge, each carrying a stable code string."""


class BridgeError(Exception):
    @property
    def code(self) -> str:
        return type(self).__name__


class UnknownModel(BridgeError):
    """Model name does not resolve to a known architecture."""


class ShapeMismatch(BridgeError):
    """A tensor does not have the expected depthwise shape."""


class CoverageGap(BridgeError):
    """Assignment rows do not cover the exported (layer, channel) set."""


class HashMismatch(BridgeError):
    """Assignment references candidates outside the provided bank."""


class DatasetMissing(BridgeError):
    """The evaluation dataset root does not exist or is empty."""


class BadMagic(BridgeError):
    """File does not start with the expected magic bytes."""


class UnsupportedVersion(BridgeError):
    """Format version is not supported."""


class TruncatedFile(BridgeError):
    """File ends before the declared payload."""


class ZeroVariance(BridgeError):
    """A candidate filter is constant and cannot be normalized."""


class SkippedLayerWarning(UserWarning):
    """A depthwise layer was excluded (non-7x7 kernel)."""
