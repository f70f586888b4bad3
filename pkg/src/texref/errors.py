"""Exception types raised across the package."""


class TexrefError(Exception):
    """Base class for all package-specific failures."""


class ImageLoadError(TexrefError):
    """An image file could not be turned into an RGB raster."""


class UnreadableImageError(ImageLoadError):
    """File missing, unreadable, or not decodable as an image."""


class UnsupportedFormatError(ImageLoadError):
    """Decoded file is not JPEG or PNG."""


class ImageTooSmallError(ImageLoadError):
    """Decoded image is smaller than the 3x3 minimum."""


class DatasetError(TexrefError):
    """Dataset directory violates the selected labeling rule."""


class LayoutMismatchError(TexrefError):
    """Two feature vectors do not share the same block layout."""


class IndexBuildError(TexrefError):
    """Feature extraction failed for an image during an index build."""


class IndexFormatError(TexrefError):
    """Index file violates the on-disk format."""


class UnsupportedVersionError(IndexFormatError):
    """Index file was written with an unknown format version."""


class CorruptIndexError(IndexFormatError):
    """Index file is internally inconsistent."""


class TruncatedIndexError(IndexFormatError):
    """Index file ends before the advertised content."""
