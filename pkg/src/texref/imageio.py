"""Image decoding, channel separation, and dataset discovery.

Rasters are numpy arrays indexed ``[y, x]``; pixel (x, y) of an image is
``pixels[y, x]``.  Only 8-bit JPEG and PNG sources are accepted, and
grayscale sources are replicated across the three channels so that every
downstream stage sees an RGB raster.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path, PurePosixPath

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (
    DatasetError,
    ImageTooSmallError,
    UnreadableImageError,
    UnsupportedFormatError,
)

MIN_DIMENSION = 3

LABELING_RULES = ("simplicity", "by-subdirectory")

_ACCEPTED_FORMATS = {"JPEG", "PNG"}
_IMAGE_SUFFIXES = {".jpg", ".jpeg", ".png"}


@dataclass(eq=False)
class RgbImage:
    """Decoded 8-bit RGB raster of shape (height, width, 3)."""

    pixels: np.ndarray

    def __post_init__(self):
        pixels = np.asarray(self.pixels)
        if pixels.ndim != 3 or pixels.shape[2] != 3:
            raise ValueError(f"expected a (height, width, 3) array, got {pixels.shape}")
        if pixels.dtype != np.uint8:
            raise ValueError(f"expected uint8 pixels, got {pixels.dtype}")
        if pixels.shape[0] < MIN_DIMENSION or pixels.shape[1] < MIN_DIMENSION:
            raise ValueError(
                f"image {pixels.shape[1]}x{pixels.shape[0]} below the "
                f"{MIN_DIMENSION}x{MIN_DIMENSION} minimum"
            )
        self.pixels = pixels

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(eq=False)
class ChannelPlane:
    """Single 8-bit channel of shape (height, width)."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 2:
            raise ValueError(f"expected a 2-D array, got shape {values.shape}")
        if values.dtype != np.uint8:
            raise ValueError(f"expected uint8 values, got {values.dtype}")
        self.values = values

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class ManifestEntry:
    """One dataset image: numeric id, path relative to the root, class label."""

    image_id: int
    relative_path: str
    class_label: int


@dataclass(frozen=True)
class DatasetManifest:
    """Deterministic listing of a dataset directory.

    Entry order is a pure function of directory contents: entries are held
    in strictly increasing ``image_id`` order regardless of how the
    filesystem happened to enumerate files.
    """

    root: Path
    labeling: str
    entries: tuple[ManifestEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def class_counts(self) -> dict[int, int]:
        """Number of images per class label."""
        return dict(Counter(entry.class_label for entry in self.entries))

    def absolute_path(self, entry: ManifestEntry) -> Path:
        return self.root / entry.relative_path


def load_image(path) -> RgbImage:
    """Decode a JPEG or PNG file into an 8-bit RGB raster.

    Grayscale and palette sources are expanded to RGB (gray values are
    replicated into all three channels).  Raises a distinct error naming
    the path for unreadable files, non-JPEG/PNG formats, and images
    smaller than 3x3.
    """
    p = Path(path)
    try:
        with Image.open(p) as img:
            fmt = img.format
            if fmt not in _ACCEPTED_FORMATS:
                raise UnsupportedFormatError(
                    f"{p}: unsupported format {fmt or 'unknown'} (JPEG or PNG required)"
                )
            arr = np.asarray(img.convert("RGB"), dtype=np.uint8)
    except FileNotFoundError as exc:
        raise UnreadableImageError(f"{p}: file not found") from exc
    except UnidentifiedImageError as exc:
        raise UnreadableImageError(f"{p}: not a decodable image") from exc
    except OSError as exc:
        raise UnreadableImageError(f"{p}: {exc}") from exc
    height, width = arr.shape[:2]
    if height < MIN_DIMENSION or width < MIN_DIMENSION:
        raise ImageTooSmallError(
            f"{p}: image {width}x{height} below the {MIN_DIMENSION}x{MIN_DIMENSION} minimum"
        )
    return RgbImage(arr)


def split_channels(image: RgbImage) -> tuple[ChannelPlane, ChannelPlane, ChannelPlane]:
    """Split an RGB raster into its red, green, and blue planes.

    Pixel (x, y) of each plane equals the corresponding component of the
    source pixel (x, y); stacking the three planes back along the last
    axis reproduces the input exactly.
    """
    red, green, blue = (image.pixels[:, :, c].copy() for c in range(3))
    return ChannelPlane(red), ChannelPlane(green), ChannelPlane(blue)


def scan_dataset(root, labeling: str = "simplicity") -> DatasetManifest:
    """Enumerate a dataset directory under one of two labeling rules.

    ``simplicity``
        Flat directory of images with numeric filename stems; the class
        label of image ``id`` is ``id // 100`` (the Simplicity corpus
        packs 100 consecutive ids per class).
    ``by-subdirectory``
        One subdirectory per class; class indices follow sorted
        subdirectory names and image ids are assigned sequentially in
        (class, filename) order.

    Raises :class:`DatasetError` for an empty dataset, a non-numeric
    filename under the ``simplicity`` rule, or duplicate image ids.
    """
    rootp = Path(root)
    if not rootp.is_dir():
        raise DatasetError(f"{rootp}: not a directory")
    if labeling not in LABELING_RULES:
        raise ValueError(f"unknown labeling rule {labeling!r}, expected one of {LABELING_RULES}")

    if labeling == "simplicity":
        entries = _scan_simplicity(rootp)
    else:
        entries = _scan_by_subdirectory(rootp)
    if not entries:
        raise DatasetError(f"{rootp}: no images found")
    return DatasetManifest(rootp, labeling, tuple(entries))


def _is_image_file(path: Path) -> bool:
    return path.is_file() and path.suffix.lower() in _IMAGE_SUFFIXES


def _scan_simplicity(root: Path) -> list[ManifestEntry]:
    by_id: dict[int, str] = {}
    for path in sorted(root.iterdir()):
        if not _is_image_file(path):
            continue
        if not path.stem.isdigit():
            raise DatasetError(f"{path}: non-numeric filename stem under the simplicity rule")
        image_id = int(path.stem)
        if image_id in by_id:
            raise DatasetError(f"{path}: duplicate image id {image_id} (already {by_id[image_id]})")
        by_id[image_id] = path.name
    return [
        ManifestEntry(image_id, name, image_id // 100)
        for image_id, name in sorted(by_id.items())
    ]


def _scan_by_subdirectory(root: Path) -> list[ManifestEntry]:
    entries: list[ManifestEntry] = []
    next_id = 0
    subdirs = sorted(p for p in root.iterdir() if p.is_dir())
    for class_label, subdir in enumerate(subdirs):
        for path in sorted(p for p in subdir.iterdir() if _is_image_file(p)):
            relative = str(PurePosixPath(subdir.name) / path.name)
            entries.append(ManifestEntry(next_id, relative, class_label))
            next_id += 1
    return entries
