"""Per-plane texture operators.

Two per-pixel labelings drive the retrieval features:

* binary-pattern labels: every pixel is compared against points sampled on
  a circle around it; rings with few 0/1 transitions get labeled by their
  count of set bits, all remaining rings collapse into one catch-all label;
* edge-pattern labels: after binarizing the plane with an edge detector,
  an edge pixel is labeled by how many of its circular neighbors are also
  edges, and every non-edge pixel is labeled 0.

Label occurrence probabilities over all interior pixels (those whose whole
sampling ring fits inside the plane; the border contributes nothing) form
the per-plane histograms consumed by the fusion stage.

The sampling ring places point k of P at angle 2*pi*(k-1)/P from the
positive x axis, offset (R*cos, -R*sin) from the center so that angles
grow counterclockwise in image coordinates.  Off-grid points are read with
bilinear interpolation on intensity planes and with nearest-pixel rounding
on binary edge maps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

SUPPORTED_RADII = (1, 2, 3)

# Interpolated neighbor reads carry float round-off; a difference this close
# to zero is an exact tie in real arithmetic (integer planes keep genuinely
# unequal samples several orders of magnitude further from the center value)
# and ties must compare as "greater or equal".
TIE_EPS = 1e-9

# Ring coordinates this close to a grid point are trigonometric round-off.
_SNAP_EPS = 1e-9

# Largest 3x3 Sobel response on an 8-bit plane: both gradients at 4*255.
MAX_SOBEL_MAGNITUDE = 1020.0 * math.sqrt(2.0)

EDGE_DETECTORS = ("sobel-otsu", "roberts-otsu", "sobel-fixed:<threshold>")
DEFAULT_EDGE_DETECTOR = "sobel-otsu"
MIN_EDGE_SIDE = 3


@dataclass(frozen=True)
class NeighborhoodSpec:
    """Circular sampling ring with 8 points per unit of radius."""

    radius: int

    def __post_init__(self):
        if self.radius not in SUPPORTED_RADII:
            raise ValueError(f"radius must be one of {SUPPORTED_RADII}, got {self.radius!r}")

    @property
    def neighbor_count(self) -> int:
        return 8 * self.radius


@dataclass(frozen=True)
class ElbpConfig:
    """Binary-pattern settings: ring shape plus the transition-count cutoff.

    Rings whose 0/1 transition count exceeds ``uniformity_threshold`` fall
    into the catch-all bin.  The default cutoff is a quarter of the ring
    size (2, 4, and 6 for radii 1, 2, and 3).
    """

    spec: NeighborhoodSpec
    uniformity_threshold: int | None = None

    def __post_init__(self):
        if self.uniformity_threshold is None:
            object.__setattr__(self, "uniformity_threshold", self.spec.neighbor_count // 4)
        if not isinstance(self.uniformity_threshold, int) or self.uniformity_threshold < 0:
            raise ValueError(
                f"uniformity threshold must be a non-negative integer, got {self.uniformity_threshold!r}"
            )


@dataclass(frozen=True)
class NeighborhoodSample:
    """Center intensity plus the ring intensities read around it, in ring order."""

    center_intensity: float
    neighbor_intensities: tuple[float, ...]

    def __post_init__(self):
        if not self.neighbor_intensities:
            raise ValueError("a sample needs at least one neighbor intensity")
        values = (self.center_intensity, *self.neighbor_intensities)
        if any(not 0.0 <= v <= 255.0 for v in values):
            raise ValueError("sample intensities must lie in [0, 255]")


@dataclass(eq=False)
class ElbpHistogram:
    """Binary-pattern label probabilities: bins 0..P for uniform rings with
    that many set bits, bin P+1 for the catch-all."""

    bins: np.ndarray

    def __post_init__(self):
        bins = np.asarray(self.bins, dtype=np.float64)
        _check_histogram(bins)
        self.bins = bins


@dataclass(eq=False)
class PrePuHistogram:
    """Edge-pattern label probabilities: bin 0 for non-edge pixels, bins
    1..P for edge pixels by their count of edge neighbors."""

    bins: np.ndarray

    def __post_init__(self):
        bins = np.asarray(self.bins, dtype=np.float64)
        _check_histogram(bins)
        self.bins = bins


@dataclass(eq=False)
class BinaryEdgeMap:
    """Edge mask with the source plane's shape; strictly 0/1 valued."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 2:
            raise ValueError(f"expected a 2-D array, got shape {bits.shape}")
        if not np.isin(bits, (0, 1)).all():
            raise ValueError("edge map values must be 0 or 1")
        self.bits = bits.astype(np.uint8)

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]


def _check_histogram(bins: np.ndarray):
    if bins.ndim != 1:
        raise ValueError(f"histogram must be 1-D, got shape {bins.shape}")
    if (bins < 0.0).any():
        raise ValueError("histogram bins must be non-negative")
    total = float(bins.sum())
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"histogram bins must sum to 1, got {total!r}")


@dataclass(frozen=True)
class _RingPoint:
    dx: float
    dy: float
    ix: int  # floor(dx)
    iy: int  # floor(dy)
    fx: float  # dx - ix
    fy: float  # dy - iy
    on_grid: bool
    nx: int  # round(dx), used on binary maps
    ny: int  # round(dy)


def _snap(value: float) -> float:
    nearest = round(value)
    return float(nearest) if abs(value - nearest) <= _SNAP_EPS else value


@lru_cache(maxsize=None)
def ring_offsets(radius: int) -> tuple[_RingPoint, ...]:
    """Precomputed sample offsets for one ring, shared by every read path.

    The fractional parts are derived once per radius so that scalar and
    vectorized sampling use bit-identical interpolation weights.
    """
    count = 8 * radius
    points = []
    for k in range(count):
        angle = 2.0 * math.pi * k / count
        dx = _snap(radius * math.cos(angle))
        dy = _snap(-radius * math.sin(angle))
        ix = math.floor(dx)
        iy = math.floor(dy)
        fx = dx - ix
        fy = dy - iy
        points.append(
            _RingPoint(
                dx, dy, int(ix), int(iy), fx, fy,
                fx == 0.0 and fy == 0.0,
                int(round(dx)), int(round(dy)),
            )
        )
    return tuple(points)


def sample_neighbors(plane, cx: int, cy: int, spec: NeighborhoodSpec) -> NeighborhoodSample:
    """Read the ring around pixel (cx, cy) of an intensity plane.

    The center must sit at least ``radius`` pixels away from every border;
    there is no padding.  On-grid ring points are read directly, off-grid
    points with bilinear interpolation from the four surrounding pixels
    (exact for constant and linear intensity fields).
    """
    values = plane.values
    height, width = values.shape
    r = spec.radius
    if not (r <= cx < width - r and r <= cy < height - r):
        raise ValueError(
            f"center ({cx}, {cy}) with radius {r} does not fit inside a {width}x{height} plane"
        )
    neighbors = []
    for point in ring_offsets(r):
        if point.on_grid:
            neighbors.append(float(values[cy + point.iy, cx + point.ix]))
            continue
        y0 = cy + point.iy
        x0 = cx + point.ix
        v00 = float(values[y0, x0])
        v01 = float(values[y0, x0 + 1])
        v10 = float(values[y0 + 1, x0])
        v11 = float(values[y0 + 1, x0 + 1])
        top = v00 + point.fx * (v01 - v00)
        bottom = v10 + point.fx * (v11 - v10)
        neighbors.append(top + point.fy * (bottom - top))
    return NeighborhoodSample(float(values[cy, cx]), tuple(neighbors))


def _threshold_bits(sample: NeighborhoodSample) -> list[int]:
    center = sample.center_intensity
    return [1 if value - center >= -TIE_EPS else 0 for value in sample.neighbor_intensities]


def lbp_code(sample: NeighborhoodSample) -> int:
    """Pack the ring's threshold bits into an integer, first neighbor as
    the least significant bit.  A neighbor tied with the center reads 1."""
    code = 0
    for k, bit in enumerate(_threshold_bits(sample)):
        code += bit << k
    return code


def uniformity(sample: NeighborhoodSample) -> int:
    """Count 0/1 transitions around the ring, wraparound included.

    Always even: the ring is circular, so every departure from a run must
    be matched by a return.
    """
    bits = _threshold_bits(sample)
    transitions = abs(bits[0] - bits[-1])
    for k in range(1, len(bits)):
        transitions += abs(bits[k] - bits[k - 1])
    return transitions


def elbp_label(sample: NeighborhoodSample, config: ElbpConfig) -> int:
    """Label one ring: its count of set bits if the transition count stays
    within the configured cutoff, else the catch-all label P+1."""
    count = config.spec.neighbor_count
    if len(sample.neighbor_intensities) != count:
        raise ValueError(
            f"sample has {len(sample.neighbor_intensities)} neighbors, config expects {count}"
        )
    if uniformity(sample) <= config.uniformity_threshold:
        return sum(_threshold_bits(sample))
    return count + 1


def elbp_histogram(plane, config: ElbpConfig) -> ElbpHistogram:
    """Distribution of binary-pattern labels over all interior pixels.

    Bins are label counts divided by the number of interior pixels, so the
    result is invariant to plane size in expectation and always sums to 1.
    Raises for planes smaller than (2R+1)x(2R+1), which have no interior.
    """
    spec = config.spec
    r = spec.radius
    height, width = plane.values.shape
    _require_interior(width, height, r)
    labels = _elbp_label_map(plane.values, config)
    counts = np.bincount(labels.ravel(), minlength=spec.neighbor_count + 2)
    return ElbpHistogram(counts / labels.size)


def _require_interior(width: int, height: int, radius: int):
    side = 2 * radius + 1
    if height < side or width < side:
        raise ValueError(
            f"plane {width}x{height} too small for radius {radius} (needs {side}x{side})"
        )


def _elbp_label_map(values: np.ndarray, config: ElbpConfig) -> np.ndarray:
    """Vectorized per-pixel labeling over the interior grid.

    Walks the ring once, accumulating set bits and adjacent-bit transitions
    for every interior center simultaneously; reuses the exact offsets and
    weights of :func:`sample_neighbors`, so per-pixel results match the
    scalar path bit for bit.
    """
    spec = config.spec
    r = spec.radius
    plane = values.astype(np.float64)
    height, width = plane.shape
    center = plane[r:height - r, r:width - r]
    ones = np.zeros(center.shape, dtype=np.int64)
    transitions = np.zeros(center.shape, dtype=np.int64)
    first_bits = prev_bits = None
    for point in ring_offsets(r):
        bits = _shifted_values(plane, r, point) - center >= -TIE_EPS
        ones += bits
        if first_bits is None:
            first_bits = bits
        else:
            transitions += bits != prev_bits
        prev_bits = bits
    transitions += first_bits != prev_bits  # wraparound
    return np.where(transitions <= config.uniformity_threshold, ones, spec.neighbor_count + 1)


def _shifted_values(plane: np.ndarray, r: int, point: _RingPoint) -> np.ndarray:
    """Ring-point intensities for every interior center at once."""
    height, width = plane.shape
    rows0 = slice(r + point.iy, height - r + point.iy)
    cols0 = slice(r + point.ix, width - r + point.ix)
    if point.on_grid:
        return plane[rows0, cols0]
    rows1 = slice(r + point.iy + 1, height - r + point.iy + 1)
    cols1 = slice(r + point.ix + 1, width - r + point.ix + 1)
    v00 = plane[rows0, cols0]
    v01 = plane[rows0, cols1]
    v10 = plane[rows1, cols0]
    v11 = plane[rows1, cols1]
    top = v00 + point.fx * (v01 - v00)
    bottom = v10 + point.fx * (v11 - v10)
    return top + point.fy * (bottom - top)


def parse_edge_config(config: str) -> tuple[str, float | None]:
    """Split an edge-detector string into (operator, fixed threshold).

    ``sobel-otsu`` and ``roberts-otsu`` pick the threshold adaptively
    (``None``); ``sobel-fixed:<t>`` uses the raw gradient-magnitude value
    ``t``, validated against the largest response a 3x3 Sobel kernel can
    produce on 8-bit input.
    """
    if config == "sobel-otsu":
        return "sobel", None
    if config == "roberts-otsu":
        return "roberts", None
    if config.startswith("sobel-fixed:"):
        raw = config[len("sobel-fixed:"):]
        try:
            threshold = float(raw)
        except ValueError:
            raise ValueError(f"bad threshold {raw!r} in edge detector {config!r}") from None
        if not 0.0 <= threshold <= MAX_SOBEL_MAGNITUDE:
            raise ValueError(
                f"threshold {threshold} outside [0, {MAX_SOBEL_MAGNITUDE:.1f}]"
            )
        return "sobel", threshold
    raise ValueError(
        f"unknown edge detector {config!r}, expected one of {EDGE_DETECTORS}"
    )


def detect_edges(plane, detector: str = DEFAULT_EDGE_DETECTOR) -> BinaryEdgeMap:
    """Binarize an intensity plane with a gradient operator and threshold.

    Gradient magnitude is sqrt(gx^2 + gy^2) from either the 3x3 Sobel
    kernels or the 2x2 Roberts cross kernels.  Pixels where the kernel
    would overhang the border are 0.  Adaptive thresholding uses Otsu's
    method on the magnitude distribution; a plane with constant magnitude
    (no gradient contrast at all) yields an all-zero map rather than
    arbitrary edges.
    """
    operator, fixed = parse_edge_config(detector)
    values = plane.values
    height, width = values.shape
    if height < MIN_EDGE_SIDE or width < MIN_EDGE_SIDE:
        raise ValueError(
            f"plane {width}x{height} too small for edge detection "
            f"(needs {MIN_EDGE_SIDE}x{MIN_EDGE_SIDE})"
        )
    f = values.astype(np.float64)
    bits = np.zeros((height, width), dtype=np.uint8)
    if operator == "sobel":
        gx = (f[:-2, 2:] + 2.0 * f[1:-1, 2:] + f[2:, 2:]) - (
            f[:-2, :-2] + 2.0 * f[1:-1, :-2] + f[2:, :-2]
        )
        gy = (f[2:, :-2] + 2.0 * f[2:, 1:-1] + f[2:, 2:]) - (
            f[:-2, :-2] + 2.0 * f[:-2, 1:-1] + f[:-2, 2:]
        )
        magnitude = np.sqrt(gx * gx + gy * gy)
        region = (slice(1, height - 1), slice(1, width - 1))
    else:
        d1 = f[:-1, :-1] - f[1:, 1:]
        d2 = f[:-1, 1:] - f[1:, :-1]
        magnitude = np.sqrt(d1 * d1 + d2 * d2)
        region = (slice(0, height - 1), slice(0, width - 1))
    threshold = fixed if fixed is not None else _otsu_threshold(magnitude)
    bits[region] = magnitude > threshold
    return BinaryEdgeMap(bits)


def _otsu_threshold(magnitudes: np.ndarray) -> float:
    """Otsu's threshold over a 256-bin histogram of gradient magnitudes.

    Returns the center of the bin whose split maximizes between-class
    variance; callers classify with a strict "greater than".  A constant
    magnitude distribution has nothing to separate, so the threshold is
    pushed above the maximum and nothing classifies as edge.
    """
    lo = float(magnitudes.min())
    hi = float(magnitudes.max())
    if hi <= lo:
        return hi + 1.0
    counts, edges = np.histogram(magnitudes, bins=256, range=(lo, hi))
    counts = counts.astype(np.float64)
    centers = (edges[:-1] + edges[1:]) / 2.0
    below = np.cumsum(counts)[:-1]
    above = counts.sum() - below
    mass_below = np.cumsum(counts * centers)[:-1]
    mass_total = float((counts * centers).sum())
    valid = (below > 0) & (above > 0)
    mean_below = np.divide(mass_below, below, out=np.zeros_like(below), where=valid)
    mean_above = np.divide(mass_total - mass_below, above, out=np.zeros_like(above), where=valid)
    variance = np.where(valid, below * above * (mean_below - mean_above) ** 2, -1.0)
    return float(centers[int(np.argmax(variance))])


def prepu_label(edgemap: BinaryEdgeMap, cx: int, cy: int, spec: NeighborhoodSpec) -> int:
    """Label one pixel of a binary edge map.

    Non-edge centers are 0 no matter what surrounds them; edge centers get
    the count of edge pixels among their ring neighbors (ring points read
    at the nearest grid pixel, which for radius 1 is exactly the eight
    surrounding pixels).
    """
    bits = edgemap.bits
    height, width = bits.shape
    r = spec.radius
    if not (r <= cx < width - r and r <= cy < height - r):
        raise ValueError(
            f"center ({cx}, {cy}) with radius {r} does not fit inside a {width}x{height} map"
        )
    if bits[cy, cx] == 0:
        return 0
    return int(sum(int(bits[cy + point.ny, cx + point.nx]) for point in ring_offsets(r)))


def prepu_histogram(edgemap: BinaryEdgeMap, spec: NeighborhoodSpec) -> PrePuHistogram:
    """Distribution of edge-pattern labels over all interior pixels.

    P+1 bins (labels 0..P), normalized by the interior pixel count.
    Raises for maps smaller than (2R+1)x(2R+1).
    """
    bits = edgemap.bits
    height, width = bits.shape
    r = spec.radius
    _require_interior(width, height, r)
    center = bits[r:height - r, r:width - r]
    neighbor_ones = np.zeros(center.shape, dtype=np.int64)
    for point in ring_offsets(r):
        rows = slice(r + point.ny, height - r + point.ny)
        cols = slice(r + point.nx, width - r + point.nx)
        neighbor_ones += bits[rows, cols]
    labels = np.where(center == 1, neighbor_ones, 0)
    counts = np.bincount(labels.ravel(), minlength=spec.neighbor_count + 1)
    return PrePuHistogram(counts / labels.size)
