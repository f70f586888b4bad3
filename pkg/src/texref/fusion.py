"""Fusion of per-channel descriptor histograms into one feature vector.

Each color channel contributes two histograms: the binary-pattern
distribution (P+2 bins) followed by the edge-pattern distribution (P+1
bins).  Channels are always processed in red, green, blue order, giving
six blocks and 6P+9 values total: 57 for radius 1, 105 for radius 2, 153
for radius 3.  Blocks are concatenated as-is, with no renormalization of
the full vector, so each block keeps its own unit mass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .descriptors import (
    DEFAULT_EDGE_DETECTOR,
    ElbpConfig,
    NeighborhoodSpec,
    detect_edges,
    elbp_histogram,
    parse_edge_config,
    prepu_histogram,
)
from .imageio import RgbImage, split_channels

CHANNEL_ORDER = ("red", "green", "blue")
BLOCKS_PER_VECTOR = 6


def feature_length(neighbor_count: int) -> int:
    """Total fused vector length for a ring of P points: 3 * ((P+2) + (P+1))."""
    return 6 * neighbor_count + 9


def block_slices(neighbor_count: int) -> tuple[slice, ...]:
    """Slices of the six blocks, in channel-major order.

    For each channel the binary-pattern block (P+2 values) comes first,
    the edge-pattern block (P+1 values) second.
    """
    sizes = (neighbor_count + 2, neighbor_count + 1) * 3
    slices = []
    start = 0
    for size in sizes:
        slices.append(slice(start, start + size))
        start += size
    return tuple(slices)


@dataclass(frozen=True)
class ExtractionConfig:
    """Everything needed to reproduce a feature vector from an image."""

    elbp: ElbpConfig
    edge_detector: str = DEFAULT_EDGE_DETECTOR

    def __post_init__(self):
        parse_edge_config(self.edge_detector)

    @property
    def neighborhood(self) -> NeighborhoodSpec:
        return self.elbp.spec


def default_config(radius: int = 1, edge_detector: str = DEFAULT_EDGE_DETECTOR,
                   uniformity_threshold: int | None = None) -> ExtractionConfig:
    """Convenience constructor from the scalar settings."""
    return ExtractionConfig(
        ElbpConfig(NeighborhoodSpec(radius), uniformity_threshold), edge_detector
    )


@dataclass(eq=False)
class FeatureVector:
    """Fused descriptor with the ring size needed to recover block bounds."""

    values: np.ndarray
    neighbor_count: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        expected = feature_length(self.neighbor_count)
        if values.ndim != 1 or values.size != expected:
            raise ValueError(
                f"feature vector must be 1-D with {expected} values for "
                f"{self.neighbor_count} neighbors, got shape {values.shape}"
            )
        self.values = values

    def blocks(self) -> tuple[np.ndarray, ...]:
        return tuple(self.values[s] for s in block_slices(self.neighbor_count))


def extract_features(image: RgbImage, config: ExtractionConfig) -> FeatureVector:
    """Compute the fused per-channel descriptor of one image.

    Deterministic: identical pixels and config produce bit-identical
    vectors, which is what makes index rebuilds byte-stable.
    """
    blocks = []
    for plane in split_channels(image):
        blocks.append(elbp_histogram(plane, config.elbp).bins)
        edges = detect_edges(plane, config.edge_detector)
        blocks.append(prepu_histogram(edges, config.elbp.spec).bins)
    return FeatureVector(np.concatenate(blocks), config.neighborhood.neighbor_count)
