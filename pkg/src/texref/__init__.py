"""Color-texture image retrieval.

Features fuse two per-channel texture histograms (circular binary
patterns and edge-neighbor patterns) into one block-structured vector;
matching sums per-block distances and ranking is exhaustive.  The
:mod:`texref.evaluation` module adds the all-queries precision/recall
benchmark and ``texref.cli`` the batch command line.
"""

from .descriptors import (
    BinaryEdgeMap,
    ElbpConfig,
    ElbpHistogram,
    NeighborhoodSample,
    NeighborhoodSpec,
    PrePuHistogram,
    detect_edges,
    elbp_histogram,
    elbp_label,
    lbp_code,
    prepu_histogram,
    prepu_label,
    sample_neighbors,
    uniformity,
)
from .evaluation import EvalReport, QueryOutcome, evaluate, score_query, sweep
from .fusion import ExtractionConfig, FeatureVector, default_config, extract_features
from .imageio import (
    ChannelPlane,
    DatasetManifest,
    ManifestEntry,
    RgbImage,
    load_image,
    scan_dataset,
    split_channels,
)
from .index import (
    FeatureIndex,
    IndexHeader,
    IndexRecord,
    QueryMatch,
    build_index,
    load_index,
    query,
    save_index,
)
from .metrics import METRIC_NAMES, distance, rank

__version__ = "0.1.0"

__all__ = [
    "BinaryEdgeMap",
    "ChannelPlane",
    "DatasetManifest",
    "ElbpConfig",
    "ElbpHistogram",
    "EvalReport",
    "ExtractionConfig",
    "FeatureIndex",
    "FeatureVector",
    "IndexHeader",
    "IndexRecord",
    "METRIC_NAMES",
    "ManifestEntry",
    "NeighborhoodSample",
    "NeighborhoodSpec",
    "PrePuHistogram",
    "QueryMatch",
    "QueryOutcome",
    "RgbImage",
    "build_index",
    "default_config",
    "detect_edges",
    "distance",
    "elbp_histogram",
    "elbp_label",
    "evaluate",
    "extract_features",
    "lbp_code",
    "load_image",
    "load_index",
    "prepu_histogram",
    "prepu_label",
    "query",
    "rank",
    "sample_neighbors",
    "save_index",
    "scan_dataset",
    "score_query",
    "split_channels",
    "sweep",
    "uniformity",
]
