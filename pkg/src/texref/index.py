"""Feature index: build, binary persistence, and single-image queries.

On-disk layout (version 1), all integers little-endian:

    u32                  header length in bytes
    header bytes         UTF-8 JSON object with keys {version, radius,
                         neighbors, uniformity_threshold, edge_detector,
                         labeling, feature_length, count}
    count times:
        u32              image id
        u16              class label
        u16              path length in bytes
        path bytes       UTF-8 relative path
        feature bytes    feature_length * f64

No compression and no optional fields; the JSON is dumped with sorted
keys and no whitespace, so rebuilding the same dataset with the same
config writes a byte-identical file.
"""

from __future__ import annotations

import json
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path, PurePath

import numpy as np

from .descriptors import ElbpConfig, NeighborhoodSpec, parse_edge_config
from .errors import (
    CorruptIndexError,
    IndexBuildError,
    TruncatedIndexError,
    UnsupportedVersionError,
)
from .fusion import ExtractionConfig, extract_features, feature_length
from .imageio import LABELING_RULES, DatasetManifest, load_image
from .metrics import DEFAULT_METRIC, block_distances, validate_metric

FORMAT_VERSION = 1

# Caps feature-extraction threads during builds; unset or 0 keeps the
# serial default.
THREADS_ENV_VAR = "TEXREF_THREADS"

_HEADER_KEYS = (
    "version",
    "radius",
    "neighbors",
    "uniformity_threshold",
    "edge_detector",
    "labeling",
    "feature_length",
    "count",
)


@dataclass(frozen=True)
class IndexHeader:
    """Self-describing metadata stored ahead of the records."""

    version: int
    radius: int
    neighbors: int
    uniformity_threshold: int
    edge_detector: str
    labeling: str
    feature_length: int
    count: int


@dataclass(eq=False)
class IndexRecord:
    """One database image: identity, label, path, and its feature vector."""

    image_id: int
    class_label: int
    relative_path: str
    features: np.ndarray


@dataclass(frozen=True)
class QueryMatch:
    """One ranked retrieval result."""

    image_id: int
    class_label: int
    relative_path: str
    distance: float


class FeatureIndex:
    """Header plus records, with a lazily stacked feature matrix."""

    def __init__(self, header: IndexHeader, records):
        self.header = header
        self.records = list(records)
        if header.count != len(self.records):
            raise ValueError(
                f"header advertises {header.count} records, got {len(self.records)}"
            )
        for record in self.records:
            if record.features.size != header.feature_length:
                raise ValueError(
                    f"{record.relative_path}: feature length {record.features.size} "
                    f"does not match header ({header.feature_length})"
                )
        self._matrix = None

    def __len__(self) -> int:
        return len(self.records)

    def feature_matrix(self) -> np.ndarray:
        if self._matrix is None:
            self._matrix = np.stack([record.features for record in self.records])
        return self._matrix

    def extraction_config(self) -> ExtractionConfig:
        header = self.header
        return ExtractionConfig(
            ElbpConfig(NeighborhoodSpec(header.radius), header.uniformity_threshold),
            header.edge_detector,
        )

    def class_counts(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for record in self.records:
            counts[record.class_label] = counts.get(record.class_label, 0) + 1
        return counts


def worker_count() -> int:
    """Extraction workers for builds, from the environment cap."""
    raw = os.environ.get(THREADS_ENV_VAR, "").strip()
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV_VAR} must be an integer, got {raw!r}") from None
    if value < 0:
        raise ValueError(f"{THREADS_ENV_VAR} must be non-negative, got {value}")
    return value if value > 0 else 1


def build_index(manifest: DatasetManifest, config: ExtractionConfig) -> FeatureIndex:
    """Extract features for every manifest entry, in manifest order.

    Any image that fails to load or extract aborts the whole build with an
    error naming the offending path; there are no partial indexes.
    Extraction may run on several threads (see ``TEXREF_THREADS``) but the
    record order always matches the manifest.
    """
    if not manifest.entries:
        raise ValueError("manifest has no entries")

    def extract_one(entry):
        path = manifest.absolute_path(entry)
        try:
            image = load_image(path)
            features = extract_features(image, config)
        except Exception as exc:
            raise IndexBuildError(f"{path}: {exc}") from exc
        return IndexRecord(entry.image_id, entry.class_label, entry.relative_path, features.values)

    workers = worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(extract_one, manifest.entries))
    else:
        records = [extract_one(entry) for entry in manifest.entries]

    spec = config.neighborhood
    header = IndexHeader(
        version=FORMAT_VERSION,
        radius=spec.radius,
        neighbors=spec.neighbor_count,
        uniformity_threshold=config.elbp.uniformity_threshold,
        edge_detector=config.edge_detector,
        labeling=manifest.labeling,
        feature_length=feature_length(spec.neighbor_count),
        count=len(records),
    )
    return FeatureIndex(header, records)


def save_index(index: FeatureIndex, path):
    """Write an index to disk in the version-1 binary layout."""
    header = index.header
    blob = json.dumps(
        {
            "version": header.version,
            "radius": header.radius,
            "neighbors": header.neighbors,
            "uniformity_threshold": header.uniformity_threshold,
            "edge_detector": header.edge_detector,
            "labeling": header.labeling,
            "feature_length": header.feature_length,
            "count": header.count,
        },
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for record in index.records:
            path_bytes = record.relative_path.encode("utf-8")
            fh.write(struct.pack("<IHH", record.image_id, record.class_label, len(path_bytes)))
            fh.write(path_bytes)
            fh.write(np.ascontiguousarray(record.features, dtype="<f8").tobytes())


def load_index(path) -> FeatureIndex:
    """Read and validate an index file.

    Raises :class:`UnsupportedVersionError` for unknown format versions,
    :class:`TruncatedIndexError` when the file ends early, and
    :class:`CorruptIndexError` for malformed headers or header/record
    inconsistencies (including trailing bytes past the last record).
    """
    p = Path(path)
    with open(p, "rb") as fh:
        header = _read_header(fh, p)
        records = []
        for _ in range(header.count):
            image_id, class_label, path_len = struct.unpack(
                "<IHH", _read_exact(fh, 8, p, "record header")
            )
            rel_path = _read_exact(fh, path_len, p, "record path").decode("utf-8")
            blob = _read_exact(fh, 8 * header.feature_length, p, "record features")
            features = np.frombuffer(blob, dtype="<f8").astype(np.float64)
            records.append(IndexRecord(image_id, class_label, rel_path, features))
        if fh.read(1):
            raise CorruptIndexError(f"{p}: trailing bytes after the last record")
    return FeatureIndex(header, records)


def _read_exact(fh, size: int, path: Path, what: str) -> bytes:
    blob = fh.read(size)
    if len(blob) != size:
        raise TruncatedIndexError(
            f"{path}: truncated file, {what} needs {size} bytes, got {len(blob)}"
        )
    return blob


def _read_header(fh, path: Path) -> IndexHeader:
    (blob_len,) = struct.unpack("<I", _read_exact(fh, 4, path, "header length"))
    blob = _read_exact(fh, blob_len, path, "header")
    try:
        raw = json.loads(blob.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptIndexError(f"{path}: header is not valid JSON ({exc})") from exc
    if not isinstance(raw, dict) or set(raw) != set(_HEADER_KEYS):
        raise CorruptIndexError(f"{path}: header keys {sorted(raw)!r} do not match the format")
    version = raw["version"]
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(
            f"{path}: unsupported index version {version!r} (supported: {FORMAT_VERSION})"
        )
    try:
        header = IndexHeader(
            version=int(version),
            radius=int(raw["radius"]),
            neighbors=int(raw["neighbors"]),
            uniformity_threshold=int(raw["uniformity_threshold"]),
            edge_detector=str(raw["edge_detector"]),
            labeling=str(raw["labeling"]),
            feature_length=int(raw["feature_length"]),
            count=int(raw["count"]),
        )
    except (TypeError, ValueError) as exc:
        raise CorruptIndexError(f"{path}: malformed header field ({exc})") from exc
    _check_header(header, path)
    return header


def _check_header(header: IndexHeader, path: Path):
    problems = []
    if header.radius not in (1, 2, 3):
        problems.append(f"radius {header.radius}")
    elif header.neighbors != 8 * header.radius:
        problems.append(f"neighbors {header.neighbors} for radius {header.radius}")
    elif header.feature_length != feature_length(header.neighbors):
        problems.append(
            f"feature length {header.feature_length}, expected "
            f"{feature_length(header.neighbors)} for {header.neighbors} neighbors"
        )
    if header.uniformity_threshold < 0:
        problems.append(f"uniformity threshold {header.uniformity_threshold}")
    if header.labeling not in LABELING_RULES:
        problems.append(f"labeling {header.labeling!r}")
    if header.count < 0:
        problems.append(f"count {header.count}")
    try:
        parse_edge_config(header.edge_detector)
    except ValueError:
        problems.append(f"edge detector {header.edge_detector!r}")
    if problems:
        raise CorruptIndexError(f"{path}: inconsistent header ({'; '.join(problems)})")


def _matches_query_path(relative_path: str, query_path) -> bool:
    """True when the record and the query name the same file.

    The index stores root-relative paths while queries arrive as whatever
    the caller typed, so the record path has to match the trailing
    components of the query path.
    """
    rel_parts = PurePath(relative_path).parts
    query_parts = PurePath(str(query_path)).parts
    return len(query_parts) >= len(rel_parts) and query_parts[-len(rel_parts):] == rel_parts


def query(index: FeatureIndex, image_path, metric: str = DEFAULT_METRIC,
          n: int = 10, include_self: bool = False) -> list[QueryMatch]:
    """Rank the whole index against one image, nearest first.

    The query image is decoded and featurized with the index's stored
    config.  A record naming the query's own file is skipped unless
    ``include_self`` is set.  Ties are broken by ascending image id.
    Returns at most ``n`` matches (fewer when exclusion empties the pool).
    """
    validate_metric(metric)
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    if not index.records:
        raise ValueError("index has no records")
    config = index.extraction_config()
    image = load_image(image_path)
    features = extract_features(image, config)
    dists = block_distances(
        features.values, index.feature_matrix(), index.header.neighbors, metric
    )
    ids = np.array([record.image_id for record in index.records], dtype=np.int64)
    order = np.lexsort((ids, dists))
    matches = []
    for i in order:
        record = index.records[i]
        if not include_self and _matches_query_path(record.relative_path, image_path):
            continue
        matches.append(
            QueryMatch(record.image_id, record.class_label, record.relative_path, float(dists[i]))
        )
        if len(matches) == n:
            break
    return matches
