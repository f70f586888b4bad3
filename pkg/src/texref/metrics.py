"""Distances between fused feature vectors, and exhaustive ranking.

Every metric is accumulated block by block: the per-block value is
computed for each of the six histogram blocks and the six values are
summed.  For Euclidean distance this matters structurally, a sum of six
subnorms is not the norm of the whole vector; the other metrics follow
the same blockwise form for uniformity.

All kernels use elementwise numpy ops with row-independent reductions, so
a distance computed one pair at a time is bit-identical to the same row
of a bulk computation.
"""

from __future__ import annotations

import numpy as np

from .errors import LayoutMismatchError
from .fusion import FeatureVector, block_slices, feature_length

METRIC_NAMES = ("euclidean", "cosine", "cityblock", "canberra", "loglikelihood")
DEFAULT_METRIC = "euclidean"

# Keeps the log defined on empty bins.  Asymmetric by construction: the
# query weights the candidate's log-mass, so loglikelihood is exempt from
# the symmetry property the other metrics satisfy.
LOGLIKELIHOOD_EPS = 1e-10


def validate_metric(name: str) -> str:
    if name not in METRIC_NAMES:
        raise ValueError(f"unknown metric {name!r}, expected one of {METRIC_NAMES}")
    return name


def _require_same_layout(q: FeatureVector, d: FeatureVector):
    if q.neighbor_count != d.neighbor_count or q.values.size != d.values.size:
        raise LayoutMismatchError(
            f"feature layouts differ: {q.neighbor_count} neighbors / {q.values.size} values "
            f"vs {d.neighbor_count} / {d.values.size}"
        )


def block_distances(query_values: np.ndarray, candidate_matrix: np.ndarray,
                    neighbor_count: int, metric: str) -> np.ndarray:
    """Distance from one query vector to every row of a candidate matrix."""
    validate_metric(metric)
    expected = feature_length(neighbor_count)
    if query_values.size != expected or candidate_matrix.ndim != 2 \
            or candidate_matrix.shape[1] != expected:
        raise LayoutMismatchError(
            f"expected vectors of length {expected} for {neighbor_count} neighbors, "
            f"got query of {query_values.size} and candidates of shape "
            f"{candidate_matrix.shape}"
        )
    totals = np.zeros(candidate_matrix.shape[0], dtype=np.float64)
    for s in block_slices(neighbor_count):
        totals += _block_metric(metric, query_values[s], candidate_matrix[:, s])
    return totals


def _block_metric(metric: str, qb: np.ndarray, cb: np.ndarray) -> np.ndarray:
    if metric == "euclidean":
        return np.sqrt(((cb - qb) ** 2).sum(axis=1))
    if metric == "cityblock":
        return np.abs(cb - qb).sum(axis=1)
    if metric == "canberra":
        num = np.abs(cb - qb)
        den = np.abs(cb) + np.abs(qb)
        # 0/0 components contribute nothing.
        return np.divide(num, den, out=np.zeros_like(num), where=den > 0).sum(axis=1)
    if metric == "cosine":
        qnorm = np.sqrt((qb * qb).sum())
        cnorms = np.sqrt((cb * cb).sum(axis=1))
        if qnorm == 0.0:
            # Zero-norm blocks are all-zero: equal blocks at distance 0,
            # otherwise maximal dissimilarity.
            return np.where(cnorms == 0.0, 0.0, 1.0)
        dots = (cb * qb).sum(axis=1)
        safe_norms = np.where(cnorms > 0.0, cnorms, 1.0)
        return np.where(cnorms > 0.0, 1.0 - dots / (qnorm * safe_norms), 1.0)
    # loglikelihood
    return -(np.log(cb + LOGLIKELIHOOD_EPS) * qb).sum(axis=1)


def distance(q: FeatureVector, d: FeatureVector, metric: str = DEFAULT_METRIC) -> float:
    """Blockwise distance between two feature vectors of the same layout."""
    _require_same_layout(q, d)
    return float(block_distances(q.values, d.values[np.newaxis, :], q.neighbor_count, metric)[0])


def rank(query_features: FeatureVector, candidates, metric: str = DEFAULT_METRIC,
         top_n: int = 10) -> list[tuple[int, float]]:
    """Exhaustively score ``(id, FeatureVector)`` candidates and keep the top.

    Returns at most ``top_n`` ``(id, distance)`` pairs in ascending
    distance order, ties broken by ascending id so the ordering is a pure
    function of the candidate set.
    """
    if top_n < 1:
        raise ValueError(f"top_n must be at least 1, got {top_n}")
    candidates = list(candidates)
    if not candidates:
        raise ValueError("empty candidate list")
    for _, features in candidates:
        _require_same_layout(query_features, features)
    ids = np.array([cid for cid, _ in candidates], dtype=np.int64)
    matrix = np.stack([features.values for _, features in candidates])
    dists = block_distances(query_features.values, matrix, query_features.neighbor_count, metric)
    order = np.lexsort((ids, dists))[:top_n]
    return [(int(ids[i]), float(dists[i])) for i in order]
