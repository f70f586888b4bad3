"""Retrieval benchmarking: per-query scoring, full-index evaluation, sweeps.

Every database image is issued as a query against the rest of the index.
For a query answered with N results, RR of which share the query's class
out of M same-class images available, precision is 100*RR/N and recall is
100*RR/M; by construction recall equals precision*N/M for every query.
With self-retrieval excluded (the default) M is the query's class size
minus one, with it included M is the full class size.  Aggregates are
unweighted means over queries, reported overall and per class.
"""

from __future__ import annotations

import csv
import time
import warnings
from dataclasses import dataclass

import numpy as np

from .fusion import default_config
from .imageio import DatasetManifest
from .index import FeatureIndex, QueryMatch, build_index
from .metrics import block_distances, validate_metric

CSV_COLUMNS = ("radius", "metric", "N", "class", "mean_precision", "mean_recall")
ALL_CLASSES = "ALL"


@dataclass(frozen=True)
class QueryOutcome:
    """Scores for one query at one result-list length."""

    query_id: int
    retrieved: int  # N: results requested
    related_retrieved: int  # RR: results sharing the query class
    related_available: int  # M: same-class images retrievable at all
    precision: float
    recall: float


@dataclass
class EvalReport:
    """Aggregated precision/recall for one (index, metric) evaluation.

    ``per_class[class][n]`` and ``overall[n]`` hold (mean precision,
    mean recall) pairs in percent; ``outcomes[n]`` keeps the individual
    query scores in index order.
    """

    radius: int
    metric: str
    n_values: tuple[int, ...]
    include_self: bool
    per_class: dict[int, dict[int, tuple[float, float]]]
    overall: dict[int, tuple[float, float]]
    outcomes: dict[int, tuple[QueryOutcome, ...]]
    query_seconds: float
    extraction_seconds: float = 0.0


def score_query(result, query_class: int, related_available: int, n: int,
                query_id: int = -1) -> QueryOutcome:
    """Score one ranked result list against its query's class.

    ``result`` is a sequence of :class:`QueryMatch`-like objects (anything
    with a ``class_label``), at most ``n`` long; ``related_available``
    counts the same-class images that could have been retrieved and must
    be positive for recall to be defined.
    """
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    if related_available < 1:
        raise ValueError(
            f"no retrievable images share the query class (available={related_available})"
        )
    result = list(result)
    if len(result) > n:
        raise ValueError(f"result holds {len(result)} matches, more than n={n}")
    related = sum(1 for match in result if match.class_label == query_class)
    return QueryOutcome(
        query_id=query_id,
        retrieved=n,
        related_retrieved=related,
        related_available=related_available,
        precision=100.0 * related / n,
        recall=100.0 * related / related_available,
    )


def evaluate(index: FeatureIndex, metric: str, n_values, include_self: bool = False) -> EvalReport:
    """Run every database image as a query and aggregate the scores.

    Needs at least two classes.  Classes too small to fill the largest
    result list only draw a warning (their precision is capped, not
    wrong); a class whose queries have no same-class images at all is an
    error because recall divides by that count.
    """
    validate_metric(metric)
    if not index.records:
        raise ValueError("index has no records")
    n_values = tuple(sorted({int(n) for n in n_values}))
    if not n_values or n_values[0] < 1:
        raise ValueError(f"n values must be positive integers, got {n_values}")

    counts = index.class_counts()
    if len(counts) < 2:
        raise ValueError(f"evaluation needs at least two classes, index has {len(counts)}")
    n_max = n_values[-1]
    required = n_max + (0 if include_self else 1)
    small = sorted(label for label, size in counts.items() if size < required)
    if small:
        warnings.warn(
            f"classes {small} have fewer than {required} members; "
            f"precision at N={n_max} is capped for their queries",
            stacklevel=2,
        )

    matrix = index.feature_matrix()
    ids = np.array([record.image_id for record in index.records], dtype=np.int64)
    neighbors = index.header.neighbors
    per_query: dict[int, list[QueryOutcome]] = {n: [] for n in n_values}
    per_class_acc: dict[int, dict[int, list[QueryOutcome]]] = {
        n: {label: [] for label in counts} for n in n_values
    }

    started = time.perf_counter()
    for i, record in enumerate(index.records):
        dists = block_distances(matrix[i], matrix, neighbors, metric)
        order = np.lexsort((ids, dists))
        if not include_self:
            order = order[order != i]
        top = order[:n_max]
        result = [
            QueryMatch(
                index.records[j].image_id,
                index.records[j].class_label,
                index.records[j].relative_path,
                float(dists[j]),
            )
            for j in top
        ]
        available = counts[record.class_label] - (0 if include_self else 1)
        for n in n_values:
            outcome = score_query(
                result[:n], record.class_label, available, n, query_id=record.image_id
            )
            per_query[n].append(outcome)
            per_class_acc[n][record.class_label].append(outcome)
    query_seconds = time.perf_counter() - started

    overall = {
        n: (
            float(np.mean([o.precision for o in outcomes])),
            float(np.mean([o.recall for o in outcomes])),
        )
        for n, outcomes in per_query.items()
    }
    per_class: dict[int, dict[int, tuple[float, float]]] = {}
    for label in sorted(counts):
        per_class[label] = {}
        for n in n_values:
            outcomes = per_class_acc[n][label]
            per_class[label][n] = (
                float(np.mean([o.precision for o in outcomes])),
                float(np.mean([o.recall for o in outcomes])),
            )

    return EvalReport(
        radius=index.header.radius,
        metric=metric,
        n_values=n_values,
        include_self=include_self,
        per_class=per_class,
        overall=overall,
        outcomes={n: tuple(outcomes) for n, outcomes in per_query.items()},
        query_seconds=query_seconds,
    )


def sweep(manifest: DatasetManifest, metric_list, radius_list, n_values,
          edge_detector: str = "sobel-otsu", uniformity_threshold: int | None = None,
          include_self: bool = False) -> list[EvalReport]:
    """Evaluate every (radius, metric) combination over one dataset.

    One index is built per radius and shared by that radius's metrics;
    builds are deterministic, so this is indistinguishable from building
    per cell.  Reports come back in radius-major, metric-minor order.
    """
    metric_list = [validate_metric(m) for m in metric_list]
    radius_list = list(radius_list)
    if not metric_list or not radius_list:
        raise ValueError("sweep needs at least one metric and one radius")
    reports = []
    for radius in radius_list:
        config = default_config(radius, edge_detector, uniformity_threshold)
        started = time.perf_counter()
        index = build_index(manifest, config)
        build_seconds = time.perf_counter() - started
        for metric in metric_list:
            report = evaluate(index, metric, n_values, include_self)
            report.extraction_seconds = build_seconds
            reports.append(report)
    return reports


def report_rows(reports) -> list[tuple]:
    """Flatten reports into CSV rows, one per (radius, metric, N, class)
    plus an ALL row per (radius, metric, N).  Percentages carry two
    decimals so identical runs serialize identically."""
    rows = []
    for report in reports:
        for n in report.n_values:
            for label in sorted(report.per_class):
                precision, recall = report.per_class[label][n]
                rows.append(
                    (report.radius, report.metric, n, label, f"{precision:.2f}", f"{recall:.2f}")
                )
            precision, recall = report.overall[n]
            rows.append(
                (report.radius, report.metric, n, ALL_CLASSES, f"{precision:.2f}", f"{recall:.2f}")
            )
    return rows


def write_csv(reports, path):
    """Write the flattened report table to ``path``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        writer.writerows(report_rows(reports))


def format_report(report: EvalReport) -> str:
    """Readable table for terminal output, percentages with two decimals."""
    lines = [
        f"radius {report.radius}, metric {report.metric}, "
        f"self-retrieval {'included' if report.include_self else 'excluded'}",
        f"{'N':>4}  {'class':>6}  {'precision':>9}  {'recall':>7}",
    ]
    for n in report.n_values:
        for label in sorted(report.per_class):
            precision, recall = report.per_class[label][n]
            lines.append(f"{n:>4}  {label:>6}  {precision:>9.2f}  {recall:>7.2f}")
        precision, recall = report.overall[n]
        lines.append(f"{n:>4}  {ALL_CLASSES:>6}  {precision:>9.2f}  {recall:>7.2f}")
    lines.append(f"query time: {report.query_seconds:.2f}s")
    return "\n".join(lines)
