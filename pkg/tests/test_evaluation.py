"""Precision/recall scoring, whole-index evaluation, sweeps, CSV output."""

import csv

import numpy as np
import pytest

from texref.evaluation import (
    ALL_CLASSES,
    CSV_COLUMNS,
    EvalReport,
    QueryOutcome,
    evaluate,
    format_report,
    report_rows,
    score_query,
    sweep,
    write_csv,
)
from texref.fusion import default_config
from texref.imageio import scan_dataset
from texref.index import QueryMatch, build_index

from conftest import constant_image, write_image, write_two_class_corpus


def matches_with_classes(classes):
    return [QueryMatch(i, c, f"{i}.png", float(i)) for i, c in enumerate(classes)]


def corpus_index(root, radius=1):
    return build_index(scan_dataset(root, "simplicity"), default_config(radius=radius))


# --- per-query scoring -----------------------------------------------------


def test_score_query_worked_example():
    result = matches_with_classes([7] * 8 + [3] * 2)
    outcome = score_query(result, query_class=7, related_available=100, n=10, query_id=42)
    assert outcome.related_retrieved == 8
    assert outcome.precision == pytest.approx(80.0)
    assert outcome.recall == pytest.approx(8.0)
    assert outcome.query_id == 42
    assert outcome.retrieved == 10


def test_score_query_larger_window():
    result = matches_with_classes([1] * 31 + [0] * 9)
    outcome = score_query(result, query_class=1, related_available=100, n=40)
    assert outcome.precision == pytest.approx(77.5)
    assert outcome.recall == pytest.approx(31.0)


def test_score_query_recall_is_precision_times_ratio():
    rng = np.random.default_rng(7)
    for _ in range(50):
        n = int(rng.integers(1, 30))
        available = int(rng.integers(1, 60))
        labels = rng.integers(0, 3, size=n).tolist()
        outcome = score_query(matches_with_classes(labels), 1, available, n)
        assert outcome.recall == pytest.approx(outcome.precision * n / available, rel=1e-12)


def test_score_query_short_result_counts_against_n():
    outcome = score_query(matches_with_classes([2, 2]), 2, 5, n=10)
    assert outcome.precision == pytest.approx(20.0)
    assert outcome.recall == pytest.approx(40.0)


def test_score_query_argument_validation():
    with pytest.raises(ValueError, match="at least 1"):
        score_query([], 0, 5, n=0)
    with pytest.raises(ValueError, match="share the query class"):
        score_query([], 0, 0, n=5)
    with pytest.raises(ValueError, match="more than n"):
        score_query(matches_with_classes([0, 0, 0]), 0, 5, n=2)


# --- whole-index evaluation ------------------------------------------------


def test_evaluate_separable_corpus_is_perfect(two_class_corpus):
    report = evaluate(corpus_index(two_class_corpus), "euclidean", [9])
    precision, recall = report.overall[9]
    assert precision == pytest.approx(100.0)
    assert recall == pytest.approx(100.0)
    for label in (0, 1):
        assert report.per_class[label][9] == (pytest.approx(100.0), pytest.approx(100.0))
    assert len(report.outcomes[9]) == 20
    assert report.radius == 1 and report.metric == "euclidean"
    assert report.query_seconds > 0.0


def test_evaluate_multiple_n_values(two_class_corpus):
    report = evaluate(corpus_index(two_class_corpus), "euclidean", [9, 5, 9, 1])
    assert report.n_values == (1, 5, 9)
    for n in (1, 5, 9):
        precision, _ = report.overall[n]
        assert precision == pytest.approx(100.0)
    # recall scales with the window when everything retrieved is related
    assert report.overall[1][1] == pytest.approx(100.0 / 9)
    assert report.overall[5][1] == pytest.approx(500.0 / 9)


def test_evaluate_include_self_uses_full_class_size(two_class_corpus):
    report = evaluate(corpus_index(two_class_corpus), "euclidean", [10], include_self=True)
    assert report.include_self is True
    for outcome in report.outcomes[10]:
        assert outcome.related_available == 10
    precision, recall = report.overall[10]
    assert precision == pytest.approx(100.0)
    assert recall == pytest.approx(100.0)


def test_evaluate_warns_when_window_exceeds_class(two_class_corpus):
    index = corpus_index(two_class_corpus)
    with pytest.warns(UserWarning, match="fewer than 20"):
        report = evaluate(index, "euclidean", [19])
    # 9 classmates in a window of 19 caps precision at 9/19
    precision, recall = report.overall[19]
    assert precision == pytest.approx(100.0 * 9 / 19)
    assert recall == pytest.approx(100.0)


def test_evaluate_rejects_single_class(tmp_path):
    root = tmp_path / "flat"
    root.mkdir()
    for i in range(4):
        write_image(root / f"{i}.png", constant_image(60 + 30 * i, side=16))
    with pytest.raises(ValueError, match="two classes"):
        evaluate(corpus_index(root), "euclidean", [3])


def test_evaluate_singleton_class_fails_without_self(tmp_path):
    root = tmp_path / "lonely"
    root.mkdir()
    write_image(root / "0.png", constant_image(50, side=16))
    write_image(root / "1.png", constant_image(90, side=16))
    write_image(root / "100.png", constant_image(200, side=16))  # class 1, alone
    index = corpus_index(root)
    with pytest.warns(UserWarning):
        with pytest.raises(ValueError, match="share the query class"):
            evaluate(index, "euclidean", [1])
    # with self-retrieval allowed even the singleton can fill a window of 1
    report = evaluate(index, "euclidean", [1], include_self=True)
    assert len(report.outcomes[1]) == 3


def test_evaluate_rejects_bad_n_values(two_class_corpus):
    index = corpus_index(two_class_corpus)
    with pytest.raises(ValueError):
        evaluate(index, "euclidean", [])
    with pytest.raises(ValueError):
        evaluate(index, "euclidean", [0, 5])


def test_evaluate_is_deterministic(two_class_corpus):
    index = corpus_index(two_class_corpus)
    first = evaluate(index, "cityblock", [5])
    second = evaluate(index, "cityblock", [5])
    assert first.overall == second.overall
    assert first.outcomes == second.outcomes or all(
        a.precision == b.precision and a.recall == b.recall
        for a, b in zip(first.outcomes[5], second.outcomes[5])
    )


def test_evaluate_beats_random_ranking_floor(two_class_corpus):
    # with 10-image classes in a 20-image pool, chance precision is ~47%
    report = evaluate(corpus_index(two_class_corpus), "canberra", [9])
    assert report.overall[9][0] > 60.0


# --- sweeps ----------------------------------------------------------------


def test_sweep_orders_radius_major(two_class_corpus):
    manifest = scan_dataset(two_class_corpus, "simplicity")
    reports = sweep(manifest, ["euclidean", "cityblock"], [1, 2], [5])
    assert [(r.radius, r.metric) for r in reports] == [
        (1, "euclidean"), (1, "cityblock"), (2, "euclidean"), (2, "cityblock"),
    ]
    for report in reports:
        assert report.extraction_seconds > 0.0
        assert report.overall[5][0] == pytest.approx(100.0)
    # one build per radius: metrics within a radius share the build time
    assert reports[0].extraction_seconds == reports[1].extraction_seconds


def test_sweep_validates_arguments(two_class_corpus):
    manifest = scan_dataset(two_class_corpus, "simplicity")
    with pytest.raises(ValueError):
        sweep(manifest, [], [1], [5])
    with pytest.raises(ValueError):
        sweep(manifest, ["euclidean"], [], [5])
    with pytest.raises(ValueError):
        sweep(manifest, ["nope"], [1], [5])


# --- report and CSV shaping ------------------------------------------------


def synthetic_report():
    return EvalReport(
        radius=1,
        metric="euclidean",
        n_values=(5, 10),
        include_self=False,
        per_class={
            0: {5: (90.0, 45.0), 10: (85.5, 85.5)},
            1: {5: (100.0, 50.0), 10: (95.25, 95.25)},
        },
        overall={5: (95.0, 47.5), 10: (90.375, 90.375)},
        outcomes={5: (), 10: ()},
        query_seconds=0.5,
    )


def test_report_rows_layout():
    rows = report_rows([synthetic_report()])
    assert rows == [
        (1, "euclidean", 5, 0, "90.00", "45.00"),
        (1, "euclidean", 5, 1, "100.00", "50.00"),
        (1, "euclidean", 5, ALL_CLASSES, "95.00", "47.50"),
        (1, "euclidean", 10, 0, "85.50", "85.50"),
        (1, "euclidean", 10, 1, "95.25", "95.25"),
        (1, "euclidean", 10, ALL_CLASSES, "90.38", "90.38"),
    ]


def test_write_csv_golden_bytes(tmp_path):
    target = tmp_path / "report.csv"
    write_csv([synthetic_report()], target)
    expected = (
        "radius,metric,N,class,mean_precision,mean_recall\r\n"
        "1,euclidean,5,0,90.00,45.00\r\n"
        "1,euclidean,5,1,100.00,50.00\r\n"
        "1,euclidean,5,ALL,95.00,47.50\r\n"
        "1,euclidean,10,0,85.50,85.50\r\n"
        "1,euclidean,10,1,95.25,95.25\r\n"
        "1,euclidean,10,ALL,90.38,90.38\r\n"
    )
    assert target.read_bytes().decode("utf-8") == expected
    with open(target, newline="") as fh:
        parsed = list(csv.reader(fh))
    assert parsed[0] == list(CSV_COLUMNS)


def test_csv_stable_across_runs(two_class_corpus, tmp_path):
    manifest = scan_dataset(two_class_corpus, "simplicity")
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    write_csv(sweep(manifest, ["euclidean"], [1], [5, 9]), first)
    write_csv(sweep(manifest, ["euclidean"], [1], [5, 9]), second)
    assert first.read_bytes() == second.read_bytes()


def test_format_report_shape():
    text = format_report(synthetic_report())
    lines = text.splitlines()
    assert lines[0] == "radius 1, metric euclidean, self-retrieval excluded"
    assert lines[1].split() == ["N", "class", "precision", "recall"]
    assert lines[2].split() == ["5", "0", "90.00", "45.00"]
    assert lines[-1] == "query time: 0.50s"
    assert len(lines) == 2 + 6 + 1


def test_query_outcome_is_frozen():
    outcome = QueryOutcome(0, 10, 5, 9, 50.0, 5.0 / 9.0)
    with pytest.raises(AttributeError):
        outcome.precision = 1.0
