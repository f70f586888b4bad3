"""Batch command-line front end.

Four subcommands cover the pipeline: ``index`` builds and saves a feature
index from a dataset directory, ``query`` ranks an index against one
image, ``evaluate`` runs the all-queries benchmark on a saved index, and
``sweep`` crosses radii with metrics over a dataset in one go.

Exit codes: 0 on success, 2 for bad arguments (argparse), 3 for missing
or unreadable inputs and unwritable outputs, 4 for malformed index files,
1 for anything else.  Failures print a single ``error: ...`` line to
stderr.  Distances print with six decimals and percentages with two, so
output is stable enough to diff.
"""

from __future__ import annotations

import argparse
import sys

from .descriptors import DEFAULT_EDGE_DETECTOR, SUPPORTED_RADII
from .errors import (
    DatasetError,
    ImageLoadError,
    IndexBuildError,
    IndexFormatError,
    TexrefError,
)
from .evaluation import evaluate, format_report, sweep, write_csv
from .fusion import default_config
from .imageio import LABELING_RULES, scan_dataset
from .index import build_index, load_index, query, save_index
from .metrics import DEFAULT_METRIC, METRIC_NAMES


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="texref",
        description="Color-texture image retrieval over local-pattern histograms.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_index = sub.add_parser("index", help="build a feature index from a dataset directory")
    p_index.add_argument("--root", required=True, help="dataset directory")
    p_index.add_argument("--labeling", choices=LABELING_RULES, default="simplicity",
                         help="class labeling rule (default: simplicity)")
    p_index.add_argument("--radius", type=int, choices=SUPPORTED_RADII, default=1,
                         help="sampling ring radius (default: 1)")
    p_index.add_argument("--edge", default=DEFAULT_EDGE_DETECTOR,
                         help="edge detector: sobel-otsu, roberts-otsu, or sobel-fixed:<t>")
    p_index.add_argument("--out", required=True, help="output index file")
    p_index.set_defaults(handler=_cmd_index)

    p_query = sub.add_parser("query", help="rank an index against one image")
    p_query.add_argument("--index", required=True, help="index file")
    p_query.add_argument("--image", required=True, help="query image path")
    p_query.add_argument("--metric", choices=METRIC_NAMES, default=DEFAULT_METRIC)
    p_query.add_argument("--n", type=int, default=10, help="results to print (default: 10)")
    p_query.add_argument("--include-self", action="store_true",
                         help="keep a database record naming the query image itself")
    p_query.set_defaults(handler=_cmd_query)

    p_eval = sub.add_parser("evaluate", help="run the all-queries benchmark on an index")
    p_eval.add_argument("--index", required=True, help="index file")
    p_eval.add_argument("--metric", choices=METRIC_NAMES, default=DEFAULT_METRIC)
    p_eval.add_argument("--n", default="10", help="comma-separated result sizes, e.g. 10,20,40")
    p_eval.add_argument("--include-self", action="store_true")
    p_eval.add_argument("--csv", help="also write results to this CSV file")
    p_eval.set_defaults(handler=_cmd_evaluate)

    p_sweep = sub.add_parser("sweep", help="cross radii and metrics over a dataset")
    p_sweep.add_argument("--root", required=True, help="dataset directory")
    p_sweep.add_argument("--labeling", choices=LABELING_RULES, default="simplicity")
    p_sweep.add_argument("--radii", default="1", help="comma-separated radii, e.g. 1,2,3")
    p_sweep.add_argument("--metrics", default=DEFAULT_METRIC,
                         help="comma-separated metric names")
    p_sweep.add_argument("--n", type=int, default=10, help="result size (default: 10)")
    p_sweep.add_argument("--edge", default=DEFAULT_EDGE_DETECTOR)
    p_sweep.add_argument("--include-self", action="store_true")
    p_sweep.add_argument("--csv", help="also write results to this CSV file")
    p_sweep.set_defaults(handler=_cmd_sweep)

    return parser


def _parse_int_list(raw: str, what: str) -> list[int]:
    try:
        values = [int(part) for part in raw.split(",") if part.strip()]
    except ValueError:
        raise ValueError(f"bad {what} list {raw!r}, expected comma-separated integers") from None
    if not values:
        raise ValueError(f"empty {what} list")
    return values


def _cmd_index(args) -> int:
    manifest = scan_dataset(args.root, args.labeling)
    config = default_config(args.radius, args.edge)
    index = build_index(manifest, config)
    save_index(index, args.out)
    counts = index.class_counts()
    print(f"indexed {len(index)} images in {len(counts)} classes -> {args.out}")
    return 0


def _cmd_query(args) -> int:
    index = load_index(args.index)
    matches = query(index, args.image, args.metric, args.n, args.include_self)
    for rank_pos, match in enumerate(matches, start=1):
        print(
            f"{rank_pos}\t{match.image_id}\t{match.class_label}"
            f"\t{match.distance:.6f}\t{match.relative_path}"
        )
    return 0


def _cmd_evaluate(args) -> int:
    index = load_index(args.index)
    n_values = _parse_int_list(args.n, "n")
    report = evaluate(index, args.metric, n_values, args.include_self)
    print(format_report(report))
    if args.csv:
        write_csv([report], args.csv)
        print(f"wrote {args.csv}")
    return 0


def _cmd_sweep(args) -> int:
    manifest = scan_dataset(args.root, args.labeling)
    radii = _parse_int_list(args.radii, "radius")
    metrics = [part.strip() for part in args.metrics.split(",") if part.strip()]
    reports = sweep(manifest, metrics, radii, [args.n],
                    edge_detector=args.edge, include_self=args.include_self)
    for report in reports:
        print(format_report(report))
        print()
    if args.csv:
        write_csv(reports, args.csv)
        print(f"wrote {args.csv}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (ImageLoadError, DatasetError, IndexBuildError) as exc:
        return _fail(exc, 3)
    except IndexFormatError as exc:
        return _fail(exc, 4)
    except OSError as exc:
        return _fail(exc, 3)
    except (TexrefError, ValueError) as exc:
        return _fail(exc, 1)


def _fail(exc: Exception, code: int) -> int:
    message = str(exc).replace("\n", " ")
    print(f"error: {message}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
