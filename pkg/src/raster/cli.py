"""Command line entry point: ``raster`` / ``python -m raster``."""
from __future__ import annotations

import argparse
import logging
import sys

from . import formats
from .datagen import GENERATOR_STRATEGIES, GenConfig, generate
from .errors import ConfigError, OutOfBoundsError, ParseError, UndefinedMetricError
from .grid import METRICS, GridParams
from .harness import VARIANTS, format_reports, format_summary, run
from .metrics import DEFAULT_SAMPLE_CAP
from .parallel import EXECUTORS, STRATEGIES, default_workers

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARSE = 3
EXIT_IO = 4
EXIT_DATA = 5


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="raster",
        description="Grid-based density clustering of 2-D points (RASTER family).",
    )
    p.add_argument("--variant", choices=VARIANTS, default="raster")
    p.add_argument("--precision", type=float, default=3.5,
                   help="tile side is 10**-precision input units (default 3.5)")
    p.add_argument("--threshold", type=int, default=5, help="min points per significant tile")
    p.add_argument("--min-size", type=int, default=4, help="min tiles per cluster")
    p.add_argument("--delta", type=int, default=1, help="adjacency distance in tiles")
    p.add_argument("--metric", choices=METRICS, default="chebyshev")
    p.add_argument("--workers", type=int, default=None,
                   help="worker count for p-raster variants (default: $RASTER_WORKERS or 1)")
    p.add_argument("--slices", type=int, default=None, help="number of slices (default: workers)")
    p.add_argument("--strategy", choices=STRATEGIES, default="equal", help="slicing strategy")
    p.add_argument("--executor", choices=EXECUTORS, default="process")
    p.add_argument("--window-fix", action="store_true",
                   help="also keep tiles of 2x2 windows holding at least threshold points")
    p.add_argument("--dedupe", action="store_true", help="prime variants keep unique points only")
    p.add_argument("--strict", action="store_true",
                   help="fail on points outside the canvas instead of skipping them")
    p.add_argument("--canvas", type=float, nargs=4, metavar=("XMIN", "XMAX", "YMIN", "YMAX"),
                   default=None, help="canvas bounds (default: GPS longitude/latitude)")

    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", metavar="FILE", help="point file with one 'x,y' per line")
    src.add_argument("--generate", type=int, metavar="K", help="generate K synthetic clusters")
    g = p.add_argument_group("generator")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--points-per-cluster", type=int, default=500)
    g.add_argument("--noise", type=float, default=0.0, help="noise fraction in [0, 1)")
    g.add_argument("--min-distance", type=float, default=20.0,
                   help="minimum center distance in tile sides at --precision")
    g.add_argument("--radius", type=float, nargs=2, default=(1.0, 4.0), metavar=("RMIN", "RMAX"),
                   help="cluster half-side range in tile sides at --precision")
    g.add_argument("--gen-strategy", choices=GENERATOR_STRATEGIES, default="rejection")
    g.add_argument("--save-points", metavar="FILE", help="write generated points here")
    g.add_argument("--save-centers", metavar="FILE", help="write generated centers here")

    p.add_argument("--centers", metavar="FILE", help="ground-truth centers for detection rate")
    p.add_argument("--repeat", type=int, default=1, help="run R times and aggregate timings")
    p.add_argument("--out", metavar="FILE", help="cluster tile CSV")
    p.add_argument("--points-out", metavar="FILE", help="cluster point CSV (prime variants)")
    p.add_argument("--report", metavar="FILE", help="report destination (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--sample-cap", type=int, default=DEFAULT_SAMPLE_CAP,
                   help="silhouette sample size; 0 disables it")
    p.add_argument("-q", "--quiet", action="store_true", help="no summary line on stderr")
    return p


def _params(args) -> GridParams:
    kw = {}
    if args.canvas is not None:
        kw["canvas"] = tuple(args.canvas)
    return GridParams(
        precision=args.precision, threshold=args.threshold, distance=args.delta,
        metric=args.metric, min_size=args.min_size, window_fix=args.window_fix,
        dedupe=args.dedupe and args.variant.endswith("prime"),
        retain_points=args.variant.endswith("prime"), strict_bounds=args.strict, **kw,
    )


def _execute(args) -> int:
    params = _params(args)
    workers = args.workers if args.workers is not None else default_workers()
    if args.repeat < 1:
        raise ConfigError("--repeat must be >= 1")

    centers = None
    data = None
    if args.generate is not None:
        kw = {"canvas": params.canvas}
        cfg = GenConfig.in_tiles(
            args.precision, min_center_distance=args.min_distance,
            radius_range=tuple(args.radius), n_clusters=args.generate,
            points_per_cluster=args.points_per_cluster, noise_fraction=args.noise,
            seed=args.seed, strategy=args.gen_strategy, **kw,
        )
        data, centers = generate(cfg)
        if args.save_points:
            formats.write_points(args.save_points, data)
        if args.save_centers:
            formats.write_centers(args.save_centers, centers)
    if args.centers:
        centers = formats.read_centers(args.centers)

    reports = []
    clusters = None
    for _ in range(args.repeat):
        source = data if data is not None else formats.read_points(args.input)
        report, clusters = run(args.variant, source, params, workers, args.slices,
                               args.strategy, centers, args.sample_cap, args.executor)
        reports.append(report)
        if not args.quiet:
            print(format_summary(report), file=sys.stderr)

    if args.out:
        formats.write_cluster_tiles(args.out, clusters)
    if args.points_out:
        if not params.retain_points:
            raise ConfigError("--points-out needs a prime variant")
        formats.write_cluster_points(args.points_out, clusters)

    text = format_reports(reports, args.format)
    if args.report:
        with open(args.report, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return _execute(args)
    except ParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except (OutOfBoundsError, UndefinedMetricError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
