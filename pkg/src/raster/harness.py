"""Run a RASTER variant end to end and describe the run in a :class:`RunReport`."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import statistics
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .agglomerate import ClusterSet, agglomerate, build_cluster_set
from .errors import ConfigError, UndefinedMetricError
from .grid import DEFAULT_CHUNK_SIZE, GridParams, TileAccumulator, iter_chunks, significant_tiles
from .metrics import DEFAULT_SAMPLE_CAP, match_centers, silhouette
from .parallel import cluster_slices, join_slices, parallel_ingest, slice_tiles, worker_pool

logger = logging.getLogger(__name__)

VARIANTS = ("raster", "raster-prime", "p-raster", "p-raster-prime")


class CountingStream:
    """One-shot iterable of point chunks that counts every point handed out.

    Iterating a second time raises, so a pipeline that tried to re-read its
    input would fail loudly instead of silently double counting.
    """

    def __init__(self, source, chunk_size: int = DEFAULT_CHUNK_SIZE):
        self._chunks = iter_chunks(source, chunk_size)
        self.points_read = 0
        self.chunks_read = 0
        self._started = False

    def __iter__(self):
        if self._started:
            raise RuntimeError("input stream already consumed")
        self._started = True
        for chunk in self._chunks:
            self.points_read += len(chunk)
            self.chunks_read += 1
            yield chunk


@dataclass
class RunReport:
    variant: str
    params: dict
    n_points: int
    n_rejected: int
    n_significant_tiles: int
    n_clusters: int
    t_total: float
    t_projection: float
    t_clustering: float
    workers: int
    slices: int
    peak_accumulator_entries: int
    detection_rate: float | None = None
    detected: int | None = None
    merged: int | None = None
    silhouette: float | None = None

    def row(self) -> dict:
        """Flat mapping for CSV output; parameters are prefixed with ``param_``."""
        d = asdict(self)
        params = d.pop("params")
        d.update({f"param_{k}": v for k, v in params.items()})
        return d


def params_dict(params: GridParams) -> dict:
    d = asdict(params)
    d["canvas"] = ";".join(repr(v) for v in params.canvas)
    return d


def run(variant: str, source, params: GridParams, workers: int = 1, n_slices: int | None = None,
        strategy: str = "equal", centers=None, sample_cap: int = DEFAULT_SAMPLE_CAP,
        executor="process", stream: CountingStream | None = None) -> tuple[RunReport, ClusterSet]:
    """Execute one variant on ``source`` (array, iterable of points or chunks).

    Projection time covers ingestion, merging and pruning; clustering time
    covers slicing, per-slice agglomeration and border joining. Pass
    ``stream`` to supply a pre-built :class:`CountingStream`.
    """
    if variant not in VARIANTS:
        raise ConfigError(f"variant must be one of {VARIANTS}, got {variant!r}")
    if workers < 1:
        raise ConfigError(f"workers must be >= 1, got {workers}")
    params = replace(params, retain_points=variant.endswith("prime"),
                     dedupe=params.dedupe and variant.endswith("prime"))
    parallel = variant.startswith("p-")
    n_slices = (n_slices or workers) if parallel else 1
    if stream is None:
        chunk = DEFAULT_CHUNK_SIZE
        if parallel and workers > 1 and isinstance(source, np.ndarray) and len(source):
            chunk = min(chunk, math.ceil(len(source) / workers))
        stream = CountingStream(source, chunk)

    t_start = time.perf_counter()
    if parallel:
        with worker_pool(workers, executor) as pool:
            ex = pool if pool is not None else executor
            acc = parallel_ingest(stream, params, workers, ex)
            sig = significant_tiles(acc)
            t_proj = time.perf_counter()
            ss = slice_tiles(sig.keys(), params, n_slices, strategy)
            emitted, deferred = cluster_slices(ss, params, workers, ex)
            joined = join_slices(deferred, ss.borders, params)
            clusters = build_cluster_set(emitted + joined, sig, params)
            t_clust = time.perf_counter()
    else:
        acc = TileAccumulator(params).ingest(stream)
        sig = significant_tiles(acc)
        t_proj = time.perf_counter()
        clusters = agglomerate(sig, params)
        t_clust = time.perf_counter()
    t_end = time.perf_counter()
    if acc.n_rejected:
        logger.warning("skipped %d point(s) outside the canvas", acc.n_rejected)

    report = RunReport(
        variant=variant,
        params=params_dict(params),
        n_points=stream.points_read,
        n_rejected=acc.n_rejected,
        n_significant_tiles=len(sig),
        n_clusters=len(clusters),
        t_total=t_end - t_start,
        t_projection=t_proj - t_start,
        t_clustering=t_clust - t_proj,
        workers=workers,
        slices=n_slices,
        peak_accumulator_entries=acc.peak_entries,
    )
    if centers is not None and len(centers):
        det = match_centers(clusters, centers, params)
        report.detection_rate = det.rate
        report.detected = det.detected
        report.merged = det.merged
    if params.retain_points and sample_cap > 0 and len(clusters) >= 2:
        pts, labels = clusters.labeled_points()
        try:
            report.silhouette = silhouette(pts, labels, sample_cap)
        except UndefinedMetricError:
            report.silhouette = None
    return report, clusters


TIMING_FIELDS = ("t_total", "t_projection", "t_clustering")


def aggregate(reports: list[RunReport]) -> dict:
    """Mean and sample standard deviation of the timings over repeated runs."""
    if not reports:
        raise ValueError("no reports to aggregate")
    out = reports[0].row()
    for name in TIMING_FIELDS:
        values = [getattr(r, name) for r in reports]
        out.pop(name)
        out[f"{name}_mean"] = statistics.fmean(values)
        out[f"{name}_std"] = statistics.stdev(values) if len(values) > 1 else 0.0
    out["repeat"] = len(reports)
    return out


def format_reports(reports: list[RunReport], fmt: str = "csv") -> str:
    """Render runs plus their aggregate as CSV rows or one JSON document."""
    if fmt == "json":
        doc = {"runs": [r.row() for r in reports], "aggregate": aggregate(reports)}
        return json.dumps(doc, indent=2) + "\n"
    if fmt != "csv":
        raise ConfigError(f"format must be csv or json, got {fmt!r}")
    rows = [r.row() for r in reports]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    if len(reports) > 1:
        agg = aggregate(reports)
        buf.write("\n")
        writer = csv.DictWriter(buf, fieldnames=list(agg), lineterminator="\n")
        writer.writeheader()
        writer.writerow(agg)
    return buf.getvalue()


def format_summary(report: RunReport) -> str:
    parts = [
        f"{report.variant}: {report.n_points} points",
        f"{report.n_significant_tiles} significant tiles",
        f"{report.n_clusters} clusters",
        f"t={report.t_total:.3f}s (projection {report.t_projection:.3f}s, "
        f"clustering {report.t_clustering:.3f}s)",
    ]
    if report.detection_rate is not None:
        parts.append(f"detection {report.detection_rate:.3f} (merged {report.merged})")
    if report.silhouette is not None:
        parts.append(f"silhouette {report.silhouette:.3f}")
    return ", ".join(parts)
