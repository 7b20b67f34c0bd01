"""Text formats: point input, center sidecars and cluster output."""
from __future__ import annotations

import contextlib
import io
import os
from collections.abc import Iterator

import numpy as np

from .agglomerate import ClusterSet
from .errors import ParseError

TILE_HEADER = "cluster_id,tile_x,tile_y"
POINT_HEADER = "cluster_id,x,y"
CENTER_HEADER = "center_x,center_y"


@contextlib.contextmanager
def _open(target, mode):
    if isinstance(target, (str, os.PathLike)):
        with open(target, mode, newline="") as f:
            yield f
    else:
        yield target


def parse_point_lines(lines, source=None, chunk_size: int = 1 << 16,
                      header: str | None = None) -> Iterator[np.ndarray]:
    """Parse ``x,y`` lines into ``(k, 2)`` arrays.

    Blank lines and lines starting with ``#`` are skipped; a first line equal
    to ``header`` is skipped too.
    """
    buf = []
    for lineno, line in enumerate(lines, 1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        if header is not None and lineno == 1 and text.replace(" ", "") == header:
            continue
        parts = text.split(",")
        if len(parts) != 2:
            raise ParseError(f"expected 'x,y', got {text!r}", lineno, source)
        try:
            buf.append((float(parts[0]), float(parts[1])))
        except ValueError:
            raise ParseError(f"not a decimal coordinate pair: {text!r}", lineno, source) from None
        if len(buf) >= chunk_size:
            yield np.array(buf)
            buf = []
    if buf:
        yield np.array(buf)


def read_points(path, chunk_size: int = 1 << 16) -> Iterator[np.ndarray]:
    """Stream a point file as chunks; the file is read once, front to back."""
    source = os.fspath(path) if isinstance(path, (str, os.PathLike)) else None
    with _open(path, "r") as f:
        yield from parse_point_lines(f, source, chunk_size)


def load_points(path) -> np.ndarray:
    chunks = list(read_points(path))
    return np.concatenate(chunks) if chunks else np.empty((0, 2))


def write_points(target, points) -> None:
    with _open(target, "w") as f:
        for x, y in np.asarray(points, dtype=float).tolist():
            f.write(f"{x!r},{y!r}\n")


def read_centers(path) -> np.ndarray:
    source = os.fspath(path) if isinstance(path, (str, os.PathLike)) else None
    with _open(path, "r") as f:
        chunks = list(parse_point_lines(f, source, header=CENTER_HEADER))
    return np.concatenate(chunks) if chunks else np.empty((0, 2))


def write_centers(target, centers) -> None:
    with _open(target, "w") as f:
        f.write(CENTER_HEADER + "\n")
        for x, y in np.asarray(centers, dtype=float).tolist():
            f.write(f"{x!r},{y!r}\n")


def write_cluster_tiles(target, clusters: ClusterSet) -> None:
    """One ``cluster_id,tile_x,tile_y`` row per tile, sorted."""
    with _open(target, "w") as f:
        f.write(TILE_HEADER + "\n")
        for c in clusters:
            for tx, ty in c.tiles:
                f.write(f"{c.id},{tx},{ty}\n")


def write_cluster_points(target, clusters: ClusterSet) -> None:
    """One ``cluster_id,x,y`` row per retained point, sorted within each cluster."""
    with _open(target, "w") as f:
        f.write(POINT_HEADER + "\n")
        for c in clusters:
            pts = c.points
            if pts is None or len(pts) == 0:
                continue
            pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]
            for x, y in pts.tolist():
                f.write(f"{c.id},{x!r},{y!r}\n")


def cluster_tiles_text(clusters: ClusterSet) -> str:
    buf = io.StringIO()
    write_cluster_tiles(buf, clusters)
    return buf.getvalue()


def cluster_points_text(clusters: ClusterSet) -> str:
    buf = io.StringIO()
    write_cluster_points(buf, clusters)
    return buf.getvalue()
