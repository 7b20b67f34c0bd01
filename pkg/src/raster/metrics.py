"""Evaluation metrics: detection rate against known centers and silhouette."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .agglomerate import ClusterSet, neighbor_offsets
from .errors import UndefinedMetricError
from .grid import GridParams

DEFAULT_SAMPLE_CAP = 10_000


@dataclass(frozen=True)
class Detection:
    """Outcome of matching ground-truth centers to emitted clusters.

    ``detected`` counts centers covered by some cluster. ``merged`` counts
    the covered centers that share their cluster with an earlier center, so
    ``detected - merged`` distinct clusters were found. ``rate`` is that
    number over ``n_centers``; ``coverage`` ignores merging.
    """

    n_centers: int
    detected: int
    merged: int

    @property
    def identified(self) -> int:
        return self.detected - self.merged

    @property
    def rate(self) -> float:
        return self.identified / self.n_centers if self.n_centers else 0.0

    @property
    def coverage(self) -> float:
        return self.detected / self.n_centers if self.n_centers else 0.0


def match_centers(clusters: ClusterSet, centers, params: GridParams | None = None) -> Detection:
    """Match every center to the cluster covering its tile or a tile within ``distance``.

    When several clusters qualify, the one holding the center's own tile
    wins, then the lowest cluster id.
    """
    params = params or clusters.params
    centers = np.asarray(centers, dtype=float).reshape(-1, 2)
    if len(centers) == 0:
        raise ValueError("at least one center is required")
    labels = clusters.tile_labels()
    offsets = neighbor_offsets(params.distance, params.metric)
    s = params.scale
    owners = []
    for x, y in centers.tolist():
        tx, ty = int(np.floor(x * s)), int(np.floor(y * s))
        hit = labels.get((tx, ty))
        if hit is None:
            near = [labels[v] for v in ((tx + dx, ty + dy) for dx, dy in offsets) if v in labels]
            hit = min(near) if near else None
        if hit is not None:
            owners.append(hit)
    detected = len(owners)
    return Detection(len(centers), detected, detected - len(set(owners)))


def detection_rate(clusters: ClusterSet, centers, params: GridParams | None = None) -> float:
    return match_centers(clusters, centers, params).rate


def silhouette_samples(points, labels) -> np.ndarray:
    """Exact per-point silhouette with Euclidean distance.

    Points alone in their cluster score 0. Runs in blocks of rows, so memory
    stays linear in the number of points while time is quadratic.
    """
    points = np.asarray(points, dtype=float)
    labels = np.asarray(labels)
    n = len(points)
    uniq, inverse = np.unique(labels, return_inverse=True)
    if len(uniq) < 2:
        raise UndefinedMetricError("silhouette needs at least two clusters")
    order = np.argsort(inverse, kind="stable")
    pts, lab = points[order], inverse[order]
    starts = np.flatnonzero(np.r_[True, lab[1:] != lab[:-1]])
    sizes = np.diff(np.r_[starts, n]).astype(float)
    out = np.empty(n)
    block = max(1, 2_000_000 // n)
    for lo in range(0, n, block):
        hi = min(n, lo + block)
        diff = pts[lo:hi, None, :] - pts[None, :, :]
        dist = np.sqrt((diff ** 2).sum(axis=2))
        sums = np.add.reduceat(dist, starts, axis=1)
        own = lab[lo:hi]
        rows = np.arange(hi - lo)
        own_size = sizes[own]
        a = sums[rows, own] / np.maximum(own_size - 1, 1)
        means = sums / sizes
        means[rows, own] = np.inf
        b = means.min(axis=1)
        s = (b - a) / np.maximum(a, b)
        s[own_size == 1] = 0.0
        out[order[lo:hi]] = np.nan_to_num(s)
    return out


def silhouette(points, labels, sample_cap: int = DEFAULT_SAMPLE_CAP, seed: int = 0) -> float:
    """Mean silhouette over a uniform sample of at most ``sample_cap`` points."""
    points = np.asarray(points, dtype=float)
    labels = np.asarray(labels)
    if len(points) != len(labels):
        raise ValueError("points and labels differ in length")
    if len(np.unique(labels)) < 2:
        raise UndefinedMetricError("silhouette needs at least two clusters")
    if len(points) > sample_cap:
        idx = np.random.default_rng(seed).choice(len(points), sample_cap, replace=False)
        points, labels = points[idx], labels[idx]
    return float(silhouette_samples(points, labels).mean())
