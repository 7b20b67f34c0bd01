"""Agglomeration: significant tiles -> delta-connected clusters."""
from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .grid import GridParams, Tile, TileAccumulator, TileStats, accumulate, significant_tiles


@lru_cache(maxsize=None)
def neighbor_offsets(distance: int = 1, metric: str = "chebyshev") -> tuple[tuple[int, int], ...]:
    """Offsets of the adjacency ball of radius ``distance``, origin excluded.

    Membership in the ball is all that counts: with Manhattan and
    ``distance > 1`` a cluster may hold tiles with no edge-adjacent member.
    """
    out = []
    for dx in range(-distance, distance + 1):
        for dy in range(-distance, distance + 1):
            if dx == 0 and dy == 0:
                continue
            if metric == "manhattan" and abs(dx) + abs(dy) > distance:
                continue
            out.append((dx, dy))
    return tuple(out)


def neighbors(t, params: GridParams) -> set[Tile]:
    """Candidate neighbour tiles of ``t``; intersect with a tile map to use."""
    x, y = t
    return {Tile(x + dx, y + dy) for dx, dy in neighbor_offsets(params.distance, params.metric)}


def connected_components(tiles: Iterable, params: GridParams) -> list[list]:
    """Split ``tiles`` into maximal connected components.

    Depth-first traversal with an explicit stack; each tile is removed from
    the pool as soon as it is discovered, so every tile is pushed once.
    """
    offsets = neighbor_offsets(params.distance, params.metric)
    pool = set(tiles)
    components = []
    while pool:
        start = pool.pop()
        stack = [start]
        comp = []
        while stack:
            x, y = stack.pop()
            comp.append((x, y))
            for dx, dy in offsets:
                v = (x + dx, y + dy)
                if v in pool:
                    pool.remove(v)
                    stack.append(v)
        components.append(comp)
    return components


@dataclass(eq=False)
class Cluster:
    id: int
    tiles: tuple[Tile, ...]
    points: np.ndarray | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.tiles)

    @property
    def tile_set(self) -> frozenset:
        return frozenset(self.tiles)


@dataclass(eq=False)
class ClusterSet:
    """Clusters ordered by their smallest tile, numbered from 0."""

    clusters: list[Cluster]
    params: GridParams

    def __len__(self):
        return len(self.clusters)

    def __iter__(self):
        return iter(self.clusters)

    def __getitem__(self, i):
        return self.clusters[i]

    def tile_sets(self) -> set[frozenset]:
        return {c.tile_set for c in self.clusters}

    @property
    def n_tiles(self) -> int:
        return sum(len(c) for c in self.clusters)

    def tile_labels(self) -> dict[Tile, int]:
        return {t: c.id for c in self.clusters for t in c.tiles}

    def labeled_points(self) -> tuple[np.ndarray, np.ndarray]:
        """Retained points and their cluster ids (retain mode only)."""
        if not self.params.retain_points:
            raise ValueError("points are only available when retain_points is set")
        pts = [c.points for c in self.clusters]
        labels = [np.full(len(c.points), c.id, dtype=np.int64) for c in self.clusters]
        if not pts:
            return np.empty((0, 2)), np.empty(0, dtype=np.int64)
        return np.concatenate(pts), np.concatenate(labels)


def build_cluster_set(components: Iterable, sig: Mapping, params: GridParams) -> ClusterSet:
    """Number components deterministically and attach retained points."""
    ordered = sorted(sorted(Tile(*t) for t in comp) for comp in components)
    clusters = []
    for i, tiles in enumerate(ordered):
        points = None
        if params.retain_points:
            arrays = [sig[t].points for t in tiles]
            points = np.concatenate(arrays) if arrays else np.empty((0, 2))
        clusters.append(Cluster(i, tuple(tiles), points))
    return ClusterSet(clusters, params)


def agglomerate(sig: Mapping, params: GridParams) -> ClusterSet:
    """Group significant tiles into clusters of at least ``min_size`` tiles."""
    comps = connected_components(sig.keys(), params)
    return build_cluster_set((c for c in comps if len(c) >= params.min_size), sig, params)


def window_fix(acc: TileAccumulator, params: GridParams | None = None) -> dict[Tile, TileStats]:
    """Significant tiles plus every occupied tile of a heavy 2x2 window.

    A window is identified by its lowest corner ``(x, y)`` and covers
    ``x..x+1`` by ``y..y+1``. Only windows touching an occupied tile can be
    heavy, so each occupied tile contributes the four windows containing it.
    """
    params = params or acc.params
    tau = params.threshold
    if params.dedupe:
        counts = {t: acc.stats(t).count for t in acc.counts}
    else:
        counts = acc.counts
    keep = {t for t, c in counts.items() if c >= tau}
    seen = set()
    get = counts.get
    for x, y in counts:
        for ax in (x - 1, x):
            for ay in (y - 1, y):
                if (ax, ay) in seen:
                    continue
                seen.add((ax, ay))
                window = ((ax, ay), (ax + 1, ay), (ax, ay + 1), (ax + 1, ay + 1))
                if sum(get(t, 0) for t in window) >= tau:
                    keep.update(t for t in window if t in counts)
    return {Tile(*t): acc.stats(t) for t in keep}


def raster(points, params: GridParams) -> ClusterSet:
    """Sequential RASTER (or RASTER' when ``params.retain_points``)."""
    acc = accumulate(points, params)
    return agglomerate(significant_tiles(acc), params)
