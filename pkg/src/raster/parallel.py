"""P-RASTER: parallel projection, vertical slicing and border joining.

Projection runs on independent batches whose accumulators are merged by
count addition. The significant tiles are then cut into vertical slices
that are clustered concurrently. Clusters that come within ``distance``
columns of a slice border are held back and joined one border at a time,
from the rightmost border to the leftmost, before ``min_size`` is applied.
"""
from __future__ import annotations

import bisect
import contextlib
import os
from collections.abc import Iterable
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .agglomerate import ClusterSet, build_cluster_set, connected_components, neighbor_offsets
from .errors import ConfigError
from .grid import (
    DEFAULT_CHUNK_SIZE,
    GridParams,
    Tile,
    TileAccumulator,
    iter_chunks,
    significant_tiles,
)

STRATEGIES = ("equal", "balanced")
EXECUTORS = ("process", "thread")


@contextlib.contextmanager
def worker_pool(workers: int, executor="process"):
    """Yield an executor for ``workers`` > 1, or ``None`` to run inline.

    ``executor`` is ``"process"``, ``"thread"`` or an existing
    :class:`concurrent.futures.Executor`, which is used as is and left open.
    """
    if isinstance(executor, Executor):
        yield executor
        return
    if workers < 1:
        raise ConfigError(f"workers must be >= 1, got {workers}")
    if workers == 1:
        yield None
        return
    if executor == "process":
        pool = ProcessPoolExecutor(workers)
    elif executor == "thread":
        pool = ThreadPoolExecutor(workers)
    else:
        raise ConfigError(f"executor must be one of {EXECUTORS}, got {executor!r}")
    with pool:
        yield pool


def merge_accumulators(accs: Iterable[TileAccumulator]) -> TileAccumulator:
    accs = iter(accs)
    try:
        out = next(accs)
    except StopIteration:
        raise ValueError("nothing to merge") from None
    for acc in accs:
        out.merge(acc)
    return out


def _ingest_batch(batch: np.ndarray, params: GridParams, chunk_size: int) -> TileAccumulator:
    return TileAccumulator(params).ingest(batch, chunk_size)


def parallel_ingest(points, params: GridParams, workers: int = 1, executor="process",
                    chunk_size: int = DEFAULT_CHUNK_SIZE) -> TileAccumulator:
    """Project ``points`` on ``workers`` workers and merge the partial accumulators.

    An in-memory array is split into one batch per worker; any other
    iterable is cut into ``chunk_size`` batches dealt to the pool as they
    are read, with at most two batches in flight per worker.
    """
    if workers < 1:
        raise ConfigError(f"workers must be >= 1, got {workers}")
    with worker_pool(workers, executor) as pool:
        if pool is None:
            return TileAccumulator(params).ingest(points, chunk_size)
        acc = TileAccumulator(params)
        if isinstance(points, np.ndarray):
            batches = np.array_split(points, workers)
            futures = [pool.submit(_ingest_batch, b, params, chunk_size) for b in batches]
            for fut in futures:
                acc.merge(fut.result())
            return acc
        pending = []
        for chunk in iter_chunks(points, chunk_size):
            pending.append(pool.submit(_ingest_batch, chunk, params, chunk_size))
            if len(pending) >= 2 * workers:
                acc.merge(pending.pop(0).result())
        for fut in pending:
            acc.merge(fut.result())
        return acc


@dataclass
class SliceSet:
    """Significant tiles partitioned into vertical slices.

    Slice ``i`` holds the tiles with ``borders[i-1] <= tx < borders[i]``;
    the outermost slices are open-ended.
    """

    borders: tuple[int, ...]
    slices: list[list[Tile]]

    @property
    def n(self) -> int:
        return len(self.slices)

    def slice_of(self, tx: int) -> int:
        return bisect.bisect_right(self.borders, tx)


def _strictly_increasing(cuts: list[int]) -> tuple[int, ...]:
    out = []
    for b in cuts:
        if out and b <= out[-1]:
            b = out[-1] + 1
        out.append(b)
    return tuple(out)


def equal_borders(params: GridParams, n: int) -> tuple[int, ...]:
    """Cut the canvas column range into ``n`` equal-width slices."""
    c0, c1 = params.column_range
    width = c1 - c0 + 1
    return _strictly_increasing([c0 + (i * width) // n for i in range(1, n)])


def balanced_borders(tiles: Iterable, n: int) -> tuple[int, ...]:
    """Place borders at column quantiles so slices hold similar tile counts."""
    xs = sorted(t[0] for t in tiles)
    if not xs:
        return tuple(range(1, n))
    m = len(xs)
    return _strictly_increasing([xs[(i * m) // n] for i in range(1, n)])


def slice_tiles(tiles: Iterable, params: GridParams, n: int, strategy: str = "equal",
                borders: Iterable[int] | None = None) -> SliceSet:
    """Assign tiles to ``n`` vertical slices.

    ``borders`` overrides the strategy with explicit cut columns.
    """
    if n < 1:
        raise ConfigError(f"number of slices must be >= 1, got {n}")
    tiles = [Tile(*t) for t in tiles]
    if borders is not None:
        borders = tuple(sorted(int(b) for b in borders))
        if len(set(borders)) != len(borders) or len(borders) != n - 1:
            raise ConfigError("explicit borders must be n - 1 distinct columns")
    elif strategy == "equal":
        borders = equal_borders(params, n)
    elif strategy == "balanced":
        borders = balanced_borders(tiles, n)
    else:
        raise ConfigError(f"strategy must be one of {STRATEGIES}, got {strategy!r}")
    slices = [[] for _ in range(n)]
    for t in tiles:
        slices[bisect.bisect_right(borders, t.tx)].append(t)
    return SliceSet(borders, slices)


def touched_borders(tiles: Iterable, borders: tuple[int, ...], distance: int) -> frozenset:
    """Borders that some tile lies within ``distance`` columns of.

    A tile in column ``c`` can reach across border ``b`` iff
    ``b - distance <= c <= b + distance - 1``.
    """
    if not borders:
        return frozenset()
    out = set()
    for t in tiles:
        c = t[0]
        lo = bisect.bisect_left(borders, c - distance + 1)
        hi = bisect.bisect_right(borders, c + distance)
        out.update(borders[lo:hi])
    return frozenset(out)


@dataclass(eq=False)
class BorderCluster:
    """A partial cluster that may continue across one or more slice borders.

    ``touched`` holds the border columns the cluster reaches across.
    """

    tiles: tuple[Tile, ...]
    touched: frozenset = field(default_factory=frozenset)
    touches_left: bool = False
    touches_right: bool = False

    def __len__(self):
        return len(self.tiles)


def _cluster_slice(tiles: list, index: int, borders: tuple[int, ...], params: GridParams):
    emitted, deferred = [], []
    left = borders[index - 1] if index > 0 else None
    right = borders[index] if index < len(borders) else None
    for comp in connected_components(tiles, params):
        touched = touched_borders(comp, borders, params.distance)
        if touched:
            deferred.append(BorderCluster(
                tuple(Tile(*t) for t in comp), touched,
                touches_left=left in touched, touches_right=right in touched,
            ))
        elif len(comp) >= params.min_size:
            emitted.append(tuple(Tile(*t) for t in comp))
    return emitted, deferred


def cluster_slices(ss: SliceSet, params: GridParams, workers: int = 1, executor="process"):
    """Cluster every slice independently.

    Returns ``(emitted, border_clusters)``: tile tuples of interior clusters
    with at least ``min_size`` tiles, and the :class:`BorderCluster` list
    deferred to joining regardless of size.
    """
    emitted, deferred = [], []
    with worker_pool(workers, executor) as pool:
        if pool is None:
            results = [_cluster_slice(s, i, ss.borders, params) for i, s in enumerate(ss.slices)]
        else:
            futures = [pool.submit(_cluster_slice, s, i, ss.borders, params)
                       for i, s in enumerate(ss.slices)]
            results = [f.result() for f in futures]
    for e, d in results:
        emitted.extend(e)
        deferred.extend(d)
    return emitted, deferred


def join_border(c_lr: list[BorderCluster], params: GridParams, border: int,
                has_left_border: bool = True):
    """Join the clusters reaching across ``border``.

    Two clusters are neighbours when some pair of their tiles is within the
    adjacency ball; only tiles within ``distance`` columns of the border can
    form such a pair across it, so only those are indexed. Returns
    ``(c_j, c_inter)``: finished clusters (tile tuples) with at least
    ``min_size`` tiles, and joined clusters still reaching a border further
    left, which stay candidates.
    """
    d = params.distance
    offsets = neighbor_offsets(d, params.metric)
    owner = {}
    for k, c in enumerate(c_lr):
        for t in c.tiles:
            if border - d <= t[0] <= border + d - 1:
                owner[t] = k
    adjacent = [set() for _ in c_lr]
    for (x, y), k in owner.items():
        for dx, dy in offsets:
            j = owner.get((x + dx, y + dy))
            if j is not None and j != k:
                adjacent[k].add(j)

    c_j, c_inter = [], []
    visited = [False] * len(c_lr)
    for start in range(len(c_lr)):
        if visited[start]:
            continue
        visited[start] = True
        to_visit = [start]
        members = []
        while to_visit:
            v = to_visit.pop()
            members.append(v)
            for j in adjacent[v]:
                if not visited[j]:
                    visited[j] = True
                    to_visit.append(j)
        tiles = tuple(t for k in members for t in c_lr[k].tiles)
        left = frozenset(b for k in members for b in c_lr[k].touched if b < border)
        if has_left_border and left:
            c_inter.append(BorderCluster(tiles, left, touches_left=True))
        elif len(tiles) >= params.min_size:
            c_j.append(tiles)
    return c_j, c_inter


def join_slices(border_clusters: list[BorderCluster], borders: tuple[int, ...],
                params: GridParams) -> list[tuple[Tile, ...]]:
    """Dissolve borders right to left, returning the finished clusters."""
    candidates = list(border_clusters)
    out = []
    for i in range(len(borders) - 1, -1, -1):
        b = borders[i]
        c_lr = [c for c in candidates if b in c.touched]
        if not c_lr:
            continue
        candidates = [c for c in candidates if b not in c.touched]
        c_j, c_inter = join_border(c_lr, params, b, has_left_border=i > 0)
        out.extend(c_j)
        candidates.extend(c_inter)
    # Every candidate touches some border, so all were consumed above.
    assert not candidates, "border clusters left over after joining"
    return out


def p_raster(points, params: GridParams, workers: int = 1, n_slices: int | None = None,
             strategy: str = "equal", executor="process") -> ClusterSet:
    """Parallel RASTER; same clusters as :func:`raster.agglomerate.raster`."""
    with worker_pool(workers, executor) as pool:
        ex = pool if pool is not None else executor
        acc = parallel_ingest(points, params, workers, ex)
        sig = significant_tiles(acc)
        ss = slice_tiles(sig.keys(), params, n_slices or workers, strategy)
        emitted, deferred = cluster_slices(ss, params, workers, ex)
    joined = join_slices(deferred, ss.borders, params)
    return build_cluster_set(emitted + joined, sig, params)


def default_workers() -> int:
    """Worker count from ``RASTER_WORKERS``, else 1."""
    raw = os.environ.get("RASTER_WORKERS")
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"RASTER_WORKERS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"RASTER_WORKERS must be a positive integer, got {raw!r}")
    return n
