"""Contraction: projection of points to tiles, accumulation and pruning.

Tiles are integer pairs ``(floor(x * 10**p), floor(y * 10**p))``. A
:class:`TileAccumulator` counts points per tile in a single pass over its
input, optionally keeping the raw points (the RASTER' variant), and can be
fed any number of chunks in any order. :meth:`TileAccumulator.prune` keeps
the significant tiles, those holding at least ``threshold`` points.
"""
from __future__ import annotations

import logging
import math
from collections.abc import Iterator
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, OutOfBoundsError

logger = logging.getLogger(__name__)

#: Points per array handed to the projection kernel.
DEFAULT_CHUNK_SIZE = 1 << 20

_PACK_LIMIT = 1 << 62


class Point(NamedTuple):
    x: float
    y: float


class Tile(NamedTuple):
    """Integer grid cell. Plain ``(tx, ty)`` tuples compare and hash equal."""

    tx: int
    ty: int


class Canvas(NamedTuple):
    x_min: float
    x_max: float
    y_min: float
    y_max: float


#: Longitude on x, latitude on y.
GPS_CANVAS = Canvas(-180.0, 180.0, -90.0, 90.0)

METRICS = ("chebyshev", "manhattan")


@dataclass(frozen=True)
class GridParams:
    """Parameters shared by every stage of the pipeline.

    ``precision`` may be any real number; the tile side is ``10**-precision``
    input units. ``threshold``, ``distance`` and ``min_size`` are the usual
    tau, delta and mu. ``retain_points`` selects RASTER' behaviour and
    ``dedupe`` makes it keep only unique points per tile.
    """

    precision: float = 3.5
    threshold: int = 5
    distance: int = 1
    metric: str = "chebyshev"
    min_size: int = 4
    retain_points: bool = False
    dedupe: bool = False
    window_fix: bool = False
    strict_bounds: bool = False
    canvas: Canvas = GPS_CANVAS

    def __post_init__(self):
        object.__setattr__(self, "canvas", Canvas(*map(float, self.canvas)))
        try:
            scale = 10.0 ** float(self.precision)
        except OverflowError:
            scale = math.inf
        if not math.isfinite(scale) or scale == 0.0:
            raise ConfigError(f"precision {self.precision!r} gives a degenerate tile size")
        c = self.canvas
        if not all(math.isfinite(v) for v in c):
            raise ConfigError(f"canvas bounds must be finite, got {c}")
        # Tile indices are stored as int64.
        if max(abs(v) for v in c) * scale >= 2.0 ** 62:
            raise ConfigError(f"precision {self.precision!r} is too fine for the canvas")
        if not (c.x_min < c.x_max and c.y_min < c.y_max):
            raise ConfigError(f"canvas bounds must satisfy min < max, got {c}")
        for name in ("threshold", "distance", "min_size"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.metric not in METRICS:
            raise ConfigError(f"metric must be one of {METRICS}, got {self.metric!r}")
        if self.dedupe and not self.retain_points:
            raise ConfigError("dedupe requires retain_points")

    @property
    def scale(self) -> float:
        return 10.0 ** self.precision

    @property
    def column_range(self) -> tuple[int, int]:
        """Inclusive range of tile columns reachable from the canvas."""
        s = self.scale
        return math.floor(self.canvas.x_min * s), math.floor(self.canvas.x_max * s)

    @property
    def row_range(self) -> tuple[int, int]:
        s = self.scale
        return math.floor(self.canvas.y_min * s), math.floor(self.canvas.y_max * s)

    @property
    def tile_bound(self) -> int:
        """Number of distinct tiles the canvas can produce."""
        c0, c1 = self.column_range
        r0, r1 = self.row_range
        return (c1 - c0 + 1) * (r1 - r0 + 1)


def project(pt, params: GridParams) -> Tile:
    """Return the tile containing ``pt``.

    Floor semantics: grid squares are closed below and open above, so
    negative coordinates do not collapse onto tile 0.
    """
    x, y = float(pt[0]), float(pt[1])
    c = params.canvas
    if not (c.x_min <= x <= c.x_max and c.y_min <= y <= c.y_max):
        raise OutOfBoundsError((x, y))
    s = params.scale
    return Tile(math.floor(x * s), math.floor(y * s))


def project_array(xy: np.ndarray, params: GridParams) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`project` without bounds checking."""
    s = params.scale
    tx = np.floor(xy[:, 0] * s).astype(np.int64)
    ty = np.floor(xy[:, 1] * s).astype(np.int64)
    return tx, ty


def in_bounds(xy: np.ndarray, params: GridParams) -> np.ndarray:
    c = params.canvas
    x, y = xy[:, 0], xy[:, 1]
    return (x >= c.x_min) & (x <= c.x_max) & (y >= c.y_min) & (y <= c.y_max)


def as_point_array(points) -> np.ndarray:
    arr = np.asarray(points, dtype=np.float64)
    if arr.size == 0:
        return arr.reshape(0, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"expected an (n, 2) array of points, got shape {arr.shape}")
    return arr


def iter_chunks(points, chunk_size: int = DEFAULT_CHUNK_SIZE) -> Iterator[np.ndarray]:
    """Yield ``(k, 2)`` float arrays covering ``points`` exactly once.

    ``points`` may be an ``(n, 2)`` array, or an iterable whose items are
    either ``(x, y)`` pairs or ``(k, 2)`` arrays (pre-chunked input). The
    iterable is consumed once and never rewound.
    """
    if isinstance(points, np.ndarray):
        arr = as_point_array(points)
        for start in range(0, len(arr), chunk_size):
            yield arr[start:start + chunk_size]
        return
    buf = []
    for item in points:
        if isinstance(item, np.ndarray) and item.ndim == 2:
            if buf:
                yield as_point_array(buf)
                buf = []
            if len(item):
                yield as_point_array(item)
            continue
        buf.append(item)
        if len(buf) >= chunk_size:
            yield as_point_array(buf)
            buf = []
    if buf:
        yield as_point_array(buf)


def _group_tiles(tx: np.ndarray, ty: np.ndarray):
    """Compact integer grouping key for a chunk of tiles.

    Returns ``(keys, unpack)`` where ``keys`` is an int64 per point that is
    equal exactly for equal tiles, and ``unpack(k)`` maps unique keys back to
    tile coordinate arrays.
    """
    x0, y0 = int(tx.min()), int(ty.min())
    width = int(tx.max()) - x0 + 1
    height = int(ty.max()) - y0 + 1
    if width * height < _PACK_LIMIT:
        keys = (tx - x0) * height + (ty - y0)

        def unpack(k):
            return k // height + x0, k % height + y0

        return keys, unpack
    # Huge spread inside one chunk: fall back to ranking rows of the tile pairs.
    pairs = np.stack([tx, ty], axis=1)
    uniq, keys = np.unique(pairs, axis=0, return_inverse=True)
    keys = keys.reshape(-1).astype(np.int64)

    def unpack(k):
        return uniq[k, 0], uniq[k, 1]

    return keys, unpack


@dataclass(eq=False)
class TileStats:
    """Per-tile statistics: point count and, in retain mode, the points."""

    count: int
    points: np.ndarray | None = None

    def __eq__(self, other):
        if not isinstance(other, TileStats):
            return NotImplemented
        if self.count != other.count:
            return False
        if (self.points is None) != (other.points is None):
            return False
        if self.points is None:
            return True
        return np.array_equal(_sorted_rows(self.points), _sorted_rows(other.points))

    def __repr__(self):
        extra = "" if self.points is None else f", points=<{len(self.points)}>"
        return f"TileStats(count={self.count}{extra})"


def _sorted_rows(arr: np.ndarray) -> np.ndarray:
    if len(arr) == 0:
        return arr
    return arr[np.lexsort((arr[:, 1], arr[:, 0]))]


@dataclass(eq=False)
class TileAccumulator:
    """Associative map tile -> count built in one pass over the input.

    ``counts`` is keyed by ``(tx, ty)`` tuples. In retain mode each tile also
    keeps the list of point arrays projected to it. ``n_rejected`` counts
    out-of-canvas points skipped in lenient mode and ``peak_entries`` the
    largest number of live entries observed after any chunk.
    """

    params: GridParams
    counts: dict = field(default_factory=dict)
    n_ingested: int = 0
    n_rejected: int = 0
    peak_entries: int = 0
    _points: dict = field(default_factory=dict, repr=False)

    def __len__(self):
        return len(self.counts)

    def ingest(self, points, chunk_size: int = DEFAULT_CHUNK_SIZE) -> TileAccumulator:
        for chunk in iter_chunks(points, chunk_size):
            self.ingest_array(chunk)
        return self

    def ingest_array(self, xy: np.ndarray) -> TileAccumulator:
        xy = as_point_array(xy)
        if len(xy) == 0:
            return self
        ok = in_bounds(xy, self.params)
        if not ok.all():
            bad = int(np.flatnonzero(~ok)[0])
            if self.params.strict_bounds:
                raise OutOfBoundsError(xy[bad], self.n_ingested + self.n_rejected + bad)
            self.n_rejected += int(len(ok) - ok.sum())
            xy = xy[ok]
            if len(xy) == 0:
                return self
        tx, ty = project_array(xy, self.params)
        keys, unpack = _group_tiles(tx, ty)
        counts = self.counts
        if self.params.retain_points:
            order = np.argsort(keys, kind="stable")
            skeys = keys[order]
            starts = np.flatnonzero(np.r_[True, skeys[1:] != skeys[:-1]])
            sizes = np.diff(np.r_[starts, len(skeys)])
            ux, uy = unpack(skeys[starts])
            groups = np.split(xy[order], starts[1:])
            store = self._points
            for tile, c, grp in zip(zip(ux.tolist(), uy.tolist()), sizes.tolist(), groups):
                counts[tile] = counts.get(tile, 0) + c
                store.setdefault(tile, []).append(grp)
        else:
            ukeys, sizes = np.unique(keys, return_counts=True)
            ux, uy = unpack(ukeys)
            get = counts.get
            for tile, c in zip(zip(ux.tolist(), uy.tolist()), sizes.tolist()):
                counts[tile] = get(tile, 0) + c
        self.n_ingested += len(xy)
        if len(counts) > self.peak_entries:
            self.peak_entries = len(counts)
        return self

    def merge(self, other: TileAccumulator) -> TileAccumulator:
        """Add ``other`` into this accumulator in place: counts add, points concatenate."""
        if other.params != self.params:
            raise ConfigError("cannot merge accumulators built with different parameters")
        counts = self.counts
        get = counts.get
        for tile, c in other.counts.items():
            counts[tile] = get(tile, 0) + c
        for tile, arrays in other._points.items():
            self._points.setdefault(tile, []).extend(arrays)
        self.n_ingested += other.n_ingested
        self.n_rejected += other.n_rejected
        self.peak_entries = max(self.peak_entries, other.peak_entries, len(counts))
        return self

    def points_of(self, tile) -> np.ndarray:
        arrays = self._points.get(tuple(tile))
        if not arrays:
            return np.empty((0, 2))
        if len(arrays) > 1:
            arrays[:] = [np.concatenate(arrays)]
        return arrays[0]

    def stats(self, tile) -> TileStats:
        tile = tuple(tile)
        if self.params.retain_points:
            pts = self.points_of(tile)
            if self.params.dedupe:
                pts = np.unique(pts, axis=0)
                return TileStats(len(pts), pts)
            return TileStats(self.counts[tile], pts)
        return TileStats(self.counts[tile])

    def items(self) -> Iterator[tuple[Tile, TileStats]]:
        for tile in self.counts:
            yield Tile(*tile), self.stats(tile)

    def prune(self) -> dict[Tile, TileStats]:
        """Return the significant tiles, those with at least ``threshold`` points."""
        tau = self.params.threshold
        if self.params.dedupe:
            out = {}
            for tile in self.counts:
                st = self.stats(tile)
                if st.count >= tau:
                    out[Tile(*tile)] = st
            return out
        return {Tile(*t): self.stats(t) for t, c in self.counts.items() if c >= tau}

    def __eq__(self, other):
        if not isinstance(other, TileAccumulator):
            return NotImplemented
        if self.params != other.params or self.counts != other.counts:
            return False
        if self.params.retain_points:
            return all(self.stats(t) == other.stats(t) for t in self.counts)
        return True


def ingest(acc: TileAccumulator, points, chunk_size: int = DEFAULT_CHUNK_SIZE) -> TileAccumulator:
    return acc.ingest(points, chunk_size)


def prune(acc: TileAccumulator) -> dict[Tile, TileStats]:
    return acc.prune()


def accumulate(points, params: GridParams, chunk_size: int = DEFAULT_CHUNK_SIZE) -> TileAccumulator:
    """Build a fresh accumulator over ``points``."""
    acc = TileAccumulator(params).ingest(points, chunk_size)
    if acc.n_rejected:
        logger.warning("skipped %d point(s) outside the canvas", acc.n_rejected)
    return acc


def significant_tiles(acc: TileAccumulator) -> dict[Tile, TileStats]:
    """Prune ``acc``, honouring ``params.window_fix``."""
    if acc.params.window_fix:
        from .agglomerate import window_fix

        return window_fix(acc, acc.params)
    return acc.prune()

