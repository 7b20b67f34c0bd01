"""Synthetic hub data: dense square clusters around well-separated centers.

Randomness comes from numpy's PCG64 generator seeded with ``seed``, so a
configuration fully determines its output on a given numpy version.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .grid import GPS_CANVAS, Canvas

#: Tile side at precision 3.5, the unit the defaults are expressed in.
TILE_35 = 10.0 ** -3.5

GENERATOR_STRATEGIES = ("rejection", "rectangles")


@dataclass(frozen=True)
class GenConfig:
    """Generator settings. Distances and radii are in canvas units.

    Each cluster draws a half-side ``r`` uniformly from ``radius_range`` and
    spreads ``points_per_cluster`` points uniformly over the square of side
    ``2r`` around its center. ``noise_fraction`` adds that fraction of the
    cluster points again as uniform background noise.
    """

    n_clusters: int = 100
    points_per_cluster: int = 500
    min_center_distance: float = 20 * TILE_35
    radius_range: tuple[float, float] = (1 * TILE_35, 4 * TILE_35)
    noise_fraction: float = 0.0
    seed: int = 0
    strategy: str = "rejection"
    canvas: Canvas = GPS_CANVAS
    max_attempts: int = 1000

    def __post_init__(self):
        object.__setattr__(self, "canvas", Canvas(*map(float, self.canvas)))
        r_min, r_max = self.radius_range
        if self.n_clusters < 0 or self.points_per_cluster < 0:
            raise ConfigError("cluster and point counts must be non-negative")
        if not 0 <= r_min <= r_max:
            raise ConfigError(f"radius_range must satisfy 0 <= r_min <= r_max, got {self.radius_range}")
        if not r_max < self.min_center_distance / 2:
            raise ConfigError(
                f"radius_range max {r_max} must be below half the minimum center "
                f"distance {self.min_center_distance}"
            )
        if not 0 <= self.noise_fraction < 1:
            raise ConfigError(f"noise_fraction must lie in [0, 1), got {self.noise_fraction}")
        if self.strategy not in GENERATOR_STRATEGIES:
            raise ConfigError(f"strategy must be one of {GENERATOR_STRATEGIES}, got {self.strategy!r}")
        c = self.canvas
        if c.x_max - c.x_min <= 2 * r_max or c.y_max - c.y_min <= 2 * r_max:
            raise ConfigError("canvas is too small for the cluster radius")

    @classmethod
    def in_tiles(cls, precision: float, min_center_distance: float = 20,
                 radius_range: tuple[float, float] = (1, 4), **kw) -> GenConfig:
        """Build a config whose distances are given in tile sides at ``precision``."""
        side = 10.0 ** -precision
        return cls(min_center_distance=min_center_distance * side,
                   radius_range=(radius_range[0] * side, radius_range[1] * side), **kw)


def _rejection_centers(cfg: GenConfig, rng: np.random.Generator) -> np.ndarray:
    c, d = cfg.canvas, cfg.min_center_distance
    margin = cfg.radius_range[1]
    lo = np.array([c.x_min + margin, c.y_min + margin])
    hi = np.array([c.x_max - margin, c.y_max - margin])
    # Spatial hash with cell side d: any conflicting center is in the 3x3 block.
    cell = d if d > 0 else 1.0
    grid: dict[tuple[int, int], list[int]] = {}
    centers = np.empty((cfg.n_clusters, 2))
    d2 = d * d
    for k in range(cfg.n_clusters):
        for _ in range(cfg.max_attempts):
            p = rng.uniform(lo, hi)
            gx, gy = math.floor(p[0] / cell), math.floor(p[1] / cell)
            clash = False
            for ix in (gx - 1, gx, gx + 1):
                for iy in (gy - 1, gy, gy + 1):
                    for j in grid.get((ix, iy), ()):
                        q = centers[j]
                        if (p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2 < d2:
                            clash = True
                            break
                    if clash:
                        break
                if clash:
                    break
            if not clash:
                centers[k] = p
                grid.setdefault((gx, gy), []).append(k)
                break
        else:
            raise ConfigError(
                f"could not place center {k + 1} of {cfg.n_clusters} at least "
                f"{d} apart after {cfg.max_attempts} attempts; use a larger canvas, "
                "a smaller minimum distance or fewer clusters"
            )
    return centers


def _rectangle_centers(cfg: GenConfig, rng: np.random.Generator) -> np.ndarray:
    """One center per randomly chosen cell of a ceil(sqrt(K))^2 rectangle grid.

    Centers stay ``min_center_distance / 2`` away from their cell's edges, so
    centers in different cells are far enough apart by construction.
    """
    k = cfg.n_clusters
    g = max(1, math.ceil(math.sqrt(k)))
    c = cfg.canvas
    w, h = (c.x_max - c.x_min) / g, (c.y_max - c.y_min) / g
    inset = max(cfg.min_center_distance / 2, cfg.radius_range[1])
    if w <= 2 * inset or h <= 2 * inset:
        raise ConfigError(
            f"rectangles of {w:g} x {h:g} cannot hold centers {cfg.min_center_distance} apart"
        )
    cells = rng.choice(g * g, size=k, replace=False)
    ix, iy = cells % g, cells // g
    x = c.x_min + ix * w + rng.uniform(inset, w - inset, size=k)
    y = c.y_min + iy * h + rng.uniform(inset, h - inset, size=k)
    return np.column_stack([x, y])


def generate(cfg: GenConfig) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(points, centers)`` as float arrays of shape ``(n, 2)`` and ``(K, 2)``.

    Points are shuffled, so cluster membership is not recoverable from order.
    """
    rng = np.random.default_rng(cfg.seed)
    if cfg.n_clusters == 0:
        return np.empty((0, 2)), np.empty((0, 2))
    if cfg.strategy == "rejection":
        centers = _rejection_centers(cfg, rng)
    else:
        centers = _rectangle_centers(cfg, rng)
    k, m = cfg.n_clusters, cfg.points_per_cluster
    radii = rng.uniform(*cfg.radius_range, size=k)
    offsets = rng.uniform(-1.0, 1.0, size=(k, m, 2)) * radii[:, None, None]
    points = (centers[:, None, :] + offsets).reshape(-1, 2)
    n_noise = int(round(cfg.noise_fraction * len(points)))
    if n_noise:
        c = cfg.canvas
        noise = rng.uniform((c.x_min, c.y_min), (c.x_max, c.y_max), size=(n_noise, 2))
        points = np.concatenate([points, noise])
    rng.shuffle(points, axis=0)
    return points, centers
