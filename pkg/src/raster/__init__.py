"""RASTER: single-pass, linear-time grid clustering of 2-D points.

Sequential::

    from raster import GridParams, raster
    clusters = raster(points, GridParams(precision=3.5, threshold=5, min_size=4))

Parallel, same clusters::

    from raster import p_raster
    clusters = p_raster(points, params, workers=4)
"""
from .agglomerate import Cluster, ClusterSet, agglomerate, neighbors, raster, window_fix
from .datagen import GenConfig, generate
from .errors import (
    ConfigError,
    OutOfBoundsError,
    ParseError,
    RasterError,
    UndefinedMetricError,
)
from .grid import (
    GPS_CANVAS,
    Canvas,
    GridParams,
    Point,
    Tile,
    TileAccumulator,
    TileStats,
    accumulate,
    ingest,
    project,
    prune,
    significant_tiles,
)
from .metrics import detection_rate, match_centers, silhouette
from .parallel import (
    BorderCluster,
    SliceSet,
    cluster_slices,
    join_border,
    join_slices,
    p_raster,
    parallel_ingest,
    slice_tiles,
)

__all__ = [
    "BorderCluster", "Canvas", "Cluster", "ClusterSet", "ConfigError", "GPS_CANVAS",
    "GenConfig", "GridParams", "OutOfBoundsError", "ParseError", "Point", "RasterError",
    "SliceSet", "Tile", "TileAccumulator", "TileStats", "UndefinedMetricError",
    "accumulate", "agglomerate", "cluster_slices", "detection_rate", "generate", "ingest",
    "join_border", "join_slices", "match_centers", "neighbors", "p_raster", "parallel_ingest",
    "project", "prune", "raster", "significant_tiles", "silhouette", "slice_tiles",
    "window_fix",
]
