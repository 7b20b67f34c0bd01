import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import count_tiles_brute, project_exact
from raster import (
    ConfigError,
    GenConfig,
    GridParams,
    OutOfBoundsError,
    Tile,
    TileAccumulator,
    TileStats,
    generate,
    ingest,
    project,
    prune,
)
from raster.grid import iter_chunks

CORNER_POINTS = [(1.005, 1.000), (1.009, 1.002), (1.008, 1.006)]


class TestProject:
    def test_nearby_points_truncate_to_corner(self):
        p = GridParams(precision=2)
        assert [project(pt, p) for pt in CORNER_POINTS] == [Tile(100, 100)] * 3

    def test_origin(self):
        assert project((0.0, 0.0), GridParams(precision=3)) == Tile(0, 0)

    def test_negative_uses_floor(self):
        p = GridParams(precision=1)
        assert project((-0.15, 0.25), p) == Tile(-2, 2)
        assert project((-0.15, 0.25), p) == (project_exact(-0.15, 0.25, 1))

    @given(
        st.floats(-179.9, 179.9, allow_nan=False),
        st.floats(-89.9, 89.9, allow_nan=False),
        st.integers(0, 4),
    )
    def test_matches_exact_scan_away_from_grid_lines(self, x, y, prec):
        from fractions import Fraction

        for v in (x, y):
            scaled = Fraction(v) * 10 ** prec
            if abs(scaled - round(scaled)) < Fraction(1, 10 ** 6):
                return
        assert project((x, y), GridParams(precision=prec)) == project_exact(x, y, prec)

    def test_real_precision(self):
        p = GridParams(precision=3.5)
        s = 10 ** 3.5
        assert project((0.01, -0.01), p) == Tile(math.floor(0.01 * s), math.floor(-0.01 * s))

    def test_deterministic_and_same_square(self):
        p = GridParams(precision=2)
        assert project((0.123, 0.456), p) == project((0.123, 0.456), p)
        assert project((0.1201, 0.4501), p) == project((0.1299, 0.4599), p)

    def test_out_of_canvas_rejected(self):
        with pytest.raises(OutOfBoundsError):
            project((200.0, 0.0), GridParams())

    def test_canvas_edges_inclusive(self):
        p = GridParams(precision=0)
        assert project((180.0, 90.0), p) == Tile(180, 90)
        assert project((-180.0, -90.0), p) == Tile(-180, -90)


class TestParams:
    @pytest.mark.parametrize("kw", [
        {"threshold": 0}, {"distance": 0}, {"min_size": 0}, {"metric": "euclid"},
        {"canvas": (1, 0, 0, 1)}, {"canvas": (0, math.inf, 0, 1)}, {"precision": 400},
        {"precision": -400}, {"threshold": 2.5}, {"dedupe": True},
    ])
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            GridParams(**kw)

    def test_tile_bound_gps(self):
        p = GridParams(precision=0)
        assert p.tile_bound == 361 * 181

    def test_equal_params_hash(self):
        assert GridParams(canvas=(-180, 180, -90, 90)) == GridParams()


class TestIngest:
    def test_nearby_points_single_tile(self):
        acc = ingest(TileAccumulator(GridParams(precision=2)), CORNER_POINTS)
        assert acc.counts == {(100, 100): 3}

    def test_empty_stream(self):
        acc = TileAccumulator(GridParams())
        acc.ingest([])
        acc.ingest(np.empty((0, 2)))
        assert acc.counts == {} and acc.n_ingested == 0

    def test_seven_chunks_equal_one(self):
        rng = np.random.default_rng(3)
        pts = rng.uniform(-1, 1, size=(1000, 2))
        p = GridParams(precision=1)
        whole = TileAccumulator(p).ingest(pts)
        cuts = np.sort(rng.choice(np.arange(1, 1000), 6, replace=False))
        chunked = TileAccumulator(p)
        for part in np.split(pts, cuts):
            chunked.ingest(part)
        assert chunked == whole
        assert chunked.counts == count_tiles_brute(pts.tolist(), 1)

    def test_accepts_pairs_and_chunks(self):
        p = GridParams(precision=1)
        pts = [(0.11, 0.21), (0.12, 0.22), (0.5, 0.5)]
        a = TileAccumulator(p).ingest(iter(pts))
        b = TileAccumulator(p).ingest([np.array(pts[:2]), pts[2]])
        assert a == b and a.counts == {(1, 2): 2, (5, 5): 1}

    def test_retain_mode_keeps_multiset(self):
        p = GridParams(precision=2, retain_points=True)
        pts = CORNER_POINTS + [CORNER_POINTS[0]]
        acc = TileAccumulator(p).ingest(pts)
        st_ = acc.stats((100, 100))
        assert st_.count == 4 and len(st_.points) == 4

    def test_dedupe_counts_unique_points(self):
        p = GridParams(precision=2, retain_points=True, dedupe=True, threshold=4)
        acc = TileAccumulator(p).ingest(CORNER_POINTS + [CORNER_POINTS[0]])
        assert acc.counts[(100, 100)] == 4
        assert acc.stats((100, 100)).count == 3
        assert prune(acc) == {}

    def test_out_of_bounds_skipped_and_counted(self):
        acc = TileAccumulator(GridParams(precision=0))
        acc.ingest([(0.5, 0.5), (500.0, 0.0), (0.0, float("nan"))])
        assert acc.n_rejected == 2 and acc.n_ingested == 1

    def test_out_of_bounds_strict(self):
        acc = TileAccumulator(GridParams(precision=0, strict_bounds=True))
        with pytest.raises(OutOfBoundsError) as info:
            acc.ingest([(0.5, 0.5), (500.0, 0.0)])
        assert info.value.index == 1

    def test_wide_chunk_falls_back_to_row_grouping(self):
        p = GridParams(precision=9)
        pts = [(-179.0, -89.0), (179.0, 89.0), (179.0, 89.0)]
        acc = TileAccumulator(p).ingest(pts)
        assert acc.counts == count_tiles_brute(pts, 9)

    def test_iter_chunks_consumes_once(self):
        it = iter([(0.0, 0.0)] * 10)
        chunks = list(iter_chunks(it, chunk_size=3))
        assert [len(c) for c in chunks] == [3, 3, 3, 1]
        assert list(it) == []


class TestPrune:
    def test_threshold_filter(self):
        acc = TileAccumulator(GridParams(precision=0, threshold=5))
        acc.counts.update({(1, 0): 3, (2, 0): 5, (3, 0): 7})
        assert prune(acc) == {Tile(2, 0): TileStats(5), Tile(3, 0): TileStats(7)}

    def test_threshold_one_keeps_all(self):
        acc = TileAccumulator(GridParams(precision=0, threshold=1))
        acc.ingest([(0.5, 0.5), (3.5, 3.5)])
        assert set(prune(acc)) == {(0, 0), (3, 3)}

    def test_retain_mode_drops_points_of_discarded_tiles(self):
        p = GridParams(precision=0, threshold=2, retain_points=True)
        acc = TileAccumulator(p).ingest([(0.5, 0.5), (0.6, 0.6), (5.5, 5.5)])
        sig = prune(acc)
        assert list(sig) == [(0, 0)]
        assert sig[(0, 0)].count == len(sig[(0, 0)].points) == 2

    def test_generated_cluster_has_significant_tile(self):
        cfg = GenConfig(n_clusters=1, seed=11)
        pts, centers = generate(cfg)
        assert len(pts) == 500
        p = GridParams(precision=3.5, threshold=5)
        brute = count_tiles_brute(pts.tolist(), 3.5)
        sig = prune(TileAccumulator(p).ingest(pts))
        assert sig and {t: s.count for t, s in sig.items()} == {
            t: c for t, c in brute.items() if c >= 5
        }


class TestAccumulatorInvariants:
    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.tuples(st.floats(-3, 3), st.floats(-3, 3)), max_size=200), st.randoms())
    def test_permutation_invariance_and_conservation(self, pts, rnd):
        p = GridParams(precision=1, threshold=2)
        a = TileAccumulator(p).ingest(pts)
        shuffled = list(pts)
        rnd.shuffle(shuffled)
        b = TileAccumulator(p).ingest(shuffled)
        assert a == b and prune(a) == prune(b)
        assert sum(a.counts.values()) == len(pts) == a.n_ingested

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.tuples(st.floats(-3, 3), st.floats(-3, 3)), min_size=1, max_size=200),
           st.lists(st.integers(1, 50), min_size=1, max_size=8))
    def test_chunk_invariance_retain_mode(self, pts, sizes):
        p = GridParams(precision=1, retain_points=True)
        whole = TileAccumulator(p).ingest(pts)
        chunked = TileAccumulator(p)
        i = 0
        k = 0
        while i < len(pts):
            step = sizes[k % len(sizes)]
            chunked.ingest(pts[i:i + step])
            i += step
            k += 1
        assert chunked == whole

    def test_memory_bound_on_saturated_canvas(self):
        p = GridParams(precision=0, canvas=(0, 4, 0, 2))
        rng = np.random.default_rng(0)
        acc = TileAccumulator(p)
        for _ in range(20):
            acc.ingest(rng.uniform((0, 0), (4, 2), size=(500, 2)))
            assert len(acc) <= min(acc.n_ingested, p.tile_bound)
        assert acc.peak_entries <= p.tile_bound == 15
        assert len(acc) == 8

    def test_merge_adds_and_is_commutative(self):
        p = GridParams(precision=0, retain_points=True)
        rng = np.random.default_rng(1)
        parts = [rng.uniform(-5, 5, size=(100, 2)) for _ in range(3)]
        accs = [TileAccumulator(p).ingest(x) for x in parts]
        whole = TileAccumulator(p).ingest(np.concatenate(parts))
        orders = [(0, 1, 2), (2, 1, 0), (1, 0, 2)]
        for order in orders:
            merged = TileAccumulator(p)
            for i in order:
                merged.merge(TileAccumulator(p).ingest(parts[i]))
            assert merged == whole
        assert accs[0].merge(accs[1]).merge(accs[2]) == whole

    def test_merge_rejects_mismatched_params(self):
        with pytest.raises(ConfigError):
            TileAccumulator(GridParams(precision=1)).merge(TileAccumulator(GridParams(precision=2)))


def test_random_tiles_match_brute_force_counts():
    rnd = random.Random(5)
    pts = [(rnd.uniform(-180, 180), rnd.uniform(-90, 90)) for _ in range(2000)]
    pts += [(rnd.uniform(10, 10.01), rnd.uniform(20, 20.01)) for _ in range(2000)]
    for prec in (2, 3, 3.5):
        acc = TileAccumulator(GridParams(precision=prec)).ingest(np.array(pts), chunk_size=333)
        assert acc.counts == count_tiles_brute(pts, prec)
