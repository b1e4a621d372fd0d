import io

import numpy as np
import pytest

from wsaw.rng import SeededSource
from wsaw.walk import (
    LatticePath,
    batch_observables,
    directions,
    endpoint_distance,
    hull_radius,
    insert_repetitions,
    pack_steps,
    path_from_record,
    path_record,
    read_paths,
    row_silt_from_sorted_keys,
    sample_srw,
    sample_srw_steps,
    silt_count,
    site_keys,
    unpack_steps,
    write_paths,
)


def pairwise_silt(path):
    # O(n^2) reference: count index pairs i < j with S_i = S_j
    sites = path.sites()
    eq = np.all(sites[:, None, :] == sites[None, :, :], axis=2)
    return int(np.triu(eq, k=1).sum())


def test_directions_are_unit_steps():
    for d in (1, 2, 3, 4):
        dirs = directions(d)
        assert dirs.shape == (2 * d, d)
        assert np.all(np.abs(dirs).sum(axis=1) == 1)
        # opposite codes 2k, 2k+1 cancel
        assert np.all(dirs[0::2] + dirs[1::2] == 0)


def test_path_sites_and_round_trip():
    path = LatticePath(np.array([0, 2, 1, 3], dtype=np.uint8), 2)
    sites = path.sites()
    assert sites.shape == (5, 2)
    assert np.array_equal(sites[0], [0, 0])
    assert path == LatticePath.from_sites(sites)


def test_from_sites_rejects_non_unit_steps():
    bad = np.array([[0, 0], [2, 0]])
    with pytest.raises(ValueError):
        LatticePath.from_sites(bad)


def test_silt_matches_pairwise_oracle():
    src = SeededSource(11)
    for k in range(25):
        path = sample_srw(40, 2, src.with_stream(k))
        assert silt_count(path) == pairwise_silt(path)
    for k in range(10):
        path = sample_srw(30, 3, src.with_stream(100 + k))
        assert silt_count(path) == pairwise_silt(path)


def test_silt_closed_forms():
    # straight path never intersects; immediate reversal returns once
    straight = LatticePath(np.zeros(6, dtype=np.uint8), 2)
    assert silt_count(straight) == 0
    backtrack = LatticePath(np.array([0, 1], dtype=np.uint8), 2)
    assert silt_count(backtrack) == 1
    # alternation over two sites: origin seen 4 times, neighbour 3 times
    zigzag = LatticePath(np.array([0, 1] * 3, dtype=np.uint8), 2)
    assert silt_count(zigzag) == 4 * 3 // 2 + 3 * 2 // 2


def test_hull_dominates_endpoint():
    src = SeededSource(7)
    for k in range(20):
        path = sample_srw(64, 2, src.with_stream(k))
        assert hull_radius(path) >= endpoint_distance(path)


def test_insert_repetitions_spec_example():
    # E,E,E with one repetition at j=1 truncates to (0,0),(1,0),(0,0),(1,0)
    path = LatticePath(np.array([0, 0, 0], dtype=np.uint8), 2)
    out = insert_repetitions(path, [1])
    assert np.array_equal(out.sites(), [[0, 0], [1, 0], [0, 0], [1, 0]])
    assert silt_count(out) == 2


def test_insert_repetitions_adds_two_per_position_on_saw():
    # staircase SAW of length 40; positions kept 2k clear of the tail so no
    # inserted step is lost to truncation
    steps = np.array([0, 2] * 20, dtype=np.uint8)
    path = LatticePath(steps, 2)
    assert silt_count(path) == 0
    for positions in ([5], [3, 9], [2, 4, 6, 11, 20]):
        out = insert_repetitions(path, positions)
        assert out.n == path.n
        assert silt_count(out) == 2 * len(positions)


def test_insert_repetitions_validation():
    path = LatticePath(np.array([0, 0, 2, 2], dtype=np.uint8), 2)
    with pytest.raises(ValueError):
        insert_repetitions(path, [0])
    with pytest.raises(ValueError):
        insert_repetitions(path, [4])
    with pytest.raises(ValueError):
        insert_repetitions(path, [1, 1])
    with pytest.raises(ValueError):
        insert_repetitions(path, [1, 2])
    same = insert_repetitions(path, [])
    assert same == path


def test_batch_observables_matches_single_path_functions():
    src = SeededSource(3)
    steps = sample_srw_steps(50, 33, 2, src)
    j, chi, hull = batch_observables(steps, 2)
    for i in range(50):
        path = LatticePath(steps[i], 2)
        assert j[i] == silt_count(path)
        assert chi[i] == pytest.approx(endpoint_distance(path))
        assert hull[i] == pytest.approx(hull_radius(path))


def test_batch_observables_chunking_is_invisible():
    steps = sample_srw_steps(17, 12, 2, SeededSource(5))
    a = batch_observables(steps, 2)
    b = batch_observables(steps, 2, chunk_rows=3)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


def test_row_silt_from_sorted_keys_counts_pairs():
    keys = np.array([[1, 1, 1, 2, 5, 5]])
    # a triple gives 3 pairs, the double gives 1
    assert row_silt_from_sorted_keys(keys)[0] == 4


def test_site_keys_injective_within_span():
    rng = np.random.default_rng(0)
    sites = rng.integers(-6, 7, size=(200, 2))
    keys = site_keys(sites, 6)
    uniq_sites = np.unique(sites, axis=0)
    assert len(np.unique(keys)) == len(uniq_sites)


def test_site_keys_overflow_guard():
    with pytest.raises(OverflowError):
        site_keys(np.zeros((2, 8), dtype=np.int64), 1 << 12)


def test_pack_unpack_round_trip():
    src = SeededSource(9)
    for n in (1, 3, 4, 7, 16):
        steps = sample_srw(n, 2, src.with_stream(n)).steps
        blob = pack_steps(steps, 2)
        assert len(blob) == (n + 3) // 4
        assert np.array_equal(unpack_steps(blob, n, 2), steps)


def test_path_record_round_trip():
    path = sample_srw(19, 2, SeededSource(2))
    rec = path_record(path)
    assert path_from_record(rec) == path


def test_write_read_paths_round_trip():
    src = SeededSource(21)
    paths = [sample_srw(10, 2, src.with_stream(k)) for k in range(5)]
    buf = io.StringIO()
    write_paths(paths, buf)
    buf.seek(0)
    back = read_paths(buf)
    assert back == paths


def test_sample_srw_dimension_checks():
    with pytest.raises(ValueError):
        sample_srw(-1, 2, SeededSource(1))
    with pytest.raises(ValueError):
        sample_srw(4, 0, SeededSource(1))
    with pytest.raises(ValueError):
        sample_srw_steps(-1, 4, 2, SeededSource(1))


def test_length_cap_enforced():
    from wsaw.errors import BudgetExceededError
    from wsaw.walk import HARD_LENGTH_CAP

    with pytest.raises(BudgetExceededError):
        sample_srw(HARD_LENGTH_CAP + 1, 2, SeededSource(1))
