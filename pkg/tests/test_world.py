import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from monoculus import _kernels
from monoculus.world import (
    AxisFrame, Configuration, InvalidConfigError, OLAKind, OLAObservation, RobotMemory, all_frames,
    classify_ola, frames_count, provably_inner, read_config_csv, sense_directions, sense_ld, sense_ola,
    visible_from, visible_mask, visible_set, write_config_csv,
)

import oracles


def lattice_points(dim, lo=-4, hi=4, max_n=14):
    """Distinct integer points: plenty of exact collinear triples."""
    return st.lists(st.tuples(*[st.integers(lo, hi)] * dim), min_size=2, max_size=max_n, unique=True)


def kernel_row(pos, i):
    mask = np.zeros(len(pos), dtype=np.bool_)
    _kernels.visible_row(np.ascontiguousarray(pos, dtype=float), i, mask)
    return mask


def test_collinear_trio_hides_far_end():
    cfg = Configuration([[0, 0], [1, 0], [2, 0]])
    assert [s.index for s in visible_set(cfg, 0)] == [1]
    assert [s.index for s in visible_set(cfg, 1)] == [0, 2]
    assert [s.index for s in visible_set(cfg, 2)] == [1]


def test_two_robots_always_see_each_other():
    cfg = Configuration([[3.0, -1.0], [-7.5, 2.0]])
    assert visible_mask(cfg.positions).tolist() == [[False, True], [True, False]]


def test_sighting_has_unit_direction_and_distance():
    cfg = Configuration([[0, 0], [3, 4]])
    (s,) = visible_set(cfg, 0)
    assert s.distance == pytest.approx(5.0)
    assert np.allclose(s.direction, [0.6, 0.8])


def test_collocated_robots_are_invisible():
    cfg = Configuration([[1, 1], [1, 1], [2, 1]])
    assert visible_from(cfg.positions, 0).tolist() == [False, False, True]


@given(lattice_points(2))
def test_planar_visibility_matches_reduced_direction_oracle(pts):
    pos = np.array(pts, dtype=float)
    mask = visible_mask(pos)
    for i in range(len(pos)):
        expect = oracles.lattice_visible(pts, i)
        assert np.flatnonzero(mask[i]).tolist() == expect
        assert np.flatnonzero(visible_from(pos, i)).tolist() == expect
        assert np.flatnonzero(kernel_row(pos, i)).tolist() == expect


@given(lattice_points(3, -3, 3, 12))
def test_spatial_visibility_matches_reduced_direction_oracle(pts):
    pos = np.array(pts, dtype=float)
    mask = visible_mask(pos)
    for i in range(len(pos)):
        expect = oracles.lattice_visible(pts, i)
        assert np.flatnonzero(mask[i]).tolist() == expect
        assert np.flatnonzero(kernel_row(pos, i)).tolist() == expect


@pytest.mark.parametrize("seed", range(20))
def test_random_planar_visibility_matches_pairwise_oracle(seed):
    rng = np.random.default_rng(seed)
    pos = rng.uniform(0, 50, (20, 2))
    # force a few exact collinear triples through scaled copies
    pos[17] = pos[0] + 2.0 * (pos[1] - pos[0])
    pos[18] = pos[2] + 0.5 * (pos[3] - pos[2])
    mask = visible_mask(pos)
    for i in range(len(pos)):
        assert np.flatnonzero(mask[i]).tolist() == oracles.bucket_visible(pos, i)


@given(lattice_points(2), st.randoms())
def test_relabelling_permutes_visibility(pts, rnd):
    pos = np.array(pts, dtype=float)
    perm = list(range(len(pos)))
    rnd.shuffle(perm)
    mask = visible_mask(pos)
    pmask = visible_mask(pos[perm])
    assert np.array_equal(pmask, mask[np.ix_(perm, perm)])


@given(lattice_points(2), st.randoms())
def test_observations_ignore_robot_labels(pts, rnd):
    pos = np.array(pts, dtype=float)
    perm = list(range(len(pos)))
    rnd.shuffle(perm)
    cfg, pcfg = Configuration(pos), Configuration(pos[perm])
    for new, old in enumerate(perm):
        assert sense_ld(cfg, old, 2.0) == sense_ld(pcfg, new, 2.0)
        assert sense_ola(cfg, old, AxisFrame.identity()) == sense_ola(pcfg, new, AxisFrame.identity())


def test_far_flag_is_strict():
    cfg = Configuration([[0, 0], [2, 0], [0, 2.0000001]])
    obs = sense_ld(cfg, 0, 2.0)
    by_dir = {tuple(np.round(u, 6)): f for u, f in zip(obs.directions, obs.is_far)}
    assert by_dir == {(1.0, 0.0): False, (0.0, 1.0): True}


@given(arrays(np.float64, (6, 2), elements=st.floats(-50, 50).map(lambda x: round(x, 3)), unique=True),
       st.floats(0.01, 100))
def test_directions_are_scale_free(pos, scale):
    if len({tuple(p) for p in pos}) < len(pos):
        return
    a = sense_directions(Configuration(pos), 0)
    b = sense_directions(Configuration(pos * scale), 0)
    assert a.shape == b.shape
    assert np.allclose(a, b, atol=1e-9)


@pytest.mark.parametrize("dim", [2, 3])
def test_frame_round_trip_and_count(dim):
    frames = all_frames(dim)
    assert len(frames) == frames_count(dim) == {2: 8, 3: 48}[dim]
    assert len(set(frames)) == len(frames)
    v = np.arange(1.0, dim + 1)
    for f in frames:
        assert np.array_equal(f.to_world(f.to_local(v)), v)
        assert np.array_equal(f.matrix @ v, f.to_local(v))


def _obs(*dirs):
    u = np.array(dirs, dtype=float)
    return OLAObservation(u / np.linalg.norm(u, axis=1, keepdims=True))


def test_classification_of_canonical_views():
    assert classify_ola(_obs([1, 1])).kind is OLAKind.LINE_END
    corner = classify_ola(_obs([1, 0.2], [0.3, 1]))
    assert corner.kind is OLAKind.CORNER and corner.inward == {0: 1, 1: 1}
    boundary = classify_ola(_obs([1, 1], [-1, 1]))
    assert boundary.kind is OLAKind.BOUNDARY and boundary.inward == {1: 1}
    assert classify_ola(_obs([1, 1], [-1, 1], [0, -1])).kind is OLAKind.INNER
    line = classify_ola(_obs([1, 0], [-1, 0]))
    assert line.kind is OLAKind.LINE_DEGENERATE and line.degenerate == (1,)


def test_empty_observation_is_rejected():
    with pytest.raises(InvalidConfigError):
        classify_ola(OLAObservation(np.zeros((0, 2))))


@given(lattice_points(2, max_n=10), st.integers(0, 9))
def test_provably_inner_implies_inner_in_every_frame(pts, i):
    pos = np.array(pts, dtype=float)
    i %= len(pos)
    if not provably_inner(pos, i):
        return
    cfg = Configuration(pos)
    for f in all_frames(2):
        assert classify_ola(sense_ola(cfg, i, f)).kind is OLAKind.INNER


@given(lattice_points(2, max_n=10), st.integers(0, 9))
def test_compiled_inner_shortcut_matches_reference(pts, i):
    pos = np.array(pts, dtype=float)
    i %= len(pos)
    assert _kernels.provably_inner(pos, i, pos.min(axis=0), pos.max(axis=0)) == provably_inner(pos, i)


def test_memory_slots():
    m = RobotMemory.empty(3).with_set([(0, -1), (2, 1)])
    assert str(m) == "100001"
    assert m.has(0, -1) and m.has(2, 1) and not m.has(0, 1)
    assert not m.axis_closed(0)
    assert m.with_set([(0, 1)]).axis_closed(0)
    assert RobotMemory((True,) * 4).all_set


def test_config_csv_round_trip(tmp_path):
    cfg = Configuration(np.random.default_rng(1).uniform(0, 10, (7, 3)))
    path = tmp_path / "c.csv"
    write_config_csv(cfg, path)
    assert path.read_text().splitlines()[:2] == ["dim=3", "x_1,x_2,x_3"]
    assert np.array_equal(read_config_csv(path).positions, cfg.positions)


def test_config_csv_rejects_bad_rows(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("dim=2\nx_1,x_2\n1,2,3\n4,5,6\n")
    with pytest.raises(ValueError):
        read_config_csv(path)
    path.write_text("1,2\n3,4\n")
    with pytest.raises(ValueError):
        read_config_csv(path)


def test_configuration_needs_two_robots():
    with pytest.raises(InvalidConfigError):
        Configuration([[0, 0]])
