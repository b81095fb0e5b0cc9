import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from monoculus.engine import (
    SimulationParams, converged_predicate, perturb, read_trace_meta, replay_steps, run, trace_csv,
    trace_header, write_trace_csv,
)
from monoculus.geometry import box_extent, convex_hull, max_pairwise_distance, point_in_hull
from monoculus.world import Configuration, RobotMemory, visible_mask


def line_pair(d):
    return Configuration([[0.0, 0.0], [d, 0.0]])


def test_two_robots_close_in_one_unit_per_round():
    r = run(SimulationParams(algorithm="ld", window=4), line_pair(10.0))
    assert r.converged
    assert (r.rounds, r.work) == (3, 6)
    # the pair keeps walking toward each other until the window expires
    assert max_pairwise_distance(r.trace.after[r.trace.round == 2]) <= 10.0


def test_already_converged_configuration_never_moves():
    cfg = Configuration([[0, 0], [1, 1], [1.5, 0.2], [0.3, 1.8]])
    r = run(SimulationParams(algorithm="ld"), cfg)
    assert r.converged and r.quiescent
    assert (r.rounds, r.work, r.total_moves) == (0, 0, 0)
    assert np.array_equal(r.final.positions, cfg.positions)


def test_pair_below_two_steps_oscillates_but_converges():
    r = run(SimulationParams(algorithm="ld"), line_pair(1.5))
    assert r.converged and not r.quiescent
    assert r.rounds == 0
    assert r.total_moves > 0


def test_predicate_boundaries():
    ld = SimulationParams(algorithm="ld", b=1.0, c=2.0)
    assert converged_predicate(line_pair(4.0), ld)
    assert not converged_predicate(line_pair(4.001), ld)
    ola = SimulationParams(algorithm="ola", b=1.0)
    assert converged_predicate(Configuration([[0, 0], [2.0, 1.5]]), ola)
    assert not converged_predicate(Configuration([[0, 0], [2.1, 1.5]]), ola)


@pytest.mark.parametrize("sched", ["fsync", "ssync", "async"])
@pytest.mark.parametrize("algo", ["ld", "ola", "ola-term", "median", "oracle"])
def test_runs_are_deterministic(algo, sched):
    p = SimulationParams(algorithm=algo, scheduler=sched, n=8, side=20.0, seed=11, max_events=20_000)
    a, b = run(p), run(p)
    assert a.trace == b.trace
    assert trace_csv(a) == trace_csv(b)
    assert a.summary() == b.summary()


def test_ola_predicate_holds_over_a_much_longer_window():
    p = SimulationParams(algorithm="ola", n=10, side=40.0, seed=3)
    first = run(p)
    assert first.converged
    longer = run(SimulationParams(algorithm="ola", n=10, side=40.0, seed=3, window=10 * max(first.rounds, p.W)))
    assert longer.converged
    assert longer.rounds == first.rounds


def test_cap_is_reported_not_raised():
    r = run(SimulationParams(algorithm="ld", n=30, side=100.0, max_events=50))
    assert not r.converged
    assert r.events <= 50 + 30


def test_perturb_zero_is_identity_and_magnitude_bounds_displacement():
    cfg = Configuration(np.random.default_rng(0).uniform(0, 10, (20, 3)))
    assert np.array_equal(perturb(cfg, 1, 0.0).positions, cfg.positions)
    moved = perturb(cfg, 1, 2.5)
    assert np.linalg.norm(moved.positions - cfg.positions, axis=1).max() <= 2.5
    assert np.array_equal(perturb(cfg, 1, 2.5).positions, moved.positions)
    with pytest.raises(ValueError):
        perturb(cfg, 1, -1.0)


@pytest.mark.parametrize("sched", ["fsync", "ssync", "async"])
def test_mid_run_perturbation_still_converges(sched):
    base = SimulationParams(algorithm="ld", scheduler=sched, n=12, side=50.0, seed=4)
    clean = run(base)
    r = run(SimulationParams(algorithm="ld", scheduler=sched, n=12, side=50.0, seed=4,
                             perturb_at=clean.events // 2, perturb_magnitude=50.0))
    assert r.perturbed_at is not None
    assert r.converged


def test_all_ones_memory_freezes_the_swarm():
    p = SimulationParams(algorithm="ola-term", n=10, side=30.0, seed=2)
    r = run(p, memories=[RobotMemory((True,) * 4)] * 10)
    assert r.quiescent and r.all_stopped
    assert r.total_moves == 0


def test_partially_stopped_swarm_shrinks_inside_stopped_robots():
    p = SimulationParams(algorithm="ola-term", n=12, side=30.0, seed=6)
    stopped = set(range(0, 12, 3))
    mem = [RobotMemory((True,) * 4) if i in stopped else RobotMemory.empty() for i in range(12)]
    r = run(p, memories=mem)
    assert r.quiescent
    rows = r.trace.phase == 1
    moved = r.trace.robot[rows][np.any(r.trace.before[rows] != r.trace.after[rows], axis=1)]
    assert not set(moved.tolist()) & stopped
    prev = box_extent(r.initial.positions)
    for step in replay_steps(r):
        ext = box_extent(step.after)
        assert (ext <= np.maximum(prev, 2 * p.b) + 1e-9).all()
        prev = ext


@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["fsync", "ssync"]), st.integers(3, 14))
def test_ld_hull_never_grows_under_synchronous_schedules(seed, sched, n):
    r = run(SimulationParams(algorithm="ld", scheduler=sched, n=n, side=20.0, seed=seed))
    for step in replay_steps(r):
        h = convex_hull(step.before)
        # every vertex of the new hull is a robot position, so checking robots is enough
        assert all(point_in_hull(h, p, 1e-9) for p in step.after)


@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["fsync", "ssync", "async"]), st.integers(2, 14))
def test_quiescent_ld_state_has_no_far_mutual_pair(seed, sched, n):
    p = SimulationParams(algorithm="ld", scheduler=sched, n=n, side=20.0, seed=seed)
    r = run(p)
    assert r.converged
    if r.quiescent:
        pos = r.final.positions
        vis = visible_mask(pos)
        d = np.linalg.norm(pos[:, None] - pos[None], axis=-1)
        assert not np.any(vis & vis.T & (d > p.c))


@settings(max_examples=20)
@given(st.integers(0, 2**32 - 1), st.integers(2, 14), st.sampled_from(["fsync", "ssync"]))
def test_planar_ola_box_extent_never_grows_above_two_steps(seed, n, sched):
    # planar only: in 3-D a robot closed on two axes may step past the box along the third
    p = SimulationParams(algorithm="ola", scheduler=sched, n=n, side=20.0, seed=seed)
    r = run(p)
    assert r.converged
    prev = box_extent(r.initial.positions)
    for step in replay_steps(r):
        ext = box_extent(step.after)
        assert (ext <= np.maximum(prev, 2 * p.b) + 1e-9).all()
        prev = ext


@settings(max_examples=20)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["ld", "ola", "ola-term", "median", "oracle"]),
       st.sampled_from(["fsync", "ssync", "async"]))
def test_work_counts_displacing_moves(seed, algo, sched):
    r = run(SimulationParams(algorithm=algo, scheduler=sched, n=6, side=15.0, seed=seed, max_events=20_000))
    tr = r.trace
    displacing = (tr.phase == 1) & np.any(tr.before != tr.after, axis=1)
    assert r.total_moves == int(displacing.sum())
    assert r.work <= r.total_moves
    assert np.array_equal(tr.work_cum, np.cumsum(displacing))


@settings(max_examples=20)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["ld", "ola"]), st.sampled_from(["fsync", "ssync", "async"]),
       st.floats(0.0, 40.0))
def test_any_single_perturbation_is_recovered(seed, algo, sched, magnitude):
    base = run(SimulationParams(algorithm=algo, scheduler=sched, n=8, side=20.0, seed=seed))
    at = int(np.random.default_rng(seed).integers(0, max(base.events, 1)))
    r = run(SimulationParams(algorithm=algo, scheduler=sched, n=8, side=20.0, seed=seed,
                             perturb_at=at, perturb_magnitude=magnitude))
    assert r.converged


@settings(max_examples=10)
@given(st.integers(0, 2**32 - 1), st.integers(2, 14))
def test_spatial_ola_converges(seed, n):
    r = run(SimulationParams(algorithm="ola", n=n, side=20.0, seed=seed, dim=3))
    assert r.converged
    assert (box_extent(r.final.positions) <= 2.0 + 1e-9).all()


def test_replay_rebuilds_final_positions():
    for sched in ("fsync", "ssync", "async"):
        r = run(SimulationParams(algorithm="ola", scheduler=sched, n=9, side=20.0, seed=8))
        last = r.initial.positions
        for step in replay_steps(r):
            assert np.array_equal(step.before, last)
            last = step.after
        assert np.array_equal(last, r.final.positions)


def test_replay_needs_a_recorded_trace():
    r = run(SimulationParams(algorithm="ld", n=5, side=20.0), record_trace=False)
    with pytest.raises(ValueError):
        list(replay_steps(r))


CASES = [(algo, sched, dim, seed) for algo in ("ld", "ola", "ola-term") for sched in ("fsync", "ssync", "async")
         for dim in (2, 3) for seed in (0, 1)]


@pytest.mark.parametrize("algo,sched,dim,seed", CASES)
def test_compiled_loop_matches_reference(algo, sched, dim, seed):
    kw = dict(algorithm=algo, scheduler=sched, dim=dim, n=10, side=15.0, seed=seed)
    if seed:
        kw.update(perturb_at=150, perturb_magnitude=10.0)
    p = SimulationParams(**kw)
    ref, fast = run(p, backend="reference"), run(p, backend="compiled")
    assert fast.trace == ref.trace
    assert (fast.converged, fast.rounds, fast.work, fast.events, fast.quiescent, fast.perturbed_at) == \
           (ref.converged, ref.rounds, ref.work, ref.events, ref.quiescent, ref.perturbed_at)
    assert np.array_equal(fast.final.positions, ref.final.positions)
    assert fast.memories == ref.memories


def test_compiled_backend_refuses_uncovered_algorithms():
    with pytest.raises(ValueError):
        run(SimulationParams(algorithm="median", n=4), backend="compiled")
    with pytest.raises(ValueError):
        run(SimulationParams(algorithm="ld", n=4, tie_break="random"), backend="compiled")


def test_trace_file_round_trip(tmp_path):
    r = run(SimulationParams(algorithm="ld", scheduler="async", n=5, side=10.0, seed=1))
    path = tmp_path / "t.csv"
    write_trace_csv(r, path)
    lines = path.read_text().splitlines()
    assert lines[1].split(",") == trace_header(2)
    assert trace_header(2) == ["event", "round", "robot", "phase", "algo", "x1_before", "x2_before",
                               "x1_after", "x2_after", "work_cum"]
    assert len(lines) == 2 + r.events
    params, initial = read_trace_meta(path)
    assert params == r.params
    assert np.array_equal(initial.positions, r.initial.positions)


@pytest.mark.parametrize("kw", [dict(n=1), dict(dim=1), dict(b=0), dict(algorithm="ld", c=1.5),
                                dict(algorithm="median", dim=3), dict(tie_break="coin"), dict(window=0),
                                dict(perturb_at=-1)])
def test_invalid_params_are_rejected(kw):
    with pytest.raises(ValueError):
        SimulationParams(**kw)
