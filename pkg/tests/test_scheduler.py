import numpy as np
import pytest

from monoculus.engine import SimulationParams, run
from monoculus.scheduler import Phase, PhaseEvent, Schedule, Scheduler, SchedulerModel, next_event, next_round

PREFIX = 10_000


def rounds(model, seed, n, k, fairness=None):
    return Scheduler(Schedule(model, seed, fairness), n).round_block(k)


def events(seed, n, k, fairness=None):
    return Scheduler(Schedule("async", seed, fairness), n).event_block(k)


def test_fsync_activates_everyone():
    s = Scheduler(Schedule("fsync"), 5)
    for _ in range(10):
        assert next_round(s) == [0, 1, 2, 3, 4]


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("n", [2, 5, 17])
def test_ssync_every_window_of_k_rounds_covers_all(seed, n):
    act = rounds("ssync", seed, n, PREFIX)
    K = 3 * n
    assert act.any(axis=1).all()
    # cumulative activation counts: every robot must gain at least one per window
    cum = np.vstack([np.zeros(n, int), np.cumsum(act, axis=0)])
    assert (cum[K:] - cum[:-K] >= 1).all()


def test_ssync_rounds_are_not_all_full():
    act = rounds("ssync", 1, 10, 200)
    assert 0 < act.mean() < 1


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("n", [2, 5, 17])
def test_async_every_window_holds_a_full_cycle(seed, n):
    robots, phases = events(seed, n, PREFIX)
    K = 6 * n
    # within any K consecutive events each robot does a Look followed later by its Move
    for i in range(n):
        look = np.flatnonzero((robots == i) & (phases == 0))
        move = np.flatnonzero((robots == i) & (phases == 1))
        assert len(look) and len(move)
        # each Look's Move comes after it; a complete cycle spans at most K events from any start
        paired = move[: len(look)] if move[0] > look[0] else move[1: len(look) + 1]
        starts = look[: len(paired)]
        assert (paired > starts).all()
        for w0 in range(0, PREFIX - K, K // 2):
            inside = (starts >= w0) & (paired < w0 + K)
            assert inside.any(), (i, w0)


@pytest.mark.parametrize("seed", range(3))
def test_async_phases_alternate_per_robot(seed):
    robots, phases = events(seed, 6, 3000)
    for i in range(6):
        p = phases[robots == i]
        assert p[0] == 0
        assert (p[1:] != p[:-1]).all()


def test_async_allows_stale_interleaving():
    # some seed starts with L(0) L(1) M(0) M(1) or its mirror image
    wanted = {((0, 0), (1, 0), (0, 1), (1, 1)), ((1, 0), (0, 0), (1, 1), (0, 1))}
    found = False
    for seed in range(200):
        r, p = events(seed, 2, 4, fairness=12)
        if tuple(zip(r.tolist(), p.tolist())) in wanted:
            found = True
            break
    assert found


@pytest.mark.parametrize("model", ["ssync", "async"])
def test_streams_are_deterministic(model):
    a = Scheduler(Schedule(model, 42), 7)
    b = Scheduler(Schedule(model, 42), 7)
    if model == "ssync":
        assert np.array_equal(a.round_block(1000), b.round_block(1000))
    else:
        ra, pa = a.event_block(5000)
        rb, pb = b.event_block(5000)
        assert np.array_equal(ra, rb) and np.array_equal(pa, pb)


def test_different_seeds_differ():
    assert not np.array_equal(rounds("ssync", 1, 8, 100), rounds("ssync", 2, 8, 100))


def test_stream_does_not_depend_on_block_sizes():
    whole = rounds("ssync", 9, 6, 700)
    s = Scheduler(Schedule("ssync", 9), 6)
    parts = [s.round_block(k) for k in (1, 255, 3, 300, 141)]
    assert np.array_equal(np.vstack(parts), whole)
    r_all, p_all = events(9, 6, 2500)
    s = Scheduler(Schedule("async", 9), 6)
    got = [next_event(s) for _ in range(5)]
    r, p = s.event_block(2495)
    assert got == [PhaseEvent(int(i), Phase.MOVE if ph else Phase.LOOK) for i, ph in zip(r_all[:5], p_all[:5])]
    assert np.array_equal(r, r_all[5:]) and np.array_equal(p, p_all[5:])


def test_custom_fairness_bound_is_enforced():
    act = rounds("ssync", 3, 10, 2000, fairness=2)
    cum = np.vstack([np.zeros(10, int), np.cumsum(act, axis=0)])
    assert (cum[2:] - cum[:-2] >= 1).all()


def test_async_rejects_too_tight_bound():
    with pytest.raises(ValueError):
        Scheduler(Schedule("async", 0, fairness=5), 4)
    with pytest.raises(ValueError):
        Schedule("ssync", fairness=0)


def test_model_mismatch_is_a_type_error():
    with pytest.raises(TypeError):
        Scheduler(Schedule("fsync"), 3).event_block(1)
    with pytest.raises(TypeError):
        Scheduler(Schedule("async"), 3).round_block(1)


@pytest.mark.parametrize("algo", ["ld", "ola", "median"])
def test_ssync_with_everyone_active_reproduces_fsync(algo):
    # a fairness bound of one round forces every robot into every round
    base = dict(algorithm=algo, n=12, side=30.0, seed=5)
    f = run(SimulationParams(scheduler="fsync", **base), backend="reference")
    s = run(SimulationParams(scheduler="ssync", fairness=1, **base), backend="reference")
    assert f.trace == s.trace
    assert (f.rounds, f.work, f.converged) == (s.rounds, s.work, s.converged)
    assert np.array_equal(f.final.positions, s.final.positions)
