"""Look-Compute-Move simulation loop.

A run is a pure function of its :class:`SimulationParams` (and the initial
configuration when one is supplied).  Convergence is a persistent property:
the predicate must hold for ``W`` consecutive rounds (epochs under ASYNC), or
the swarm must be quiescent, meaning every robot would stay and no stale move
is pending.  The reported ``rounds`` and ``work`` are taken at the start of
that final streak.

Two interchangeable loops exist.  The reference loop below calls the public
sensing and decision functions robot by robot and supports every algorithm.
The compiled loop in ``_kernels`` covers LD, OLA and the termination variant
with the deterministic tie-break and is used for them by default; both yield
identical traces.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from . import _kernels as K
from . import algorithms as alg
from .algorithms import STAY, AlgorithmId, Decision
from .geometry import bounding_box, box_extent, max_pairwise_distance
from .scheduler import Phase, Schedule, Scheduler, SchedulerModel
from .world import (
    COLLOCATED_TOL,
    AxisFrame,
    Configuration,
    InvalidConfigError,
    RobotMemory,
    ld_observation_from_mask,
    ola_observation_from_mask,
    provably_inner,
    random_frame,
    visible_from,
    visible_mask,
)

# slack on the convergence predicates, far below one step
PREDICATE_TOL = K.PREDICATE_TOL
MAX_EVENTS = 10**7
BACKENDS = ("auto", "reference", "compiled")


@dataclass(frozen=True)
class SimulationParams:
    algorithm: AlgorithmId = AlgorithmId.CONVERGE_LOCALITY
    n: int = 10
    side: float = 100.0
    dim: int = 2
    b: float = 1.0
    c: float = 2.0
    scheduler: SchedulerModel = SchedulerModel.FSYNC
    seed: int = 0
    fairness: int | None = None
    window: int | None = None
    max_events: int = MAX_EVENTS
    tie_break: str = "lex"
    corner_diag: bool = False
    perturb_at: int | None = None
    perturb_magnitude: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "algorithm", AlgorithmId(self.algorithm))
        object.__setattr__(self, "scheduler", SchedulerModel(self.scheduler))
        if self.n < 2:
            raise ValueError("need at least two robots")
        if self.dim < 2:
            raise ValueError("dimension must be at least 2")
        if not (self.b > 0 and self.c > 0 and self.side > 0):
            raise ValueError("b, c and side must be positive")
        if self.algorithm is AlgorithmId.CONVERGE_LOCALITY and self.c < 2 * self.b:
            raise ValueError(f"LD needs c >= 2b (got c={self.c}, b={self.b})")
        if self.algorithm in (AlgorithmId.NAIVE_MEDIAN, AlgorithmId.NAIVE_ANGLE_BISECTOR) and self.dim != 2:
            raise ValueError("the naive strategies are planar only")
        if self.tie_break not in ("lex", "random"):
            raise ValueError("tie_break must be 'lex' or 'random'")
        if self.window is not None and self.window < 1:
            raise ValueError("stability window must be positive")
        if self.max_events < 1:
            raise ValueError("max_events must be positive")
        if self.perturb_at is not None and self.perturb_at < 0:
            raise ValueError("perturbation event index must be non-negative")
        if self.perturb_magnitude < 0:
            raise ValueError("perturbation magnitude must be non-negative")

    @property
    def W(self) -> int:
        return self.window if self.window is not None else 5 * self.n

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["algorithm"] = self.algorithm.value
        d["scheduler"] = self.scheduler.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SimulationParams":
        return cls(**d)


@dataclass(frozen=True)
class TraceRecord:
    event: int
    round: int
    robot: int
    phase: Phase
    decision: tuple[float, ...] | None
    before: tuple[float, ...]
    after: tuple[float, ...]
    work_cum: int


@dataclass(eq=False)
class Trace:
    """Columnar event log; row ``k`` is event ``k``.

    ``decision`` holds the world-frame move direction of Move rows and NaN for
    Look rows and Stay decisions.
    """

    round: np.ndarray
    robot: np.ndarray
    phase: np.ndarray  # 0 Look, 1 Move
    work_cum: np.ndarray
    decision: np.ndarray
    before: np.ndarray
    after: np.ndarray

    @classmethod
    def empty(cls, dim: int) -> "Trace":
        z = np.zeros(0, dtype=np.int64)
        f = np.zeros((0, dim))
        return cls(z, z.copy(), z.astype(np.int8), z.copy(), f, f.copy(), f.copy())

    def __len__(self) -> int:
        return len(self.round)

    def __getitem__(self, k: int) -> TraceRecord:
        dec = self.decision[k]
        return TraceRecord(
            int(k), int(self.round[k]), int(self.robot[k]),
            Phase.MOVE if self.phase[k] else Phase.LOOK,
            None if np.isnan(dec[0]) else tuple(float(x) for x in dec),
            tuple(float(x) for x in self.before[k]), tuple(float(x) for x in self.after[k]),
            int(self.work_cum[k]))

    def __iter__(self) -> Iterator[TraceRecord]:
        return (self[k] for k in range(len(self)))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Trace):
            return NotImplemented
        return all(np.array_equal(getattr(self, f.name), getattr(other, f.name), equal_nan=True)
                   for f in dataclasses.fields(self))

    __hash__ = None


@dataclass
class RunResult:
    params: SimulationParams
    initial: Configuration
    final: Configuration
    converged: bool
    rounds: int
    work: int
    events: int
    total_moves: int
    quiescent: bool
    trace: Trace
    memories: list[RobotMemory] | None = None
    perturbed_at: int | None = None
    perturbed_positions: np.ndarray | None = field(default=None, repr=False)

    @property
    def all_stopped(self) -> bool | None:
        """Termination variant only: every robot holds the all-bits-set state."""
        if self.memories is None:
            return None
        return all(m.all_set for m in self.memories)

    def summary(self) -> dict:
        lo, hi = bounding_box(self.final.positions)
        out = {
            "algorithm": self.params.algorithm.value,
            "scheduler": self.params.scheduler.value,
            "n": self.final.n,
            "dim": self.final.dim,
            "seed": self.params.seed,
            "converged": self.converged,
            "rounds": self.rounds,
            "work": self.work,
            "events": self.events,
            "quiescent": self.quiescent,
            "final_bbox": [lo.tolist(), hi.tolist()],
            "final_extent": (hi - lo).tolist(),
            "final_max_pairwise": max_pairwise_distance(self.final.positions),
        }
        if self.memories is not None:
            out["all_stopped"] = self.all_stopped
            out["memories"] = [str(m) for m in self.memories]
        if self.perturbed_at is not None:
            out["perturbed_at"] = self.perturbed_at
        return out


def converged_predicate(config, params: SimulationParams) -> bool:
    pos = getattr(config, "positions", config)
    if params.algorithm.uses_ola:
        return bool(np.all(box_extent(pos) <= 2 * params.b + PREDICATE_TOL))
    return max_pairwise_distance(pos) <= 2 * params.c + PREDICATE_TOL


def perturb(config: Configuration, seed: int, magnitude: float) -> Configuration:
    """Displace every robot by a seeded random vector of norm at most ``magnitude``."""
    if magnitude < 0:
        raise ValueError("magnitude must be non-negative")
    if magnitude == 0:
        return config.copy()
    rng = np.random.default_rng(seed)
    n, d = config.positions.shape
    v = rng.standard_normal((n, d))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    r = magnitude * rng.random(n) ** (1.0 / d)
    return Configuration(config.positions + v * r[:, None], config.time)


def corrupt_memory(memories: list[RobotMemory], seed: int) -> list[RobotMemory]:
    """Overwrite every termination bit with an arbitrary value."""
    rng = np.random.default_rng(seed)
    return [RobotMemory(tuple(bool(x) for x in rng.random(len(m.bits)) < 0.5)) for m in memories]


def deploy(params: SimulationParams) -> Configuration:
    rng = np.random.default_rng(_streams(params.seed)[0])
    return Configuration(rng.uniform(0.0, params.side, size=(params.n, params.dim)))


def _streams(seed: int) -> list[np.random.SeedSequence]:
    # deployment, frames, tie-breaks, perturbation
    return np.random.SeedSequence(seed & (2**64 - 1)).spawn(4)


def _inner_flags(pos: np.ndarray) -> np.ndarray:
    """Vectorised :func:`provably_inner` for every robot."""
    delta = pos[None, :, :] - pos[:, None, :]
    dist = np.linalg.norm(delta, axis=-1)
    thr = np.where(dist > COLLOCATED_TOL, 1e-12 * dist, np.inf)[..., None]
    both = np.any(delta > thr, axis=1) & np.any(delta < -thr, axis=1)
    return np.all(both, axis=1)


class _Simulation:
    """Shared setup; the reference loop lives in this class."""

    def __init__(self, params: SimulationParams, initial: Configuration | None,
                 memories: list[RobotMemory] | None, record_trace: bool):
        if initial is not None:
            params = dataclasses.replace(params, n=initial.n, dim=initial.dim)
        self.params = params
        self.initial = initial.copy() if initial is not None else deploy(params)
        self.pos = self.initial.positions.copy()
        n, d = self.pos.shape
        self.n = n
        _, s_frames, s_tie, s_perturb = _streams(params.seed)
        self.algo = params.algorithm
        frame_rng = np.random.default_rng(s_frames)
        self.frames: list[AxisFrame] | None = (
            [random_frame(frame_rng, d) for _ in range(n)] if self.algo.uses_ola else None)
        self.tie_rng = np.random.default_rng(s_tie) if params.tie_break == "random" else None
        self.perturb_seed = int(s_perturb.generate_state(1)[0])
        if self.algo is AlgorithmId.CONVERGE_QUADRANT_TERMINATION:
            self.memory = list(memories) if memories is not None else [RobotMemory.empty(d)] * n
            if len(self.memory) != n or any(m.dim != d for m in self.memory):
                raise ValueError("need one 2d-bit memory per robot")
        else:
            self.memory = None
        self.scheduler = Scheduler(Schedule(params.scheduler, params.seed, params.fairness), n)
        self.record = record_trace
        self._rows: list[tuple] = []
        self.events = 0
        self.moves = 0
        self.round = 0
        self.streak: tuple[int, int] | None = None  # (round, work) when the predicate began to hold
        self.quiescent = False
        self.perturbed_at: int | None = None
        self.perturbed_positions: np.ndarray | None = None
        self._update_streak()

    # -- decisions ------------------------------------------------------------

    def decide(self, i: int, pos: np.ndarray, mask_row: np.ndarray | None = None,
               inner: bool | None = None) -> tuple[Decision, RobotMemory | None]:
        """World-frame decision of robot ``i`` on snapshot ``pos`` (memory not committed)."""
        algo = self.algo
        mem = self.memory[i] if self.memory is not None else None
        if algo is AlgorithmId.CENTROID_ORACLE:
            return alg.centroid_oracle(pos, i), None
        if algo.uses_ola:
            if mem is not None and mem.all_set:
                return STAY, mem
            if inner if inner is not None else provably_inner(pos, i):
                return STAY, mem
        if mask_row is None:
            mask_row = visible_from(pos, i)
        if not mask_row.any():
            if np.ptp(pos, axis=0).max() <= 2 * COLLOCATED_TOL:
                return STAY, mem
            raise InvalidConfigError(f"robot {i} sees nobody although robots are apart")
        if algo is AlgorithmId.CONVERGE_LOCALITY:
            obs = ld_observation_from_mask(pos, i, mask_row, self.params.c)
            return alg.converge_locality(obs, self.tie_rng), None
        if algo.uses_ola:
            frame = self.frames[i]
            obs = ola_observation_from_mask(pos, i, mask_row, frame)
            if mem is None:
                dec = alg.converge_quadrant(obs, self.params.corner_diag, self.tie_rng)
            else:
                dec, mem = alg.converge_quadrant_termination(obs, mem, self.params.corner_diag, self.tie_rng)
            if dec.is_move:
                dec = Decision(frame.to_world(dec.direction))
            return dec, mem
        obs = ld_observation_from_mask(pos, i, mask_row, self.params.c)
        if algo is AlgorithmId.NAIVE_MEDIAN:
            return alg.naive_median(obs.directions), None
        return alg.naive_angle_bisector(obs.directions), None

    def _decide_many(self, robots, pos):
        if self.algo.uses_ola:
            inner = _inner_flags(pos)
            return {i: self.decide(i, pos, inner=bool(inner[i])) for i in robots}
        if self.algo is AlgorithmId.CENTROID_ORACLE:
            return {i: self.decide(i, pos) for i in robots}
        if len(robots) * 4 >= self.n and pos.shape[1] == 2:
            mask = visible_mask(pos)
            return {i: self.decide(i, pos, mask[i]) for i in robots}
        return {i: self.decide(i, pos) for i in robots}

    def is_quiescent(self, pending: dict | None = None) -> bool:
        if pending and any(dec.is_move for dec in pending.values()):
            return False
        for i, (dec, mem) in self._decide_many(range(self.n), self.pos).items():
            if dec.is_move:
                return False
            if self.memory is not None and mem != self.memory[i]:
                return False
        return True

    # -- bookkeeping -----------------------------------------------------------

    def predicate(self) -> bool:
        return converged_predicate(self.pos, self.params)

    def _update_streak(self) -> bool:
        ok = self.predicate()
        if not ok:
            self.streak = None
        elif self.streak is None:
            self.streak = (self.round, self.moves)
        return ok

    def stable(self) -> bool:
        return self.streak is not None and self.round - self.streak[0] >= self.params.W

    def _log(self, robot, phase, dec, before, after):
        self.events += 1
        if self.record:
            d = self.pos.shape[1]
            direction = dec.direction if dec is not None and dec.is_move else np.full(d, np.nan)
            self._rows.append((self.round, robot, 0 if phase is Phase.LOOK else 1, self.moves,
                               direction, before.copy(), after.copy()))

    def _apply(self, i, dec) -> bool:
        before = self.pos[i].copy()
        if dec.is_move:
            self.pos[i] = before + self.params.b * dec.direction
        moved = not np.array_equal(self.pos[i], before)
        if moved:
            self.moves += 1
        self._log(i, Phase.MOVE, dec, before, self.pos[i])
        return moved

    def _perturb_due(self) -> bool:
        p = self.params
        return p.perturb_at is not None and self.perturbed_at is None and self.events >= p.perturb_at

    def _perturb(self) -> None:
        cfg = perturb(Configuration(self.pos), self.perturb_seed, self.params.perturb_magnitude)
        self.pos[:] = cfg.positions
        if self.memory is not None:
            self.memory = corrupt_memory(self.memory, self.perturb_seed + 1)
        self.perturbed_at = self.events
        self.perturbed_positions = self.pos.copy()
        self.streak = None
        self._update_streak()

    # -- reference loops ---------------------------------------------------------

    def run_sync(self) -> None:
        while self.events < self.params.max_events:
            if self.stable():
                return
            active = self.scheduler.next_round()
            snap = self.pos.copy()
            old_memory = list(self.memory) if self.memory is not None else None
            decisions = self._decide_many(active, snap)
            for i in active:
                self._log(i, Phase.LOOK, None, snap[i], snap[i])
            moved = False
            for i in active:
                dec, mem = decisions[i]
                if self.memory is not None:
                    self.memory[i] = mem
                moved |= self._apply(i, dec)
            self.round += 1
            ok = self._update_streak()
            if self._perturb_due():
                self._perturb()
                continue
            if moved:
                continue
            if len(active) == self.n:
                quiet = old_memory is None or old_memory == self.memory
            else:
                quiet = self.is_quiescent()
            if quiet:
                self.quiescent = True
                if not ok:
                    self.streak = None
                return

    def run_async(self) -> None:
        n = self.n
        pending: dict[int, Decision] = {}
        look_epoch = np.full(n, -1)
        done = np.zeros(n, dtype=bool)
        moved_in_epoch = False
        while self.events < self.params.max_events:
            if self.stable():
                return
            ev = self.scheduler.next_event()
            i = ev.robot
            if ev.phase is Phase.LOOK:
                dec, mem = self.decide(i, self.pos)
                if self.memory is not None:
                    self.memory[i] = mem
                pending[i] = dec
                look_epoch[i] = self.round
                self._log(i, Phase.LOOK, None, self.pos[i], self.pos[i])
            else:
                if self._apply(i, pending.pop(i)):
                    moved_in_epoch = True
                    self._update_streak()
                if look_epoch[i] == self.round:
                    done[i] = True
                if done.all():
                    self.round += 1
                    done[:] = False
                    if not moved_in_epoch and self.is_quiescent(pending):
                        self.quiescent = True
                        if not self.predicate():
                            self.streak = None
                        return
                    moved_in_epoch = False
            if self._perturb_due():
                self._perturb()

    def run(self) -> None:
        if self.params.scheduler is SchedulerModel.ASYNC:
            self.run_async()
        else:
            self.run_sync()

    def _trace(self) -> Trace:
        d = self.pos.shape[1]
        if not self._rows:
            return Trace.empty(d)
        rnd, robot, phase, work, dec, before, after = zip(*self._rows)
        return Trace(np.array(rnd, dtype=np.int64), np.array(robot, dtype=np.int64),
                     np.array(phase, dtype=np.int8), np.array(work, dtype=np.int64),
                     np.array(dec, dtype=float).reshape(-1, d), np.array(before).reshape(-1, d),
                     np.array(after).reshape(-1, d))

    def result(self) -> RunResult:
        converged = self.streak is not None and (self.stable() or self.quiescent)
        rounds, work = self.streak if converged else (self.round, self.moves)
        return RunResult(
            params=self.params, initial=self.initial, final=Configuration(self.pos.copy()),
            converged=converged, rounds=rounds, work=work, events=self.events,
            total_moves=self.moves, quiescent=self.quiescent, trace=self._trace(),
            memories=list(self.memory) if self.memory is not None else None,
            perturbed_at=self.perturbed_at, perturbed_positions=self.perturbed_positions)


_KERNEL_ALGOS = {
    AlgorithmId.CONVERGE_LOCALITY: K.LD,
    AlgorithmId.CONVERGE_QUADRANT: K.OLA,
    AlgorithmId.CONVERGE_QUADRANT_TERMINATION: K.OLA_TERM,
}


class _CompiledSimulation(_Simulation):
    """Same state machine as the reference loop, executed by the compiled kernels."""

    BLOCK = 1024

    def run(self) -> None:
        p = self.params
        n, d = self.pos.shape
        code = _KERNEL_ALGOS[self.algo]
        frames = self.frames or [AxisFrame.identity(d)] * n
        perm = np.array([f.perm for f in frames], dtype=np.int64)
        signs = np.array([f.signs for f in frames], dtype=float)
        mem = self._mem_array()
        state = np.zeros(K.STATE_SIZE, dtype=np.int64)
        state[K.HAS_STREAK] = self.streak is not None
        cap = 4096 if self.record else 0
        tr_i = np.zeros((cap, 4), dtype=np.int64)
        tr_f = [np.zeros((cap, d)) for _ in range(3)]
        is_async = p.scheduler is SchedulerModel.ASYNC
        if is_async:
            pending_dir = np.zeros((n, d))
            pending_move = np.zeros(n, dtype=bool)
            look_epoch = np.full(n, -1, dtype=np.int64)
            done = np.zeros(n, dtype=bool)
        block = None
        while True:
            if block is None or state[K.ROW] >= len(block[0]):
                block = self.scheduler.event_block(self.BLOCK) if is_async else (self.scheduler.round_block(self.BLOCK),)
                state[K.ROW] = 0
            stop_at = p.perturb_at if p.perturb_at is not None and self.perturbed_at is None else np.iinfo(np.int64).max
            if is_async:
                status = K.run_async(self.pos, block[0], block[1], code, p.b, p.c, p.corner_diag, perm, signs,
                                     mem, state, pending_dir, pending_move, look_epoch, done,
                                     p.W, p.max_events, stop_at, self.record, tr_i, *tr_f)
            else:
                status = K.run_sync(self.pos, block[0], code, p.b, p.c, p.corner_diag, perm, signs, mem, state,
                                    p.W, p.max_events, stop_at, self.record, tr_i, *tr_f)
            if status == K.FINISHED:
                break
            if status == K.TRACE_FULL:
                cap *= 2
                tr_i = np.resize(tr_i, (cap, 4))
                tr_f = [np.resize(a, (cap, d)) for a in tr_f]
            elif status == K.STOP_AT:
                self._sync_from(state, mem)
                self._perturb()
                mem = self._mem_array()
                state[K.HAS_STREAK] = self.streak is not None
                state[K.STREAK_ROUND], state[K.STREAK_WORK] = self.streak or (0, 0)
            elif status == K.ERROR:
                raise InvalidConfigError(f"robot {state[K.BAD_ROBOT]} sees nobody although robots are apart")
        self._sync_from(state, mem)
        t = state[K.TRACE_LEN]
        self._trace_arrays = (tr_i[:t], tr_f[0][:t], tr_f[1][:t], tr_f[2][:t])

    def _mem_array(self) -> np.ndarray:
        n, d = self.pos.shape
        if self.memory is None:
            return np.zeros((n, 2 * d), dtype=bool)
        return np.array([m.bits for m in self.memory], dtype=bool).reshape(n, 2 * d)

    def _sync_from(self, state, mem) -> None:
        self.events = int(state[K.EVENTS])
        self.moves = int(state[K.MOVES])
        self.round = int(state[K.ROUND])
        self.quiescent = bool(state[K.QUIESCENT])
        self.streak = (int(state[K.STREAK_ROUND]), int(state[K.STREAK_WORK])) if state[K.HAS_STREAK] else None
        if self.memory is not None:
            self.memory = [RobotMemory(tuple(bool(x) for x in row)) for row in mem]

    def _trace(self) -> Trace:
        if not self.record:
            return Trace.empty(self.pos.shape[1])
        ints, dec, before, after = self._trace_arrays
        return Trace(ints[:, 0].copy(), ints[:, 1].copy(), ints[:, 2].astype(np.int8), ints[:, 3].copy(),
                     dec.copy(), before.copy(), after.copy())


def run(params: SimulationParams, initial: Configuration | None = None, *,
        memories: list[RobotMemory] | None = None, record_trace: bool = True,
        backend: str = "auto") -> RunResult:
    """Simulate until converged-and-stable, quiescent, or ``max_events`` is hit.

    Hitting the cap is reported as ``converged=False``, not raised.
    ``backend`` picks the loop: ``"reference"``, ``"compiled"`` (LD, OLA and
    the termination variant with the lexicographic tie-break) or ``"auto"``.
    """
    if backend not in BACKENDS:
        raise ValueError(f"backend must be one of {BACKENDS}")
    compilable = params.algorithm in _KERNEL_ALGOS and params.tie_break == "lex"
    if backend == "compiled" and not compilable:
        raise ValueError("the compiled loop covers ld, ola and ola-term with the lex tie-break only")
    cls = _CompiledSimulation if backend != "reference" and compilable else _Simulation
    sim = cls(params, initial, memories, record_trace)
    sim.run()
    return sim.result()


# -- replay --------------------------------------------------------------------


@dataclass(frozen=True)
class Step:
    """One atomic change of the configuration: a round, or one ASYNC move.

    ``pending_*`` are the destinations of decisions taken at a Look whose
    Move has not happened yet (always empty for the synchronous models).
    """

    round: int
    before: np.ndarray
    after: np.ndarray
    pending_before: np.ndarray
    pending_after: np.ndarray


def replay_steps(result: RunResult) -> Iterator[Step]:
    """Rebuild the configuration sequence of a recorded run from its trace."""
    tr = result.trace
    if len(tr) == 0 and result.events > 0:
        raise ValueError("run was not recorded; rerun with record_trace=True")
    pos = result.initial.positions.copy()
    d = pos.shape[1]
    b = result.params.b
    empty = np.empty((0, d))
    if result.params.scheduler is not SchedulerModel.ASYNC:
        k = 0
        while k < len(tr):
            r = tr.round[k]
            if result.perturbed_at is not None and k == result.perturbed_at:
                pos = result.perturbed_positions.copy()
            before = pos.copy()
            while k < len(tr) and tr.round[k] == r:
                if tr.phase[k] == 1:
                    pos[tr.robot[k]] = tr.after[k]
                k += 1
            yield Step(int(r), before, pos.copy(), empty, empty)
        return

    # the destination of a Look is known from the robot's next Move row
    dest_dir = np.full((len(tr), d), np.nan)
    last_look = {}
    for k in range(len(tr)):
        i = int(tr.robot[k])
        if tr.phase[k] == 0:
            last_look[i] = k
        elif i in last_look:
            dest_dir[last_look.pop(i)] = tr.decision[k]
    pending: dict[int, np.ndarray] = {}

    def destinations():
        return np.array([pending[j] for j in sorted(pending)]).reshape(-1, d)

    for k in range(len(tr)):
        if result.perturbed_at is not None and k == result.perturbed_at:
            pos = result.perturbed_positions.copy()
        i = int(tr.robot[k])
        if tr.phase[k] == 0:
            dd = dest_dir[k]
            pending[i] = pos[i] + b * dd if not np.isnan(dd[0]) else pos[i].copy()
            continue
        before, pend_before = pos.copy(), destinations()
        pending.pop(i, None)
        pos[i] = tr.after[k]
        if not np.array_equal(before[i], pos[i]):
            yield Step(int(tr.round[k]), before, pos.copy(), pend_before, destinations())


# -- trace files ---------------------------------------------------------------


def trace_header(dim: int) -> list[str]:
    return (["event", "round", "robot", "phase", "algo"]
            + [f"x{k + 1}_before" for k in range(dim)]
            + [f"x{k + 1}_after" for k in range(dim)] + ["work_cum"])


def trace_csv(result: RunResult) -> str:
    """Trace as CSV text; the first line is a ``#`` comment carrying the run parameters."""
    buf = io.StringIO()
    meta = {"params": result.params.to_dict(), "initial": result.initial.positions.tolist()}
    buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(trace_header(result.initial.dim))
    tr = result.trace
    algo = result.params.algorithm.value
    phases = ("look", "move")
    before = tr.before.tolist()
    after = tr.after.tolist()
    for k in range(len(tr)):
        w.writerow([k, tr.round[k], tr.robot[k], phases[tr.phase[k]], algo,
                    *map(repr, before[k]), *map(repr, after[k]), tr.work_cum[k]])
    return buf.getvalue()


def write_trace_csv(result: RunResult, path) -> None:
    Path(path).write_text(trace_csv(result))


def read_trace_meta(path) -> tuple[SimulationParams, Configuration]:
    with Path(path).open() as fh:
        first = fh.readline()
    if not first.startswith("# "):
        raise ValueError(f"{path}: not a trace file (missing parameter header)")
    meta = json.loads(first[2:])
    return SimulationParams.from_dict(meta["params"]), Configuration(np.array(meta["initial"], dtype=float))
