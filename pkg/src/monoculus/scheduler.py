"""Seeded activation schedules: FSYNC, SSYNC and ASYNC.

Synchronous schedules hand out one activation set per round.  The
asynchronous schedule emits a stream of per-robot ``Look``/``Move`` phase
events; a robot's Move applies the decision computed at its latest Look.

Fairness is enforced by construction.  SSYNC forces any robot idle for
``K - 1`` rounds into the next round.  ASYNC uses earliest-deadline-first
forcing so that every robot acts at least once in any ``K // 3`` consecutive
events, which gives a complete Look+Move cycle inside every window of ``K``
events.

Randomness is drawn in fixed-size chunks, so the stream does not depend on
how a consumer slices it (one round at a time or a block of rounds).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from numba import njit

ROUND_CHUNK = 256
EVENT_CHUNK = 1024


class SchedulerModel(str, enum.Enum):
    FSYNC = "fsync"
    SSYNC = "ssync"
    ASYNC = "async"


class Phase(str, enum.Enum):
    LOOK = "look"
    MOVE = "move"


@dataclass(frozen=True)
class PhaseEvent:
    robot: int
    phase: Phase


@dataclass(frozen=True)
class Schedule:
    model: SchedulerModel
    seed: int = 0
    fairness: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "model", SchedulerModel(self.model))
        if self.fairness is not None and self.fairness < 1:
            raise ValueError("fairness bound must be positive")

    def bound(self, n: int) -> int:
        if self.fairness is not None:
            return self.fairness
        return 6 * n if self.model is SchedulerModel.ASYNC else 3 * n


@njit(cache=True)
def _forced_rounds(draws, last_active, first_round, K):
    rounds, n = draws.shape
    active = draws < 0.5
    for r in range(rounds):
        t = first_round + r
        any_active = False
        for i in range(n):
            if t - last_active[i] >= K:
                active[r, i] = True
            any_active |= active[r, i]
        if not any_active:
            active[r, np.argmin(draws[r])] = True
        for i in range(n):
            if active[r, i]:
                last_active[i] = t
    return active


@njit(cache=True)
def _edf_events(draws, deadline, next_phase, first_event, gap):
    # earliest-deadline-first forcing; deadline[i] is the last event index robot i may wait until
    n = deadline.shape[0]
    m = draws.shape[0]
    robots = np.empty(m, np.int64)
    phases = np.empty(m, np.int8)
    for k in range(m):
        event = first_event + k
        r = draws[k]
        if deadline.min() - event < n:
            s = np.sort(deadline)
            for q in range(n):
                if s[q] == event + q:
                    # dropping a robot due no later than the first tight slot keeps the rest feasible
                    if deadline[r] > s[q]:
                        r = np.argmin(deadline)
                    break
        robots[k] = r
        phases[k] = next_phase[r]
        next_phase[r] = 1 - next_phase[r]
        deadline[r] = event + gap
    return robots, phases


class Scheduler:
    """Stateful generator for one run; a pure function of (model, seed, n, K)."""

    def __init__(self, schedule: Schedule, n: int):
        if n < 2:
            raise ValueError("need at least two robots")
        self.schedule = schedule
        self.n = n
        self.K = schedule.bound(n)
        self.rng = np.random.default_rng(np.random.SeedSequence([schedule.seed & (2**64 - 1), 0x5C4ED]))
        self.round = 0
        self.event = 0
        self._gap = max(1, self.K // 3)
        if schedule.model is SchedulerModel.ASYNC and self._gap < n:
            raise ValueError(f"ASYNC fairness bound must be at least 3n = {3 * n}")
        self._last_active = np.full(n, -1, dtype=np.int64)
        self._deadline = np.full(n, self._gap - 1, dtype=np.int64)
        self._next_phase = np.zeros(n, dtype=np.int8)
        self._generated = 0
        self._buffer: list[np.ndarray] = []
        self._offset = 0

    def _chunk(self):
        model = self.schedule.model
        if model is SchedulerModel.FSYNC:
            return np.ones((ROUND_CHUNK, self.n), dtype=bool)
        if model is SchedulerModel.SSYNC:
            draws = self.rng.random((ROUND_CHUNK, self.n))
            out = _forced_rounds(draws, self._last_active, self._generated, self.K)
            self._generated += ROUND_CHUNK
            return out
        draws = self.rng.integers(self.n, size=EVENT_CHUNK)
        robots, phases = _edf_events(draws, self._deadline, self._next_phase, self._generated, self._gap)
        self._generated += EVENT_CHUNK
        return np.stack([robots, phases.astype(np.int64)], axis=1)

    def _take(self, k: int) -> np.ndarray:
        parts = []
        while k > 0:
            if not self._buffer:
                self._buffer.append(self._chunk())
                self._offset = 0
            head = self._buffer[0]
            part = head[self._offset:self._offset + k]
            parts.append(part)
            self._offset += len(part)
            k -= len(part)
            if self._offset == len(head):
                self._buffer.pop(0)
        return parts[0] if len(parts) == 1 else np.concatenate(parts)

    def round_block(self, k: int) -> np.ndarray:
        """Activation masks for the next ``k`` rounds, shape ``(k, n)``."""
        if self.schedule.model is SchedulerModel.ASYNC:
            raise TypeError("ASYNC schedules produce events, not rounds")
        self.round += k
        return self._take(k)

    def event_block(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Robot indices and phases (0 Look, 1 Move) of the next ``k`` events."""
        if self.schedule.model is not SchedulerModel.ASYNC:
            raise TypeError("only ASYNC schedules produce phase events")
        self.event += k
        block = self._take(k)
        return block[:, 0], block[:, 1]

    def next_round(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.round_block(1)[0])]

    def next_event(self) -> PhaseEvent:
        robots, phases = self.event_block(1)
        return PhaseEvent(int(robots[0]), Phase.MOVE if phases[0] else Phase.LOOK)


def next_round(scheduler: Scheduler) -> list[int]:
    return scheduler.next_round()


def next_event(scheduler: Scheduler) -> PhaseEvent:
    return scheduler.next_event()
