"""Compute-step decision functions.

Every function maps one observation (plus persistent bits for the
termination variant) to a :class:`Decision`.  The step length ``b`` is global
and never part of a decision.  OLA decisions are expressed in the robot's
local frame; LD and the naive baselines work in the world frame.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .geometry import centroid, is_unit, unit_vector
from .world import (
    AXIS_TOL,
    LDObservation,
    OLAKind,
    OLAObservation,
    RobotMemory,
    classify_ola,
)


class InvalidObservationError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Decision:
    direction: np.ndarray | None = None

    @classmethod
    def toward(cls, v) -> "Decision":
        v = np.asarray(v, dtype=float)
        # sighting directions are already unit; renormalising would break frame symmetry
        if is_unit(v):
            return cls(v.copy())
        return cls(unit_vector(v))

    @property
    def is_move(self) -> bool:
        return self.direction is not None

    def __eq__(self, other) -> bool:
        if not isinstance(other, Decision):
            return NotImplemented
        if self.direction is None or other.direction is None:
            return self.direction is None and other.direction is None
        return np.array_equal(self.direction, other.direction)

    __hash__ = None

    def __repr__(self) -> str:
        if self.direction is None:
            return "Decision(Stay)"
        return f"Decision(Move {np.round(self.direction, 6).tolist()})"


STAY = Decision()


class AlgorithmId(str, enum.Enum):
    CONVERGE_LOCALITY = "ld"
    CONVERGE_QUADRANT = "ola"
    CONVERGE_QUADRANT_TERMINATION = "ola-term"
    NAIVE_MEDIAN = "median"
    NAIVE_ANGLE_BISECTOR = "bisector"
    CENTROID_ORACLE = "oracle"

    @property
    def monoculus(self) -> bool:
        return self in (AlgorithmId.CONVERGE_LOCALITY, AlgorithmId.CONVERGE_QUADRANT,
                        AlgorithmId.CONVERGE_QUADRANT_TERMINATION)

    @property
    def uses_ola(self) -> bool:
        return self in (AlgorithmId.CONVERGE_QUADRANT, AlgorithmId.CONVERGE_QUADRANT_TERMINATION)


def _lex_first(directions: np.ndarray) -> int:
    keys = tuple(directions[:, k] for k in reversed(range(directions.shape[1])))
    return int(np.lexsort(keys)[0])


def _require(obs) -> None:
    if len(obs) == 0:
        raise InvalidObservationError("empty observation")


def converge_locality(obs: LDObservation, rng: np.random.Generator | None = None) -> Decision:
    """LD rule: follow a lone neighbour, else head for some far robot, else stay.

    Ties among far robots go to the lexicographically smallest direction, or
    to a uniform pick when ``rng`` is given.
    """
    _require(obs)
    if len(obs) == 1:
        return Decision.toward(obs.directions[0])
    far = obs.directions[obs.is_far]
    if len(far) == 0:
        return STAY
    pick = int(rng.integers(len(far))) if rng is not None else _lex_first(far)
    return Decision.toward(far[pick])


def _axis(dim: int, axes_signs) -> np.ndarray:
    v = np.zeros(dim)
    for axis, sign in axes_signs:
        v[axis] = sign
    return v


def _corner_target(u: np.ndarray, inward: dict[int, int], rng) -> np.ndarray:
    axes = sorted(inward)
    signs = np.array([inward[a] for a in axes], dtype=float)
    comp = u[:, axes] * signs
    strict = np.all(comp > AXIS_TOL, axis=1)
    cand = np.flatnonzero(strict) if strict.any() else np.arange(len(u))
    if rng is not None:
        return u[cand[int(rng.integers(len(cand)))]]
    # Prefer the sighting closest to the quadrant diagonal; this ranking is the
    # same in every signed axis frame.  Summing sorted values keeps it exact.
    score = np.sort(comp[cand], axis=1).sum(axis=1)
    best = cand[score == score.max()]
    if len(best) > 1:
        # mirror-image sightings look the same in some other frame, so no pick
        # among them is frame-free; the quadrant diagonal is
        return _axis(u.shape[1], inward.items())
    return u[best[0]]


def converge_quadrant(obs: OLAObservation, corner_diag: bool = False,
                      rng: np.random.Generator | None = None) -> Decision:
    _require(obs)
    u = obs.directions
    cls = classify_ola(obs)
    if cls.kind is OLAKind.LINE_END:
        return Decision.toward(u[0])
    if cls.kind is OLAKind.BOUNDARY:
        return Decision.toward(_axis(u.shape[1], cls.inward.items()))
    if cls.kind is OLAKind.CORNER:
        if corner_diag:
            return Decision.toward(_axis(u.shape[1], cls.inward.items()))
        return Decision.toward(_corner_target(u, cls.inward, rng))
    return STAY


def converge_quadrant_termination(obs: OLAObservation, mem: RobotMemory, corner_diag: bool = False,
                                  rng: np.random.Generator | None = None) -> tuple[Decision, RobotMemory]:
    """OLA with 2d persistent bits, one per local boundary.

    A robot records every boundary it currently sits on and stops moving
    along an axis once it has seen both of that axis' boundaries.
    """
    _require(obs)
    if mem.all_set:
        return STAY, mem
    u = obs.directions
    cls = classify_ola(obs)
    sides = list(cls.empty) + [(a, s) for a in cls.degenerate for s in (-1, 1)]
    mem = mem.with_set(sides)
    if mem.all_set or cls.kind in (OLAKind.INNER, OLAKind.LINE_DEGENERATE):
        return STAY, mem

    inward = cls.inward
    open_axes = {a: s for a, s in inward.items() if not mem.axis_closed(a)}
    if not open_axes:
        return STAY, mem
    if len(open_axes) < len(inward):
        return Decision.toward(_axis(u.shape[1], open_axes.items())), mem
    if cls.kind is OLAKind.LINE_END:
        return Decision.toward(u[0]), mem
    if cls.kind is OLAKind.BOUNDARY or corner_diag:
        return Decision.toward(_axis(u.shape[1], inward.items())), mem
    return Decision.toward(_corner_target(u, inward, rng)), mem


def _sector_order(directions: np.ndarray):
    """CCW order of planar sightings starting after the widest angular gap."""
    if directions.shape[1] != 2:
        raise InvalidObservationError("naive strategies are planar only")
    ang = np.arctan2(directions[:, 1], directions[:, 0])
    order = np.argsort(ang, kind="stable")
    a = ang[order]
    gaps = np.diff(np.append(a, a[0] + 2 * np.pi))
    g = int(np.argmax(gaps))
    start = (g + 1) % len(a)
    return np.roll(order, -start), a[start], 2 * np.pi - gaps[g]


def naive_median(directions: np.ndarray) -> Decision:
    directions = np.asarray(directions, dtype=float)
    _require(directions)
    if len(directions) == 1:
        return Decision.toward(directions[0])
    seq, _, _ = _sector_order(directions)
    return Decision.toward(directions[seq[(len(seq) - 1) // 2]])


def naive_angle_bisector(directions: np.ndarray) -> Decision:
    directions = np.asarray(directions, dtype=float)
    _require(directions)
    if len(directions) == 1:
        return Decision.toward(directions[0])
    _, start, extent = _sector_order(directions)
    mid = start + extent / 2
    return Decision.toward([np.cos(mid), np.sin(mid)])


def centroid_oracle_metrics(points) -> tuple[float, float]:
    """``(d_opt, d_max)``: summed distance to the unit disc at the centroid, and farthest distance."""
    pts = np.asarray(getattr(points, "positions", points), dtype=float)
    d = np.linalg.norm(pts - centroid(pts), axis=1)
    return float(np.maximum(d - 1.0, 0.0).sum()), float(d.max())


def centroid_oracle(positions: np.ndarray, observer: int) -> Decision:
    """Full-information baseline: walk to the centroid's unit disc."""
    v = centroid(positions) - positions[observer]
    if np.linalg.norm(v) <= 1.0:
        return STAY
    return Decision.toward(v)
