"""Configurations and what a monoculus robot is allowed to perceive.

Visibility is occlusion based: along every ray from the observer only the
nearest robot is seen.  Robots sharing the observer's position have no
direction and are never seen.  The two sensing models strip everything but
directions, plus one near/far bit per sighting (LD) or a fixed signed axis
frame (OLA).
"""

from __future__ import annotations

import csv
import enum
import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import as_points

SAME_RAY_TOL = 1e-12
COLLOCATED_TOL = 1e-12
# a local direction component this close to zero lies on the axis line itself
AXIS_TOL = 1e-12


class InvalidConfigError(ValueError):
    pass


@dataclass(eq=False)
class Configuration:
    positions: np.ndarray
    time: int = 0

    def __post_init__(self):
        self.positions = as_points(self.positions)
        if len(self.positions) < 2:
            raise InvalidConfigError("a configuration needs at least two robots")
        if self.positions.shape[1] < 2:
            raise InvalidConfigError("dimension must be at least 2")

    @property
    def n(self) -> int:
        return len(self.positions)

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    def copy(self) -> "Configuration":
        return Configuration(self.positions.copy(), self.time)

    def all_collocated(self) -> bool:
        return bool(np.all(np.abs(self.positions - self.positions[0]) <= COLLOCATED_TOL))


def write_config_csv(config: Configuration, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(f"dim={config.dim}\n")
        writer = csv.writer(fh)
        writer.writerow([f"x_{k + 1}" for k in range(config.dim)])
        for row in config.positions:
            writer.writerow([repr(float(x)) for x in row])


def read_config_csv(path) -> Configuration:
    with Path(path).open(newline="") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("dim="):
        raise ValueError(f"{path}: missing 'dim=<d>' header")
    dim = int(lines[0].split("=", 1)[1])
    body = lines[1:]
    if body and body[0].startswith("x_"):
        body = body[1:]
    rows = [[float(x) for x in ln.split(",")] for ln in body]
    if any(len(r) != dim for r in rows):
        raise ValueError(f"{path}: every row must have {dim} coordinates")
    return Configuration(np.array(rows, dtype=float))


# -- visibility -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Sighting:
    index: int
    direction: np.ndarray
    distance: float


def _visible_from_generic(pos: np.ndarray, observer: int) -> np.ndarray:
    """Boolean mask of robots visible from ``observer`` in any dimension."""
    delta = pos - pos[observer]
    dist = np.linalg.norm(delta, axis=1)
    mask = dist > COLLOCATED_TOL
    idx = np.flatnonzero(mask)
    if len(idx) < 2:
        return mask
    u = delta[idx] / dist[idx, None]
    d = dist[idx]
    # chord length approximates the angle for nearly parallel unit vectors
    same_ray = np.linalg.norm(u[:, None, :] - u[None, :, :], axis=-1) < SAME_RAY_TOL
    closer = (d[None, :] < d[:, None]) | ((d[None, :] == d[:, None]) & (idx[None, :] < idx[:, None]))
    occluded = np.any(same_ray & closer, axis=1)
    mask[idx[occluded]] = False
    return mask


def _visible_mask_2d(pos: np.ndarray) -> np.ndarray:
    """All-observer visibility in the plane via per-row angular sorting."""
    n = len(pos)
    delta = pos[None, :, :] - pos[:, None, :]
    dist = np.hypot(delta[..., 0], delta[..., 1])
    valid = dist > COLLOCATED_TOL
    ang = np.arctan2(delta[..., 1], delta[..., 0])
    ang[ang == -np.pi] = np.pi
    ang = np.where(valid, ang, np.inf)
    dist_k = np.where(valid, dist, np.inf)

    order = np.lexsort((dist_k, ang), axis=-1)
    s_ang = np.take_along_axis(ang, order, axis=1)
    s_dist = np.take_along_axis(dist_k, order, axis=1)
    with np.errstate(invalid="ignore"):
        step = np.diff(s_ang, axis=1) >= SAME_RAY_TOL
    starts = np.ones((n, n), dtype=bool)
    starts[:, 1:] = step
    gid = np.cumsum(starts, axis=1)
    # the ray at angle pi wraps around to -pi: merge the last group into the first
    rows = np.arange(n)
    last = np.maximum(valid.sum(axis=1) - 1, 0)
    last_gid = gid[rows, last]
    with np.errstate(invalid="ignore"):
        wrap = (s_ang[:, 0] + 2 * np.pi - s_ang[rows, last] < SAME_RAY_TOL) & (last_gid > 1)
    gid = np.where(wrap[:, None] & (gid == last_gid[:, None]), 1, gid)
    # nearest robot inside each angular group
    order2 = np.lexsort((s_dist, gid), axis=-1)
    g2 = np.take_along_axis(gid, order2, axis=1)
    head = np.ones((n, n), dtype=bool)
    head[:, 1:] = g2[:, 1:] != g2[:, :-1]
    head &= np.isfinite(np.take_along_axis(s_ang, order2, axis=1))
    composed = np.take_along_axis(order, order2, axis=1)
    mask = np.zeros((n, n), dtype=bool)
    np.put_along_axis(mask, composed, head, axis=1)
    return mask


def visible_mask(positions) -> np.ndarray:
    """``mask[i, j]`` is true when robot ``i`` sees robot ``j``."""
    pos = as_points(positions)
    if pos.shape[1] == 2:
        return _visible_mask_2d(pos)
    return np.array([_visible_from_generic(pos, i) for i in range(len(pos))])


def visible_from(positions, observer: int) -> np.ndarray:
    pos = as_points(positions)
    if pos.shape[1] == 2:
        return _visible_mask_2d_row(pos, observer)
    return _visible_from_generic(pos, observer)


def _visible_mask_2d_row(pos: np.ndarray, observer: int) -> np.ndarray:
    # single-row variant used for asynchronous Look events
    delta = pos - pos[observer]
    dist = np.hypot(delta[:, 0], delta[:, 1])
    valid = dist > COLLOCATED_TOL
    idx = np.flatnonzero(valid)
    mask = np.zeros(len(pos), dtype=bool)
    if len(idx) == 0:
        return mask
    ang = np.arctan2(delta[idx, 1], delta[idx, 0])
    ang[ang == -np.pi] = np.pi
    d = dist[idx]
    order = np.lexsort((d, ang))
    s_ang = ang[order]
    starts = np.ones(len(idx), dtype=bool)
    starts[1:] = np.diff(s_ang) >= SAME_RAY_TOL
    gid = np.cumsum(starts)
    if len(idx) >= 2 and gid[-1] > 1 and s_ang[0] + 2 * np.pi - s_ang[-1] < SAME_RAY_TOL:
        gid[gid == gid[-1]] = 1
    order2 = np.lexsort((d[order], gid))
    g2 = gid[order2]
    head = np.ones(len(idx), dtype=bool)
    head[1:] = g2[1:] != g2[:-1]
    mask[idx[order[order2[head]]]] = True
    return mask


def visible_set(config: Configuration, observer: int) -> list[Sighting]:
    pos = config.positions
    mask = visible_from(pos, observer)
    out = []
    for j in np.flatnonzero(mask):
        delta = pos[j] - pos[observer]
        dist = float(np.linalg.norm(delta))
        out.append(Sighting(int(j), delta / dist, dist))
    return out


# -- observations -----------------------------------------------------------


def _canonical(directions: np.ndarray, *extra: np.ndarray):
    """Sort sightings lexicographically by direction so no index order leaks."""
    if len(directions) == 0:
        return (directions, *extra)
    keys = tuple(directions[:, k] for k in reversed(range(directions.shape[1])))
    order = np.lexsort(keys)
    return (directions[order], *(e[order] for e in extra))


@dataclass(frozen=True, eq=False)
class LDObservation:
    directions: np.ndarray
    is_far: np.ndarray

    def __len__(self) -> int:
        return len(self.directions)

    def __eq__(self, other) -> bool:
        return (isinstance(other, LDObservation)
                and np.array_equal(self.directions, other.directions)
                and np.array_equal(self.is_far, other.is_far))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class OLAObservation:
    directions: np.ndarray  # local frame

    def __len__(self) -> int:
        return len(self.directions)

    def __eq__(self, other) -> bool:
        return isinstance(other, OLAObservation) and np.array_equal(self.directions, other.directions)

    __hash__ = None


def _directions_and_distances(pos: np.ndarray, observer: int, mask: np.ndarray):
    idx = np.flatnonzero(mask)
    delta = pos[idx] - pos[observer]
    dist = np.linalg.norm(delta, axis=1)
    return delta / dist[:, None], dist


def ld_observation_from_mask(pos: np.ndarray, observer: int, mask: np.ndarray, c: float) -> LDObservation:
    u, dist = _directions_and_distances(pos, observer, mask)
    u, far = _canonical(u, dist > c)
    return LDObservation(u, far)


def sense_ld(config: Configuration, observer: int, c: float) -> LDObservation:
    if c <= 0:
        raise ValueError("locality threshold c must be positive")
    return ld_observation_from_mask(config.positions, observer, visible_from(config.positions, observer), c)


def sense_directions(config: Configuration, observer: int) -> np.ndarray:
    """Bare world-frame directions to visible robots (for the naive baselines)."""
    pos = config.positions
    u, _ = _directions_and_distances(pos, observer, visible_from(pos, observer))
    return _canonical(u)[0]


# -- OLA frames -------------------------------------------------------------


@dataclass(frozen=True)
class AxisFrame:
    """Signed axis permutation: local axis ``k`` is ``signs[k] * world[perm[k]]``."""

    perm: tuple[int, ...]
    signs: tuple[int, ...]

    @property
    def dim(self) -> int:
        return len(self.perm)

    @property
    def matrix(self) -> np.ndarray:
        m = np.zeros((self.dim, self.dim))
        for k, (p, s) in enumerate(zip(self.perm, self.signs)):
            m[k, p] = s
        return m

    def to_local(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return v[..., list(self.perm)] * np.array(self.signs, dtype=float)

    def to_world(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        out = np.empty_like(v)
        out[..., list(self.perm)] = v * np.array(self.signs, dtype=float)
        return out

    @classmethod
    def identity(cls, dim: int = 2) -> "AxisFrame":
        return cls(tuple(range(dim)), (1,) * dim)


def all_frames(dim: int = 2) -> list[AxisFrame]:
    return [AxisFrame(p, s) for p in itertools.permutations(range(dim))
            for s in itertools.product((1, -1), repeat=dim)]


def random_frame(rng: np.random.Generator, dim: int = 2) -> AxisFrame:
    frames = all_frames(dim)
    return frames[int(rng.integers(len(frames)))]


def ola_observation_from_mask(pos: np.ndarray, observer: int, mask: np.ndarray, frame: AxisFrame) -> OLAObservation:
    u, _ = _directions_and_distances(pos, observer, mask)
    return OLAObservation(_canonical(frame.to_local(u))[0])


def sense_ola(config: Configuration, observer: int, frame: AxisFrame) -> OLAObservation:
    return ola_observation_from_mask(config.positions, observer, visible_from(config.positions, observer), frame)


# -- OLA classification -----------------------------------------------------


class OLAKind(enum.Enum):
    INNER = "inner"
    BOUNDARY = "boundary"
    CORNER = "corner"
    LINE_END = "line_end"
    LINE_DEGENERATE = "line_degenerate"


@dataclass(frozen=True)
class OLAClass:
    """Classification of a local view.

    ``empty`` lists ``(axis, sign)`` pairs whose open half-space holds no
    sighting, restricted to non-degenerate axes; ``degenerate`` lists the axes
    with both sides empty.  A Boundary robot has exactly one entry in
    ``empty`` and a Corner robot has one per closed axis.
    """

    kind: OLAKind
    empty: tuple[tuple[int, int], ...] = ()
    degenerate: tuple[int, ...] = ()

    @property
    def inward(self) -> dict[int, int]:
        return {axis: -sign for axis, sign in self.empty}


def side_occupancy(directions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pos_side = np.any(directions > AXIS_TOL, axis=0)
    neg_side = np.any(directions < -AXIS_TOL, axis=0)
    return pos_side, neg_side


def classify_ola(obs: OLAObservation) -> OLAClass:
    u = obs.directions
    if len(u) == 0:
        raise InvalidConfigError("empty observation: a robot always sees another when n >= 2")
    pos_side, neg_side = side_occupancy(u)
    degenerate = tuple(int(k) for k in np.flatnonzero(~pos_side & ~neg_side))
    empty = []
    for k in range(u.shape[1]):
        if k in degenerate:
            continue
        if not pos_side[k]:
            empty.append((k, 1))
        elif not neg_side[k]:
            empty.append((k, -1))
    empty = tuple(empty)
    if len(u) == 1:
        return OLAClass(OLAKind.LINE_END, empty, degenerate)
    if degenerate and u.shape[1] - len(degenerate) <= 1:
        return OLAClass(OLAKind.LINE_DEGENERATE, empty, degenerate)
    if len(empty) >= 2:
        return OLAClass(OLAKind.CORNER, empty, degenerate)
    if len(empty) == 1:
        return OLAClass(OLAKind.BOUNDARY, empty, degenerate)
    return OLAClass(OLAKind.INNER, empty, degenerate)


def provably_inner(pos: np.ndarray, observer: int, box: tuple[np.ndarray, np.ndarray] | None = None) -> bool:
    """True when robots lie strictly on both sides of every axis through ``observer``.

    Occlusion never hides a whole half-space (the nearest robot on each ray is
    seen), so such a robot classifies as Inner in every frame.  ``box`` is the
    optional precomputed ``(min, max)`` of ``pos`` for the cheap first test.
    """
    lo, hi = box if box is not None else (pos.min(axis=0), pos.max(axis=0))
    p = pos[observer]
    # any robot beyond t on an axis has unit-direction component above AXIS_TOL
    t = max(COLLOCATED_TOL, AXIS_TOL * np.sqrt(pos.shape[1]) * float((hi - lo).max()))
    if ((hi - p) > t).all() and ((p - lo) > t).all():
        return True
    delta = pos - p
    dist = np.sqrt(np.einsum("ij,ij->i", delta, delta))
    thr = np.where(dist > COLLOCATED_TOL, AXIS_TOL * dist, np.inf)[:, None]
    return bool(np.all((delta > thr).any(axis=0) & (delta < -thr).any(axis=0)))


# -- termination memory ------------------------------------------------------


@dataclass(frozen=True)
class RobotMemory:
    """Persistent boundary bits, two per local axis: ``(axis, -1)`` then ``(axis, +1)``."""

    bits: tuple[bool, ...] = field(default=(False,) * 4)

    @classmethod
    def empty(cls, dim: int = 2) -> "RobotMemory":
        return cls((False,) * (2 * dim))

    @property
    def dim(self) -> int:
        return len(self.bits) // 2

    @staticmethod
    def slot(axis: int, sign: int) -> int:
        return 2 * axis + (1 if sign > 0 else 0)

    def has(self, axis: int, sign: int) -> bool:
        return self.bits[self.slot(axis, sign)]

    def axis_closed(self, axis: int) -> bool:
        return self.bits[2 * axis] and self.bits[2 * axis + 1]

    @property
    def all_set(self) -> bool:
        return all(self.bits)

    def with_set(self, sides) -> "RobotMemory":
        bits = list(self.bits)
        for axis, sign in sides:
            bits[self.slot(axis, sign)] = True
        return RobotMemory(tuple(bits))

    def __str__(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)


def frames_count(dim: int) -> int:
    return 2 ** dim * math.factorial(dim)
