"""Compiled twin of the simulation loop for LD, OLA and the OLA termination variant.

Each routine mirrors a reference implementation elsewhere in the package
operation by operation (same tolerances, same summation order, same
tie-breaks) so both paths produce identical trajectories; the test suite
checks that.  Decisions are made per robot from its own visibility row, never
from global state beyond what the reference sensing functions expose.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .world import AXIS_TOL, COLLOCATED_TOL, SAME_RAY_TOL

LD, OLA, OLA_TERM = 0, 1, 2
PREDICATE_TOL = 1e-9

# decision codes
STAY, MOVE, BLIND = 0, 1, -1

# loop status codes
NEED_SCHEDULE, FINISHED, STOP_AT, TRACE_FULL, ERROR = 0, 1, 2, 3, 4

# indices into the integer state vector
EVENTS, MOVES, ROUND, HAS_STREAK, STREAK_ROUND, STREAK_WORK, QUIESCENT, ROW, MOVED_IN_EPOCH, TRACE_LEN, BAD_ROBOT = range(11)
STATE_SIZE = 11


@njit(cache=True)
def visible_row_2d(pos, i, mask):
    n = pos.shape[0]
    idx = np.empty(n, np.int64)
    ang = np.empty(n)
    dist = np.empty(n)
    m = 0
    for j in range(n):
        mask[j] = False
        dx = pos[j, 0] - pos[i, 0]
        dy = pos[j, 1] - pos[i, 1]
        r = math.hypot(dx, dy)
        if r > COLLOCATED_TOL:
            a = math.atan2(dy, dx)
            if a == -math.pi:
                a = math.pi
            idx[m] = j
            ang[m] = a
            dist[m] = r
            m += 1
    if m == 0:
        return 0
    ang = ang[:m]
    dist = dist[:m]
    o1 = np.argsort(dist, kind="mergesort")
    order = o1[np.argsort(ang[o1], kind="mergesort")]
    gid = np.empty(m, np.int64)
    g = 1
    gid[0] = 1
    for p in range(1, m):
        if ang[order[p]] - ang[order[p - 1]] >= SAME_RAY_TOL:
            g += 1
        gid[p] = g
    # the ray at angle pi wraps around to -pi
    if m >= 2 and g > 1 and ang[order[0]] + 2 * math.pi - ang[order[m - 1]] < SAME_RAY_TOL:
        for p in range(m):
            if gid[p] == g:
                gid[p] = 1
    best = np.full(g + 1, -1, np.int64)
    for p in range(m):
        k = gid[p]
        q = best[k]
        if q < 0 or dist[order[p]] < dist[order[q]]:
            best[k] = p
    count = 0
    for k in range(1, g + 1):
        if best[k] >= 0:
            mask[idx[order[best[k]]]] = True
            count += 1
    return count


@njit(cache=True)
def visible_row_generic(pos, i, mask):
    n, d = pos.shape
    u = np.empty((n, d))
    dist = np.empty(n)
    valid = np.zeros(n, np.bool_)
    for j in range(n):
        s = 0.0
        for k in range(d):
            x = pos[j, k] - pos[i, k]
            s += x * x
        dist[j] = math.sqrt(s)
        valid[j] = dist[j] > COLLOCATED_TOL
        mask[j] = valid[j]
        if valid[j]:
            for k in range(d):
                u[j, k] = (pos[j, k] - pos[i, k]) / dist[j]
    count = 0
    for a in range(n):
        if not valid[a]:
            continue
        for q in range(n):
            if q == a or not valid[q]:
                continue
            if dist[q] < dist[a] or (dist[q] == dist[a] and q < a):
                s = 0.0
                for k in range(d):
                    x = u[a, k] - u[q, k]
                    s += x * x
                if math.sqrt(s) < SAME_RAY_TOL:
                    mask[a] = False
                    break
        if mask[a]:
            count += 1
    return count


@njit(cache=True)
def visible_row(pos, i, mask):
    if pos.shape[1] == 2:
        return visible_row_2d(pos, i, mask)
    return visible_row_generic(pos, i, mask)


@njit(cache=True)
def _directions(pos, i, mask, count):
    d = pos.shape[1]
    u = np.empty((count, d))
    dist = np.empty(count)
    m = 0
    for j in range(pos.shape[0]):
        if mask[j]:
            s = 0.0
            for k in range(d):
                x = pos[j, k] - pos[i, k]
                s += x * x
            r = math.sqrt(s)
            for k in range(d):
                u[m, k] = (pos[j, k] - pos[i, k]) / r
            dist[m] = r
            m += 1
    return u, dist


@njit(cache=True)
def _lex_less(a, b):
    for k in range(a.shape[0]):
        if a[k] < b[k]:
            return True
        if a[k] > b[k]:
            return False
    return False


@njit(cache=True)
def provably_inner(pos, i, lo, hi):
    n, d = pos.shape
    span = 0.0
    for k in range(d):
        span = max(span, hi[k] - lo[k])
    t = max(COLLOCATED_TOL, AXIS_TOL * math.sqrt(d) * span)
    ok = True
    for k in range(d):
        if not (hi[k] - pos[i, k] > t and pos[i, k] - lo[k] > t):
            ok = False
            break
    if ok:
        return True
    plus = np.zeros(d, np.bool_)
    minus = np.zeros(d, np.bool_)
    for j in range(n):
        s = 0.0
        for k in range(d):
            x = pos[j, k] - pos[i, k]
            s += x * x
        r = math.sqrt(s)
        if r <= COLLOCATED_TOL:
            continue
        thr = AXIS_TOL * r
        for k in range(d):
            x = pos[j, k] - pos[i, k]
            if x > thr:
                plus[k] = True
            elif x < -thr:
                minus[k] = True
    for k in range(d):
        if not (plus[k] and minus[k]):
            return False
    return True


@njit(cache=True)
def _all_collocated(pos):
    for k in range(pos.shape[1]):
        lo = pos[0, k]
        hi = pos[0, k]
        for j in range(pos.shape[0]):
            lo = min(lo, pos[j, k])
            hi = max(hi, pos[j, k])
        if hi - lo > 2 * COLLOCATED_TOL:
            return False
    return True


@njit(cache=True)
def _corner_target(v, inward_sign, use_axis):
    """Index of the chosen sighting among local directions ``v`` (rows), or -1 on an exact tie."""
    m, d = v.shape
    na = 0
    for k in range(d):
        if use_axis[k]:
            na += 1
    comp = np.empty((m, na))
    strict = np.zeros(m, np.bool_)
    any_strict = False
    for r in range(m):
        q = 0
        ok = True
        for k in range(d):
            if use_axis[k]:
                comp[r, q] = v[r, k] * inward_sign[k]
                if not comp[r, q] > AXIS_TOL:
                    ok = False
                q += 1
        strict[r] = ok
        any_strict |= ok
    best = -1
    best_score = 0.0
    tied = False
    for r in range(m):
        if any_strict and not strict[r]:
            continue
        srt = np.sort(comp[r])
        score = 0.0
        for q in range(na):
            score += srt[q]
        if best < 0 or score > best_score:
            best = r
            best_score = score
            tied = False
        elif score == best_score:
            tied = True
    return -1 if tied else best


@njit(cache=True)
def decide(pos, i, algo, c, corner_diag, perm, signs, mem, new_mem, out, mask, lo, hi):
    """Decision of robot ``i``: fills ``out`` (world frame) and ``new_mem``; returns a decision code."""
    d = pos.shape[1]
    for k in range(new_mem.shape[0]):
        new_mem[k] = mem[k]
    if algo == OLA_TERM:
        all_set = True
        for k in range(mem.shape[0]):
            all_set &= mem[k]
        if all_set:
            return STAY
    if algo != LD and provably_inner(pos, i, lo, hi):
        return STAY
    count = visible_row(pos, i, mask)
    if count == 0:
        return STAY if _all_collocated(pos) else BLIND
    u, dist = _directions(pos, i, mask, count)

    if algo == LD:
        if count == 1:
            out[:] = u[0]
            return MOVE
        pick = -1
        for r in range(count):
            if dist[r] > c and (pick < 0 or _lex_less(u[r], u[pick])):
                pick = r
        if pick < 0:
            return STAY
        out[:] = u[pick]
        return MOVE

    # OLA: work in the robot's local signed-axis frame
    v = np.empty((count, d))
    for r in range(count):
        for k in range(d):
            v[r, k] = u[r, perm[k]] * signs[k]
    plus = np.zeros(d, np.bool_)
    minus = np.zeros(d, np.bool_)
    for r in range(count):
        for k in range(d):
            if v[r, k] > AXIS_TOL:
                plus[k] = True
            if v[r, k] < -AXIS_TOL:
                minus[k] = True
    # inward sign per closed axis (0 for open or degenerate axes)
    inward = np.zeros(d)
    n_empty = 0
    n_degen = 0
    for k in range(d):
        if not plus[k] and not minus[k]:
            n_degen += 1
        elif not plus[k]:
            inward[k] = -1.0
            n_empty += 1
        elif not minus[k]:
            inward[k] = 1.0
            n_empty += 1
    # kinds: 0 inner, 1 boundary, 2 corner, 3 line end, 4 line degenerate
    if count == 1:
        kind = 3
    elif n_degen > 0 and d - n_degen <= 1:
        kind = 4
    elif n_empty >= 2:
        kind = 2
    elif n_empty == 1:
        kind = 1
    else:
        kind = 0

    local = np.zeros(d)
    if algo == OLA:
        if kind == 3:
            local[:] = v[0]
        elif kind == 1 or (kind == 2 and corner_diag):
            _axis_direction(inward, local)
        elif kind == 2:
            pick = _corner_target(v, inward, inward != 0.0)
            if pick < 0:
                _axis_direction(inward, local)
            else:
                local[:] = v[pick]
        else:
            return STAY
    else:
        for k in range(d):
            if not plus[k] and not minus[k]:
                new_mem[2 * k] = True
                new_mem[2 * k + 1] = True
            elif inward[k] > 0:
                new_mem[2 * k] = True
            elif inward[k] < 0:
                new_mem[2 * k + 1] = True
        all_set = True
        for k in range(new_mem.shape[0]):
            all_set &= new_mem[k]
        if all_set or kind == 0 or kind == 4:
            return STAY
        open_dir = np.zeros(d)
        n_open = 0
        for k in range(d):
            if inward[k] != 0.0 and not (new_mem[2 * k] and new_mem[2 * k + 1]):
                open_dir[k] = inward[k]
                n_open += 1
        if n_open == 0:
            return STAY
        if n_open < n_empty:
            _axis_direction(open_dir, local)
        elif kind == 3:
            local[:] = v[0]
        elif kind == 1 or corner_diag:
            _axis_direction(inward, local)
        else:
            pick = _corner_target(v, inward, inward != 0.0)
            if pick < 0:
                _axis_direction(inward, local)
            else:
                local[:] = v[pick]
    for k in range(d):
        out[perm[k]] = local[k] * signs[k]
    return MOVE


@njit(cache=True)
def _axis_direction(sign, out):
    m = 0
    for k in range(sign.shape[0]):
        if sign[k] != 0.0:
            m += 1
    norm = math.sqrt(m)
    for k in range(sign.shape[0]):
        out[k] = sign[k] if m == 1 else sign[k] / norm


@njit(cache=True)
def predicate(pos, algo, b, c):
    n, d = pos.shape
    if algo == LD:
        worst = 0.0
        for a in range(n):
            for q in range(a + 1, n):
                s = 0.0
                for k in range(d):
                    x = pos[a, k] - pos[q, k]
                    s += x * x
                worst = max(worst, math.sqrt(s))
        return worst <= 2 * c + PREDICATE_TOL
    for k in range(d):
        lo = pos[0, k]
        hi = pos[0, k]
        for j in range(n):
            lo = min(lo, pos[j, k])
            hi = max(hi, pos[j, k])
        if not hi - lo <= 2 * b + PREDICATE_TOL:
            return False
    return True


@njit(cache=True)
def _box(pos, lo, hi):
    for k in range(pos.shape[1]):
        lo[k] = pos[0, k]
        hi[k] = pos[0, k]
        for j in range(pos.shape[0]):
            lo[k] = min(lo[k], pos[j, k])
            hi[k] = max(hi[k], pos[j, k])


@njit(cache=True)
def _update_streak(pos, algo, b, c, state):
    ok = predicate(pos, algo, b, c)
    if not ok:
        state[HAS_STREAK] = 0
    elif state[HAS_STREAK] == 0:
        state[HAS_STREAK] = 1
        state[STREAK_ROUND] = state[ROUND]
        state[STREAK_WORK] = state[MOVES]
    return ok


@njit(cache=True)
def _log(state, robot, phase, direction, move, before, after, tr_i, tr_dec, tr_before, tr_after):
    t = state[TRACE_LEN]
    tr_i[t, 0] = state[ROUND]
    tr_i[t, 1] = robot
    tr_i[t, 2] = phase
    tr_i[t, 3] = state[MOVES]
    for k in range(before.shape[0]):
        tr_dec[t, k] = direction[k] if move else np.nan
        tr_before[t, k] = before[k]
        tr_after[t, k] = after[k]
    state[TRACE_LEN] = t + 1


@njit(cache=True)
def _quiescent(pos, algo, c, corner_diag, perm, signs, mem, mask, lo, hi):
    n, d = pos.shape
    out = np.empty(d)
    new_mem = np.empty(mem.shape[1], np.bool_)
    _box(pos, lo, hi)
    for i in range(n):
        code = decide(pos, i, algo, c, corner_diag, perm[i], signs[i], mem[i], new_mem, out, mask, lo, hi)
        if code != STAY:
            return False
        for k in range(new_mem.shape[0]):
            if new_mem[k] != mem[i, k]:
                return False
    return True


@njit(cache=True)
def run_sync(pos, active_block, algo, b, c, corner_diag, perm, signs, mem, state,
             W, max_events, stop_at, record, tr_i, tr_dec, tr_before, tr_after):
    n, d = pos.shape
    mask = np.zeros(n, np.bool_)
    lo = np.empty(d)
    hi = np.empty(d)
    dirs = np.empty((n, d))
    codes = np.empty(n, np.int64)
    new_mem = np.empty(mem.shape, np.bool_)
    before = np.empty(d)
    while True:
        if state[EVENTS] >= max_events:
            return FINISHED
        if state[HAS_STREAK] and state[ROUND] - state[STREAK_ROUND] >= W:
            return FINISHED
        row = state[ROW]
        if row >= active_block.shape[0]:
            return NEED_SCHEDULE
        active = active_block[row]
        k_active = 0
        for i in range(n):
            if active[i]:
                k_active += 1
        if record and state[TRACE_LEN] + 2 * k_active > tr_i.shape[0]:
            return TRACE_FULL
        state[ROW] = row + 1
        snap = pos.copy()
        _box(snap, lo, hi)
        for i in range(n):
            if active[i]:
                codes[i] = decide(snap, i, algo, c, corner_diag, perm[i], signs[i], mem[i], new_mem[i],
                                  dirs[i], mask, lo, hi)
                if codes[i] == BLIND:
                    state[BAD_ROBOT] = i
                    return ERROR
        for i in range(n):
            if active[i]:
                if record:
                    _log(state, i, 0, dirs[i], False, snap[i], snap[i], tr_i, tr_dec, tr_before, tr_after)
                state[EVENTS] += 1
        moved = False
        mem_changed = False
        for i in range(n):
            if not active[i]:
                continue
            for k in range(mem.shape[1]):
                if mem[i, k] != new_mem[i, k]:
                    mem_changed = True
                mem[i, k] = new_mem[i, k]
            before[:] = pos[i]
            step = False
            if codes[i] == MOVE:
                for k in range(d):
                    pos[i, k] = before[k] + b * dirs[i, k]
                    if pos[i, k] != before[k]:
                        step = True
            if step:
                state[MOVES] += 1
                moved = True
            if record:
                _log(state, i, 1, dirs[i], codes[i] == MOVE, before, pos[i], tr_i, tr_dec, tr_before, tr_after)
            state[EVENTS] += 1
        state[ROUND] += 1
        ok = _update_streak(pos, algo, b, c, state)
        if state[EVENTS] >= stop_at:
            return STOP_AT
        if moved:
            continue
        if k_active == n:
            quiet = not mem_changed
        else:
            quiet = _quiescent(pos, algo, c, corner_diag, perm, signs, mem, mask, lo, hi)
        if quiet:
            state[QUIESCENT] = 1
            if not ok:
                state[HAS_STREAK] = 0
            return FINISHED


@njit(cache=True)
def run_async(pos, robots, phases, algo, b, c, corner_diag, perm, signs, mem, state,
              pending_dir, pending_move, look_epoch, done,
              W, max_events, stop_at, record, tr_i, tr_dec, tr_before, tr_after):
    n, d = pos.shape
    mask = np.zeros(n, np.bool_)
    lo = np.empty(d)
    hi = np.empty(d)
    out = np.empty(d)
    new_mem = np.empty(mem.shape[1], np.bool_)
    before = np.empty(d)
    while True:
        if state[EVENTS] >= max_events:
            return FINISHED
        if state[HAS_STREAK] and state[ROUND] - state[STREAK_ROUND] >= W:
            return FINISHED
        row = state[ROW]
        if row >= robots.shape[0]:
            return NEED_SCHEDULE
        if record and state[TRACE_LEN] + 1 > tr_i.shape[0]:
            return TRACE_FULL
        state[ROW] = row + 1
        i = robots[row]
        if phases[row] == 0:
            _box(pos, lo, hi)
            code = decide(pos, i, algo, c, corner_diag, perm[i], signs[i], mem[i], new_mem, out, mask, lo, hi)
            if code == BLIND:
                state[BAD_ROBOT] = i
                return ERROR
            mem[i, :] = new_mem
            pending_move[i] = code == MOVE
            if code == MOVE:
                pending_dir[i, :] = out
            look_epoch[i] = state[ROUND]
            if record:
                _log(state, i, 0, out, False, pos[i], pos[i], tr_i, tr_dec, tr_before, tr_after)
            state[EVENTS] += 1
        else:
            before[:] = pos[i]
            step = False
            if pending_move[i]:
                for k in range(d):
                    pos[i, k] = before[k] + b * pending_dir[i, k]
                    if pos[i, k] != before[k]:
                        step = True
            if step:
                state[MOVES] += 1
            if record:
                _log(state, i, 1, pending_dir[i], pending_move[i], before, pos[i],
                     tr_i, tr_dec, tr_before, tr_after)
            state[EVENTS] += 1
            pending_move[i] = False
            if step:
                state[MOVED_IN_EPOCH] = 1
                _update_streak(pos, algo, b, c, state)
            if look_epoch[i] == state[ROUND]:
                done[i] = True
            all_done = True
            for j in range(n):
                all_done &= done[j]
            if all_done:
                state[ROUND] += 1
                done[:] = False
                if state[MOVED_IN_EPOCH] == 0:
                    quiet = True
                    for j in range(n):
                        if pending_move[j]:
                            quiet = False
                            break
                    if quiet and _quiescent(pos, algo, c, corner_diag, perm, signs, mem, mask, lo, hi):
                        state[QUIESCENT] = 1
                        if not predicate(pos, algo, b, c):
                            state[HAS_STREAK] = 0
                        return FINISHED
                state[MOVED_IN_EPOCH] = 0
        if state[EVENTS] >= stop_at:
            return STOP_AT
