"""Resumable backtracking kernel (numba, releases the GIL).

The search state lives entirely in caller-owned arrays so a call can return
when the output buffer is full and be resumed later. That keeps memory
bounded by the buffer size no matter how many matches a scan produces.

State vector layout (int64):
    state[0]  index of the current anchor in ``anchors``
    state[1]  current search level (0 = pick the next anchor)
    state[2]  raw match count
    state[3]  canonical (deduplicated) match count
Per-level arrays (length k): ``bound`` node at level, ``cur``/``hi`` cursor and
end into the candidate source, ``src`` candidate source (0 out-CSR, 1 in-CSR,
2 all nodes).
"""

import numpy as np
from numba import njit

SRC_OUT = 0
SRC_IN = 1
SRC_ALL = 2


@njit(cache=True, nogil=True, inline="always")
def _has_edge(ptr, idx, u, v):
    lo = ptr[u]
    hi = ptr[u + 1]
    while lo < hi:
        mid = (lo + hi) >> 1
        x = idx[mid]
        if x < v:
            lo = mid + 1
        elif x > v:
            hi = mid
        else:
            return True
    return False


@njit(cache=True, nogil=True)
def _init_level(level, order, conn_level, conn_dir, n_conn, bound, out_ptr, in_ptr, n, cur, hi, src):
    c_n = n_conn[level]
    if c_n == 0:
        src[level] = SRC_ALL
        cur[level] = 0
        hi[level] = n
        return
    best = -1
    best_len = 0
    best_dir = 0
    for c in range(c_n):
        u = bound[conn_level[level, c]]
        d = conn_dir[level, c]
        if d == SRC_OUT:
            length = out_ptr[u + 1] - out_ptr[u]
        else:
            length = in_ptr[u + 1] - in_ptr[u]
        if best < 0 or length < best_len:
            best = u
            best_len = length
            best_dir = d
    src[level] = best_dir
    if best_dir == SRC_OUT:
        cur[level] = out_ptr[best]
        hi[level] = out_ptr[best + 1]
    else:
        cur[level] = in_ptr[best]
        hi[level] = in_ptr[best + 1]


@njit(cache=True, nogil=True)
def search(
    out_ptr, out_idx, in_ptr, in_idx, roles, out_deg, in_deg,
    anchors,
    order, role_mask, need_out, need_in, pat_adj, induced,
    conn_level, conn_dir, n_conn,
    autos,
    state, bound, cur, hi, src, assign,
    buf, emit,
):  # fmt: skip
    """Advance the search; return the number of canonical matches written to ``buf``.

    ``order`` is the search order of slots (``order[0]`` is the anchor slot),
    ``pat_adj[a, b]`` the pattern adjacency by slot, ``autos`` the non-identity
    automorphisms as rows ``perm`` with ``perm[s]`` the image of slot ``s``.
    Canonical matches are written in slot order. The call returns early when
    ``buf`` is full; ``state[0] == len(anchors)`` signals completion.
    """
    k = order.shape[0]
    n = roles.shape[0]
    n_anchor = anchors.shape[0]
    n_auto = autos.shape[0]
    cap = buf.shape[0]
    written = 0

    apos = state[0]
    level = state[1]
    raw = state[2]
    dedup = state[3]

    while apos < n_anchor:
        if level == 0:
            bound[0] = anchors[apos]
            level = 1
            _init_level(level, order, conn_level, conn_dir, n_conn, bound, out_ptr, in_ptr, n, cur, hi, src)

        s = order[level]
        found = False
        while cur[level] < hi[level]:
            i = cur[level]
            cur[level] = i + 1
            if src[level] == SRC_OUT:
                v = out_idx[i]
            elif src[level] == SRC_IN:
                v = in_idx[i]
            else:
                v = i
            if (role_mask[s] >> roles[v]) & 1 == 0:
                continue
            if out_deg[v] < need_out[s] or in_deg[v] < need_in[s]:
                continue
            ok = True
            for j in range(level):
                u = bound[j]
                if u == v:
                    ok = False
                    break
                t = order[j]
                e_uv = _has_edge(out_ptr, out_idx, u, v)
                if pat_adj[t, s]:
                    if not e_uv:
                        ok = False
                        break
                elif induced and e_uv:
                    ok = False
                    break
                e_vu = _has_edge(out_ptr, out_idx, v, u)
                if pat_adj[s, t]:
                    if not e_vu:
                        ok = False
                        break
                elif induced and e_vu:
                    ok = False
                    break
            if ok:
                bound[level] = v
                found = True
                break

        if not found:
            level -= 1
            if level == 0:
                apos += 1
            continue

        if level < k - 1:
            level += 1
            _init_level(level, order, conn_level, conn_dir, n_conn, bound, out_ptr, in_ptr, n, cur, hi, src)
            continue

        # complete assignment
        raw += 1
        for l in range(k):
            assign[order[l]] = bound[l]
        canonical = True
        for a in range(n_auto):
            for t in range(k):
                x = assign[autos[a, t]]
                y = assign[t]
                if x < y:
                    canonical = False
                    break
                if x > y:
                    break
            if not canonical:
                break
        if canonical:
            dedup += 1
            if emit:
                for t in range(k):
                    buf[written, t] = assign[t]
                written += 1
                if written == cap:
                    break

    state[0] = apos
    state[1] = level
    state[2] = raw
    state[3] = dedup
    return written
