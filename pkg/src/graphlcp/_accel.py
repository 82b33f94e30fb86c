"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The numba path is used whenever numba imports cleanly. Set
``GRAPHLCP_DISABLE_NUMBA=1`` to force the numpy path (useful for debugging
and for the benchmark in ``benchmarks/``). Both paths share call signatures
and are exposed individually as ``*_numba`` / ``*_numpy`` so they can be
compared in one process.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("GRAPHLCP_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError("numba disabled by GRAPHLCP_DISABLE_NUMBA")
    import numba

    HAVE_NUMBA = True
except ImportError:
    numba = None
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"


def _maybe_njit(fn):
    if not HAVE_NUMBA:
        return None
    return numba.njit(cache=True, nogil=True)(fn)


# ---------------------------------------------------------------------------
# truncated PPR:  mass = sum_{k=0..K} beta (1-beta)^k e_seed M^k
# ---------------------------------------------------------------------------


def _ppr_loop(indptr, indices, probs, isolated, seed, beta, num_steps):
    n = indptr.shape[0] - 1
    v = np.zeros(n)
    v[seed] = beta
    mass = v.copy()
    nxt = np.zeros(n)
    keep = 1.0 - beta
    for _ in range(num_steps):
        nxt[:] = 0.0
        for i in range(n):
            vi = v[i]
            if vi == 0.0:
                continue
            vi *= keep
            if isolated[i]:
                nxt[i] += vi
                continue
            for e in range(indptr[i], indptr[i + 1]):
                nxt[indices[e]] += vi * probs[e]
        for i in range(n):
            v[i] = nxt[i]
            mass[i] += nxt[i]
    return mass


def ppr_numpy(indptr, indices, probs, isolated, seed, beta, num_steps):
    n = indptr.shape[0] - 1
    rows = np.repeat(np.arange(n), np.diff(indptr))
    v = np.zeros(n)
    v[seed] = beta
    mass = v.copy()
    keep = 1.0 - beta
    for _ in range(num_steps):
        vk = v * keep
        nxt = np.bincount(indices, weights=vk[rows] * probs, minlength=n)
        nxt[isolated] += vk[isolated]
        v = nxt
        mass += v
    return mass


ppr_numba = _maybe_njit(_ppr_loop)
ppr_truncated = ppr_numba if HAVE_NUMBA else ppr_numpy


# ---------------------------------------------------------------------------
# weighted random walk on CSR rows
#
# keys[e] = row(e) + cumulative transition probability up to and including e,
# so one global array is monotone and both paths pick identical entries.
# ---------------------------------------------------------------------------


def _walk_loop(indptr, indices, keys, start, uniforms):
    node = start
    for s in range(uniforms.shape[0]):
        lo = indptr[node]
        hi = indptr[node + 1]
        if hi == lo:
            continue
        target = node + uniforms[s]
        # first entry in [lo, hi) with key > target
        a = lo
        b = hi
        while a < b:
            mid = (a + b) // 2
            if keys[mid] > target:
                b = mid
            else:
                a = mid + 1
        if a >= hi:
            a = hi - 1
        node = indices[a]
    return node


def walk_numpy(indptr, indices, keys, start, uniforms):
    node = int(start)
    for u in uniforms:
        lo, hi = indptr[node], indptr[node + 1]
        if hi == lo:
            continue
        a = lo + int(np.searchsorted(keys[lo:hi], node + u, side="right"))
        node = int(indices[min(a, hi - 1)])
    return node


walk_numba = _maybe_njit(_walk_loop)
random_walk = walk_numba if HAVE_NUMBA else walk_numpy


def _walk_many_loop(indptr, indices, keys, starts, lengths, uniforms):
    out = np.empty(starts.shape[0], dtype=np.int64)
    offset = 0
    for w in range(starts.shape[0]):
        k = lengths[w]
        node = starts[w]
        for s in range(k):
            lo = indptr[node]
            hi = indptr[node + 1]
            if hi == lo:
                continue
            target = node + uniforms[offset + s]
            a = lo
            b = hi
            while a < b:
                mid = (a + b) // 2
                if keys[mid] > target:
                    b = mid
                else:
                    a = mid + 1
            if a >= hi:
                a = hi - 1
            node = indices[a]
        out[w] = node
        offset += k
    return out


def walk_many_numpy(indptr, indices, keys, starts, lengths, uniforms):
    # vectorised across walkers, one step at a time
    nodes = np.asarray(starts, dtype=np.int64).copy()
    lengths = np.asarray(lengths, dtype=np.int64)
    offsets = np.concatenate(([0], np.cumsum(lengths)[:-1])).astype(np.int64)
    for s in range(int(lengths.max(initial=0))):
        active = np.nonzero(lengths > s)[0]
        cur = nodes[active]
        lo = indptr[cur]
        hi = indptr[cur + 1]
        moving = hi > lo
        active, cur, lo, hi = active[moving], cur[moving], lo[moving], hi[moving]
        target = cur + uniforms[offsets[active] + s]
        pos = np.searchsorted(keys, target, side="right")
        pos = np.clip(pos, lo, hi - 1)
        nodes[active] = indices[pos]
    return nodes


walk_many_numba = _maybe_njit(_walk_many_loop)
random_walk_many = walk_many_numba if HAVE_NUMBA else walk_many_numpy


# ---------------------------------------------------------------------------
# all-pairs scan: pairs i<j with sum_k (z_ik - z_jk)^2 <= bound
# z is pre-scaled by 1/sqrt(per-dimension variance).
# ---------------------------------------------------------------------------


def _pair_scan_loop(z, bound):
    n, c = z.shape
    cap = 1024
    rows = np.empty(cap, dtype=np.int64)
    cols = np.empty(cap, dtype=np.int64)
    dist = np.empty(cap)
    count = 0
    if bound < 0.0:
        return rows[:0], cols[:0], dist[:0]
    for i in range(n):
        for j in range(i + 1, n):
            acc = 0.0
            ok = True
            for k in range(c):
                d = z[i, k] - z[j, k]
                acc += d * d
                if acc > bound:
                    ok = False
                    break
            if not ok:
                continue
            if count == cap:
                cap *= 2
                r2 = np.empty(cap, dtype=np.int64)
                c2 = np.empty(cap, dtype=np.int64)
                d2 = np.empty(cap)
                r2[:count] = rows[:count]
                c2[:count] = cols[:count]
                d2[:count] = dist[:count]
                rows, cols, dist = r2, c2, d2
            rows[count] = i
            cols[count] = j
            dist[count] = acc
            count += 1
    return rows[:count], cols[:count], dist[:count]


def pair_scan_numpy(z, bound, block_elems=4_000_000):
    n, c = z.shape
    empty = (np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64), np.empty(0))
    if bound < 0.0 or n < 2:
        return empty
    step = max(1, block_elems // max(1, n * c))
    out_r, out_c, out_d = [], [], []
    for a in range(0, n - 1, step):
        b = min(n - 1, a + step)
        diff = z[a:b, None, :] - z[None, a + 1 :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        # column offset: entry (r, q) pairs row a+r with node a+1+q
        r, q = np.nonzero(d2 <= bound)
        cols = a + 1 + q
        keep = cols > a + r
        r, q, cols = r[keep], q[keep], cols[keep]
        out_r.append(a + r)
        out_c.append(cols)
        out_d.append(d2[r, q])
    if not out_r:
        return empty
    return (
        np.concatenate(out_r).astype(np.int64),
        np.concatenate(out_c).astype(np.int64),
        np.concatenate(out_d),
    )


pair_scan_numba = _maybe_njit(_pair_scan_loop)
pair_scan = pair_scan_numba if HAVE_NUMBA else pair_scan_numpy


# ---------------------------------------------------------------------------
# minimum-density window of length >= L over a 0/1 sequence.
#
# Prefix points (i, P_i); for each right end j the best left end lies on the
# upper convex hull of {(i, P_i) : i <= j - L}. Everything is integer, so
# comparisons are exact. Returns (covered, length, start, stop).
# ---------------------------------------------------------------------------


def _min_window_loop(values, min_len):
    m = values.shape[0]
    prefix = np.zeros(m + 1, dtype=np.int64)
    for i in range(m):
        prefix[i + 1] = prefix[i] + values[i]
    hull = np.empty(m + 1, dtype=np.int64)
    size = 0
    best_num = prefix[m]
    best_den = m
    best_i = 0
    best_j = m
    for j in range(min_len, m + 1):
        p = j - min_len
        # push p keeping an upper hull (drop points on or below the chord)
        while size >= 2:
            a = hull[size - 2]
            b = hull[size - 1]
            cross = (b - a) * (prefix[p] - prefix[a]) - (prefix[b] - prefix[a]) * (p - a)
            if cross >= 0:
                size -= 1
            else:
                break
        hull[size] = p
        size += 1
        # tangent from j: slope to hull[k] is decreasing then non-decreasing
        lo = 0
        hi = size - 1
        while lo < hi:
            mid = (lo + hi) // 2
            a = hull[mid]
            b = hull[mid + 1]
            # slope(b, j) < slope(a, j)  <=>  b strictly above line a-j
            lhs = (prefix[j] - prefix[b]) * (j - a)
            rhs = (prefix[j] - prefix[a]) * (j - b)
            if lhs < rhs:
                lo = mid + 1
            else:
                hi = mid
        i = hull[lo]
        num = prefix[j] - prefix[i]
        den = j - i
        if num * best_den < best_num * den:
            best_num = num
            best_den = den
            best_i = i
            best_j = j
    return best_num, best_den, best_i, best_j


min_window_numba = _maybe_njit(_min_window_loop)
# interpreted fallback: the hull sweep is inherently sequential
min_window_numpy = _min_window_loop
min_density_window = min_window_numba if HAVE_NUMBA else min_window_numpy
