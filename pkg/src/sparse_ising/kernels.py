"""numba kernels for p-bit sweeps over a CSR coupling graph.

All kernels consume a ``(sweeps, n)`` block ``U`` of uniforms in ``[-1, 1)``;
node ``i`` in sweep ``t`` always uses ``U[t, i]``, whatever the update order.
States are int8 bipolar vectors updated in place.
"""
from __future__ import annotations

import numba
import numpy as np

LIVE = 0        # sequential / chromatic: every read sees current values
PARALLEL = 1    # every node reads the previous sweep's state
DOUBLE = 2      # per-entry mix of current and previous-sweep values
SIGNED = 3      # live reads with per-entry sign flips

_EMPTY_F = np.zeros(0)
_EMPTY_I8 = np.zeros(0, dtype=np.int8)
_EMPTY_I = np.zeros(0, dtype=np.int64)


@numba.njit(cache=True, inline="always")
def _activate(x, table, step):
    if table.size == 0:
        return np.tanh(x)
    half = table.size // 2
    k = int(np.rint(x / step)) + half
    if k < 0:
        k = 0
    elif k >= table.size:
        k = table.size - 1
    return table[k]


@numba.njit(cache=True)
def energy_csr(indptr, indices, data, h, s):
    e = 0.0
    for i in range(s.size):
        acc = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            acc += data[p] * s[indices[p]]
        e -= s[i] * (0.5 * acc + h[i])
    return e


@numba.njit(cache=True)
def _satisfied(s, var_start, cl_var, cl_pos):
    nv = var_start.size - 1
    val = np.empty(nv, dtype=np.int8)
    for x in range(nv):
        tot = 0
        for r in range(var_start[x], var_start[x + 1]):
            tot += s[r]
        if tot > 0:
            val[x] = 1
        elif tot < 0:
            val[x] = -1
        else:
            val[x] = s[var_start[x]]
    count = 0
    for c in range(cl_var.shape[0]):
        for q in range(3):
            if (val[cl_var[c, q]] > 0) == cl_pos[c, q]:
                count += 1
                break
    return count


@numba.njit(cache=True)
def _field(indptr, indices, data, h, s, i, scale, beta):
    # Returns the exact field and the (possibly quantized) activation argument.
    acc = h[i]
    if scale <= 0.0:
        for p in range(indptr[i], indptr[i + 1]):
            acc += data[p] * s[indices[p]]
        return acc, beta * acc
    q = np.rint(beta * h[i] * scale) / scale
    for p in range(indptr[i], indptr[i + 1]):
        w = data[p] * s[indices[p]]
        acc += w
        q += np.rint(beta * data[p] * scale) / scale * s[indices[p]]
    return acc, q


@numba.njit(cache=True)
def run_sweeps(indptr, indices, data, h, order, s, betas, U, mode, flags,
               table, step, scale, energy0, target_e, sat_target,
               var_start, cl_var, cl_pos, free, trace_e, trace_sat, codes, best_s, best):
    """Run ``len(betas)`` sweeps.  Stops after the first sweep whose energy is
    ``<= target_e`` or whose satisfied-clause count is ``>= sat_target`` (when
    ``sat_target > 0``).  Returns ``(sweeps_done, energy, hit)``.

    ``best`` is a length-1 array holding the best energy seen; ``best_s``
    receives the matching state when non-empty.
    """
    n = s.size
    S = betas.size
    e = energy0
    old = s.copy()
    tmp = np.empty(n, dtype=np.float64)
    track_sat = cl_var.shape[0] > 0
    for t in range(S):
        beta = betas[t]
        if mode == LIVE:
            for k in range(order.size):
                i = order[k]
                I, x = _field(indptr, indices, data, h, s, i, scale, beta)
                new = 1 if _activate(x, table, step) > U[t, i] else -1
                if new != s[i]:
                    e -= (new - s[i]) * I
                    s[i] = new
        elif mode == PARALLEL:
            for k in range(order.size):
                i = order[k]
                I, x = _field(indptr, indices, data, h, s, i, scale, beta)
                tmp[i] = 1.0 if _activate(x, table, step) > U[t, i] else -1.0
            for k in range(order.size):
                i = order[k]
                s[i] = np.int8(tmp[i])
            e = energy_csr(indptr, indices, data, h, s)
        else:
            old[:] = s
            for k in range(order.size):
                i = order[k]
                acc = h[i]
                for p in range(indptr[i], indptr[i + 1]):
                    j = indices[p]
                    if mode == DOUBLE:
                        acc += data[p] * (s[j] if flags[p] else old[j])
                    else:
                        acc += data[p] * flags[p] * s[j]
                s[i] = 1 if _activate(beta * acc, table, step) > U[t, i] else -1
            e = energy_csr(indptr, indices, data, h, s)
        if trace_e.size > 0:
            trace_e[t] = e
        if codes.size > 0:
            c = 0
            for k in range(free.size):
                c = (c << 1) | (1 if s[free[k]] > 0 else 0)
            codes[t] = c
        if best_s.size > 0 and e < best[0] - 1e-9:
            best[0] = e
            best_s[:] = s
        elif e < best[0]:
            best[0] = e
        hit = e <= target_e
        if track_sat:
            sat = _satisfied(s, var_start, cl_var, cl_pos)
            if trace_sat.size > 0:
                trace_sat[t] = sat
            if sat_target > 0 and sat >= sat_target:
                hit = True
        if hit:
            return t + 1, e, True
    return S, e, False


@numba.njit(cache=True, parallel=True)
def run_chromatic_threaded(indptr, indices, data, h, order, block_ptr, s, betas, U,
                           energy0, target_e, trace_e):
    """Chromatic sweeps with each color block updated by a thread-parallel loop.

    Nodes within a block are never adjacent, so concurrent updates cannot read
    each other's writes.
    """
    e = energy0
    nb = block_ptr.size - 1
    for t in range(betas.size):
        beta = betas[t]
        for b in range(nb):
            de = 0.0
            for k in numba.prange(block_ptr[b], block_ptr[b + 1]):
                i = order[k]
                acc = h[i]
                for p in range(indptr[i], indptr[i + 1]):
                    acc += data[p] * s[indices[p]]
                new = 1 if np.tanh(beta * acc) > U[t, i] else -1
                if new != s[i]:
                    de -= (new - s[i]) * acc
                    s[i] = new
            e += de
        if trace_e.size > 0:
            trace_e[t] = e
        if e <= target_e:
            return t + 1, e, True
    return betas.size, e, False
