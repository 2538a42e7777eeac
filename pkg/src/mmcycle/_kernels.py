"""Hot numeric kernels, compiled with numba when available.

Every kernel is written once in loop/numpy style that runs unchanged under
CPython; when the numba backend is active the same functions are wrapped in
``@njit``. Select with the ``MMC_BACKEND`` env var: ``auto`` (default, numba
if importable), ``numba`` (require it), ``numpy`` (force the pure fallback).

The matrix K = exp(-eta W) is never materialized: kernels recompute the log
entry -eta * w[e] on the fly, so the O(n)-memory mode allocates nothing per
edge, and kernels take caller-allocated buffers so that mode can account for
every auxiliary array it creates.
"""

from __future__ import annotations

import math
import os

import numpy as np

_REQUESTED = os.environ.get("MMC_BACKEND", "auto").strip().lower()
if _REQUESTED not in ("auto", "numba", "numpy"):
    raise ValueError(f"MMC_BACKEND must be auto|numba|numpy, got {_REQUESTED!r}")

HAS_NUMBA = False
if _REQUESTED in ("auto", "numba"):
    try:
        from numba import njit  # noqa: F401

        HAS_NUMBA = True
    except ImportError:
        if _REQUESTED == "numba":
            raise

BACKEND = "numba" if HAS_NUMBA else "numpy"

if HAS_NUMBA:
    def _jit(f):
        return njit(cache=True, nogil=True)(f)
else:
    def _jit(f):
        return f


@_jit
def lse_neg_scaled(w, eta):
    """Max-shifted log sum exp of -eta * w (the log of sum K)."""
    m = w.shape[0]
    mx = -np.inf
    for e in range(m):
        v = -eta * w[e]
        if v > mx:
            mx = v
    s = 0.0
    for e in range(m):
        s += math.exp(-eta * w[e] - mx)
    return mx + math.log(s)


# --- Osborne balancing ---

@_jit
def osborne_batch(x, out_ptr, out_eid, head, in_ptr, in_eid, tail, w, eta, idx_batch, m):
    """Run one batch of random Osborne coordinate steps in place.

    For each vertex i in idx_batch, set x_i to the geometric-mean balance
    point (LSE of in-entries minus LSE of out-entries, halved), using the
    off-diagonal row/column sums only (the self-loop entry of A is invariant
    under diagonal scaling). Returns (passes, steps_done, status); status 1
    means some vertex has edges in only one direction (not balanceable).
    """
    passes = 0.0
    for b in range(idx_batch.shape[0]):
        i = idx_batch[b]
        rmax = -np.inf
        for t in range(out_ptr[i], out_ptr[i + 1]):
            e = out_eid[t]
            j = head[e]
            if j != i:
                v = -eta * w[e] - x[j]
                if v > rmax:
                    rmax = v
        cmax = -np.inf
        for t in range(in_ptr[i], in_ptr[i + 1]):
            e = in_eid[t]
            j = tail[e]
            if j != i:
                v = -eta * w[e] + x[j]
                if v > cmax:
                    cmax = v
        deg = (out_ptr[i + 1] - out_ptr[i]) + (in_ptr[i + 1] - in_ptr[i])
        passes += deg / m
        if rmax == -np.inf and cmax == -np.inf:
            continue
        if rmax == -np.inf or cmax == -np.inf:
            return passes, b, 1
        rs = 0.0
        for t in range(out_ptr[i], out_ptr[i + 1]):
            e = out_eid[t]
            j = head[e]
            if j != i:
                rs += math.exp(-eta * w[e] - x[j] - rmax)
        cs = 0.0
        for t in range(in_ptr[i], in_ptr[i + 1]):
            e = in_eid[t]
            j = tail[e]
            if j != i:
                cs += math.exp(-eta * w[e] + x[j] - cmax)
        # log r_i = x_i + rmax + log rs ; log c_i = -x_i + cmax + log cs
        # x_i += (log c_i - log r_i)/2 collapses to the closed form below.
        x[i] = 0.5 * (cmax + math.log(cs) - rmax - math.log(rs))
    return passes, idx_batch.shape[0], 0


@_jit
def imbalance_stats(x, out_ptr, out_eid, head, in_ptr, in_eid, tail, w, eta, logr, logc):
    """Fill per-vertex log row/column sums of A (diagonal included) and
    return (l1 imbalance ratio, log sum A)."""
    n = x.shape[0]
    for i in range(n):
        mx = -np.inf
        for t in range(out_ptr[i], out_ptr[i + 1]):
            e = out_eid[t]
            v = -eta * w[e] - x[head[e]]
            if v > mx:
                mx = v
        if mx == -np.inf:
            logr[i] = -np.inf
        else:
            s = 0.0
            for t in range(out_ptr[i], out_ptr[i + 1]):
                e = out_eid[t]
                s += math.exp(-eta * w[e] - x[head[e]] - mx)
            logr[i] = x[i] + mx + math.log(s)
        mx = -np.inf
        for t in range(in_ptr[i], in_ptr[i + 1]):
            e = in_eid[t]
            v = -eta * w[e] + x[tail[e]]
            if v > mx:
                mx = v
        if mx == -np.inf:
            logc[i] = -np.inf
        else:
            s = 0.0
            for t in range(in_ptr[i], in_ptr[i + 1]):
                e = in_eid[t]
                s += math.exp(-eta * w[e] + x[tail[e]] - mx)
            logc[i] = -x[i] + mx + math.log(s)
    big = -np.inf
    for i in range(n):
        if logr[i] > big:
            big = logr[i]
        if logc[i] > big:
            big = logc[i]
    num = 0.0
    den = 0.0
    for i in range(n):
        r = math.exp(logr[i] - big) if logr[i] > -np.inf else 0.0
        c = math.exp(logc[i] - big) if logc[i] > -np.inf else 0.0
        num += abs(r - c)
        den += r
    return num / den, big + math.log(den)


@_jit
def balanced_flow_stats(x, tail, head, w, eta, log_alpha, p_out, fill):
    """Scan A = diag(e^x) K diag(e^-x) in shifted log domain.

    Returns (ymax, s_all, s_kept): max shifted exponent, total of all
    entries, and total of entries at or above the drop threshold, all in
    e^{ymax} units. With fill != 0, writes the normalized kept entries
    (dropped ones zeroed) into p_out.
    """
    m = tail.shape[0]
    ymax = -np.inf
    for e in range(m):
        y = x[tail[e]] - x[head[e]] - eta * w[e]
        if y > ymax:
            ymax = y
    s_all = 0.0
    s_kept = 0.0
    for e in range(m):
        z = x[tail[e]] - x[head[e]] - eta * w[e] - ymax
        ez = math.exp(z)
        s_all += ez
        if z >= log_alpha:
            s_kept += ez
    if fill != 0:
        for e in range(m):
            z = x[tail[e]] - x[head[e]] - eta * w[e] - ymax
            if z >= log_alpha:
                p_out[e] = math.exp(z) / s_kept
            else:
                p_out[e] = 0.0
    return ymax, s_all, s_kept


@_jit
def quantize_counts(tail, head, w, p_arr, use_parr, x, eta, ymax, s_kept,
                    log_alpha, alpha, net_out, n_out, fill):
    """Floor P down to integer multiples of alpha.

    P entries either come from p_arr (use_parr != 0) or are recomputed from
    the balancing stats with arithmetic identical to balanced_flow_stats'
    fill loop, so both routes floor the same float bits. Accumulates vertex
    net counts (in minus out) into net_out and returns (total count, count
    dot w)."""
    m = tail.shape[0]
    total = 0
    dot = 0.0
    for e in range(m):
        if use_parr != 0:
            p = p_arr[e]
        else:
            z = x[tail[e]] - x[head[e]] - eta * w[e] - ymax
            if z >= log_alpha:
                p = math.exp(z) / s_kept
            else:
                p = 0.0
        cnt = int(np.floor(p / alpha))
        total += cnt
        net_out[head[e]] += cnt
        net_out[tail[e]] -= cnt
        dot += cnt * w[e]
        if fill != 0:
            n_out[e] = cnt
    return total, dot


# --- quantized cycle cancelling ---

@_jit
def round_cycle_scan(n, out_ptr, out_eid, head, tail, w,
                     counts, use_counts,
                     x, eta, ymax, s_kept, log_alpha, alpha,
                     add_in, in_eid_of, add_out, out_eid_of,
                     target_mean, tol,
                     cursor, remain, pos, stack_v, stack_e, cyc_buf, best_buf):
    """DFS cycle cancelling over an exactly quantized circulation.

    Edge counts are either read from counts (dense) or recomputed on demand
    from the balancing stats plus the tree-edge adjustment ledger (add_in,
    add_out keyed by vertex). Per-vertex cursors advance monotonically in
    edge-oracle order; cancelling a cycle pops the stack back to the closing
    vertex and the search continues from there.

    Returns (best_len, best_mean, cancelled_edge_visits, status) with the
    best cycle's edge ids in best_buf[:best_len]. status: 1 early exit on a
    cycle with mean <= target_mean + tol, 0 flow exhausted (best_buf holds
    the minimum seen), 2 internal inconsistency (not a circulation).
    """
    cancelled = 0
    best_len = 0
    best_mean = np.inf
    scan_v = 0
    top = 0
    status = 0
    while True:
        if top == 0:
            started = False
            while scan_v < n:
                has = False
                while cursor[scan_v] < out_ptr[scan_v + 1] - out_ptr[scan_v]:
                    e = out_eid[out_ptr[scan_v] + cursor[scan_v]]
                    r = remain[scan_v]
                    if r < 0:
                        if use_counts != 0:
                            r = counts[e]
                        else:
                            z = x[tail[e]] - x[head[e]] - eta * w[e] - ymax
                            if z >= log_alpha:
                                p = math.exp(z) / s_kept
                            else:
                                p = 0.0
                            r = int(np.floor(p / alpha))
                        u0 = tail[e]
                        v0 = head[e]
                        if in_eid_of[u0] == e:
                            r += add_in[u0]
                        if out_eid_of[v0] == e:
                            r += add_out[v0]
                    if r > 0:
                        remain[scan_v] = r
                        has = True
                        break
                    cursor[scan_v] += 1
                    remain[scan_v] = -1
                if has:
                    started = True
                    break
                scan_v += 1
            if not started:
                break
            pos[scan_v] = 0
            stack_v[0] = scan_v
            top = 1
        u = stack_v[top - 1]
        has = False
        while cursor[u] < out_ptr[u + 1] - out_ptr[u]:
            e = out_eid[out_ptr[u] + cursor[u]]
            r = remain[u]
            if r < 0:
                if use_counts != 0:
                    r = counts[e]
                else:
                    z = x[tail[e]] - x[head[e]] - eta * w[e] - ymax
                    if z >= log_alpha:
                        p = math.exp(z) / s_kept
                    else:
                        p = 0.0
                    r = int(np.floor(p / alpha))
                u0 = tail[e]
                v0 = head[e]
                if in_eid_of[u0] == e:
                    r += add_in[u0]
                if out_eid_of[v0] == e:
                    r += add_out[v0]
            if r > 0:
                remain[u] = r
                has = True
                break
            cursor[u] += 1
            remain[u] = -1
        if not has:
            pos[u] = -1
            top -= 1
            if top > 0:
                # parent still sees positive flow into u: conservation broke
                status = 2
                break
            continue
        e = out_eid[out_ptr[u] + cursor[u]]
        v = head[e]
        if pos[v] < 0:
            pos[v] = top
            stack_e[top - 1] = e
            stack_v[top] = v
            top += 1
            continue
        q = pos[v]
        length = top - q
        wsum = w[e]
        cyc_buf[length - 1] = e
        for idx in range(q, top - 1):
            cyc_buf[idx - q] = stack_e[idx]
            wsum += w[stack_e[idx]]
        mean = wsum / length
        if mean < best_mean:
            best_mean = mean
            best_len = length
            for idx in range(length):
                best_buf[idx] = cyc_buf[idx]
        if mean <= target_mean + tol:
            status = 1
            break
        fmin = remain[stack_v[top - 1]]
        for idx in range(q, top - 1):
            rv = remain[stack_v[idx]]
            if rv < fmin:
                fmin = rv
        cancelled += length
        for idx in range(q, top):
            tv = stack_v[idx]
            nr = remain[tv] - fmin
            if nr == 0:
                cursor[tv] += 1
                remain[tv] = -1
            else:
                remain[tv] = nr
        for idx in range(q + 1, top):
            pos[stack_v[idx]] = -1
        top = q + 1
    return best_len, best_mean, cancelled, status


# --- Karp dynamic program ---

@_jit
def karp_table(tail, head, w, n, dist, pred):
    """Fill dist[k, v] = min weight of a walk with exactly k edges from
    vertex 0, and pred[k, v] = the edge taken last. Tables are (n+1, n),
    preinitialized to +inf / -1 by the caller except dist[0, 0] = 0."""
    m = tail.shape[0]
    for k in range(n):
        for e in range(m):
            t = tail[e]
            if dist[k, t] < np.inf:
                cand = dist[k, t] + w[e]
                h = head[e]
                if cand < dist[k + 1, h]:
                    dist[k + 1, h] = cand
                    pred[k + 1, h] = e
    return 0


# --- area-convexity saddle-point solver ---

@_jit
def aprox_kernel(vx, vy, tail, head, nonloop, n, c, eps_prime, omega, rounds_cap):
    """Alternating-minimization proximal step for the area-convex regularizer.

    y <- Trunc_[-1,1](-v^y / (2c|A|x)), then x <- softmax of
    -v^x/(omega c) - |A|^T y^2 / omega, for rounds_cap rounds with an l1
    movement early exit at eps'/(4c). Returns (x, y, operator passes).
    """
    m = vx.shape[0]
    x = np.full(m, 1.0 / m)
    y = np.zeros(n)
    passes = 0.0
    thresh = eps_prime / (4.0 * c)
    for _ in range(rounds_cap):
        xm = x * nonloop
        ax = (np.bincount(tail, weights=xm, minlength=n)
              + np.bincount(head, weights=xm, minlength=n))
        passes += 1.0
        denom = 2.0 * c * ax
        safe = np.where(denom > 0.0, denom, 1.0)
        yq = np.where(denom > 0.0, -vy / safe, np.sign(-vy) * 2.0)
        ynew = np.minimum(1.0, np.maximum(-1.0, yq))
        y2 = ynew * ynew
        tvec = (y2[tail] + y2[head]) * nonloop
        passes += 1.0
        logits = -vx / (omega * c) - tvec / omega
        logits = logits - np.max(logits)
        ex = np.exp(logits)
        xnew = ex / np.sum(ex)
        move = np.sum(np.abs(xnew - x)) + np.sum(np.abs(ynew - y))
        x = xnew
        y = ynew
        if move < thresh:
            break
    return x, y, passes


@_jit
def al1_kernel(tail, head, w, nonloop, n, c, eps_tilde, max_iters,
               aprox_rounds, omega, step_extra, step_avg, trace, trace_stride):
    """Dual extrapolation on the l1-penalized saddle point.

    The raw accumulator s drifts outside the feasible product set, so the
    termination gap is evaluated at the running average of the u iterates
    (a feasible certificate); a second cheap check exits early when the last
    iterate u certifies by itself, in which case that pair is returned.

    Returns (px, py, gap, passes, iters, cert_last, zx, zy, ux, uy) where
    the trailing pairs are the last proximal iterates.
    """
    m = w.shape[0]
    sx = np.full(m, 1.0 / m)
    sy = np.zeros(n)
    ubx = np.full(m, 1.0 / m)
    uby = np.zeros(n)
    usum_x = np.zeros(m)
    usum_y = np.zeros(n)
    zx_l = np.full(m, 1.0 / m)
    zy_l = np.zeros(n)
    ux_l = np.full(m, 1.0 / m)
    uy_l = np.zeros(n)
    passes = 0.0
    iters = 0
    gap = np.inf
    cert_last = 0
    eps_p = 0.5 * eps_tilde
    while iters <= max_iters:
        axb = (np.bincount(head, weights=ubx, minlength=n)
               - np.bincount(tail, weights=ubx, minlength=n))
        aty = uby[head] - uby[tail]
        passes += 2.0
        gap = (np.dot(ubx, w) + c * np.sum(np.abs(axb))) - np.min(w + c * aty)
        k = iters // trace_stride
        if iters % trace_stride == 0 and k < trace.shape[0]:
            trace[k] = gap
        if gap <= eps_tilde or iters == max_iters:
            break
        zx, zy, pz = aprox_kernel(sx, sy, tail, head, nonloop, n, c, eps_p,
                                  omega, aprox_rounds)
        passes += pz
        zx_l = zx
        zy_l = zy
        atzy = zy[head] - zy[tail]
        azx = (np.bincount(head, weights=zx, minlength=n)
               - np.bincount(tail, weights=zx, minlength=n))
        passes += 2.0
        vux = sx + step_extra * (w + c * atzy)
        vuy = sy - step_extra * (c * azx)
        ux, uy, pu = aprox_kernel(vux, vuy, tail, head, nonloop, n, c, eps_p,
                                  omega, aprox_rounds)
        passes += pu
        ux_l = ux
        uy_l = uy
        axu = (np.bincount(head, weights=ux, minlength=n)
               - np.bincount(tail, weights=ux, minlength=n))
        atuy = uy[head] - uy[tail]
        passes += 2.0
        gap_u = (np.dot(ux, w) + c * np.sum(np.abs(axu))) - np.min(w + c * atuy)
        iters += 1
        usum_x += ux
        usum_y += uy
        ubx = usum_x / iters
        uby = usum_y / iters
        if gap_u <= eps_tilde:
            ubx = ux
            uby = uy
            gap = gap_u
            cert_last = 1
            k = iters // trace_stride
            if k < trace.shape[0]:
                trace[k] = gap_u
            break
        sx = sx + step_avg * (w + c * atuy)
        sy = sy - step_avg * (c * axu)
    return ubx, uby, gap, passes, iters, cert_last, zx_l, zy_l, ux_l, uy_l
