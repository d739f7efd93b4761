"""Compiled numeric kernels with a pure-numpy fallback.

The hot inner loops live here: the small dense dual-simplex solver, the
lower-hull evaluation of sup-inf functionals, and the batched local-LP
frontier fits.  With numba installed the kernels are JIT compiled; set
``FRONTIER_NUMBA=0`` to force the plain Python/numpy path.  Both paths are
built from the same source, so they agree to the last bit;
``benchmarks/bench_accel.py`` times one against the other.
"""

from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np

# solver status codes
LP_OPTIMAL = 0
LP_UNBOUNDED = 1  # dual infeasible: certifying ray returned
LP_INFEASIBLE = 2
LP_ITERATION_LIMIT = 3
LP_SINGULAR = 4

# batched frontier-fit status codes
TILDE_BOUNDED = 0
TILDE_UNBOUNDED = 1
TILDE_FAILED = 3

_flag = os.environ.get("FRONTIER_NUMBA", "1").strip().lower()
NUMBA_REQUESTED = _flag not in {"0", "false", "off", "no"}

try:
    import numba  # noqa: F401

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

USE_NUMBA = NUMBA_REQUESTED and HAS_NUMBA


def build_kernels(use_jit: bool) -> SimpleNamespace:
    """Build the kernel namespace, JIT compiled when requested."""
    if use_jit:
        from numba import njit

        def jit(f):
            return njit(f)

    else:

        def jit(f):
            return f

    @jit
    def solve_square(A, rhs, out):
        # Gaussian elimination with partial pivoting; systems here are at
        # most ~8x8.  Returns False on a numerically singular matrix.
        n = A.shape[0]
        M = np.empty((n, n + 1))
        for r in range(n):
            for cc in range(n):
                M[r, cc] = A[r, cc]
            M[r, n] = rhs[r]
        for col in range(n):
            piv = col
            best = abs(M[col, col])
            for r in range(col + 1, n):
                v = abs(M[r, col])
                if v > best:
                    best = v
                    piv = r
            if best < 1e-12:
                return False
            if piv != col:
                for cc in range(col, n + 1):
                    tmp = M[col, cc]
                    M[col, cc] = M[piv, cc]
                    M[piv, cc] = tmp
            for r in range(col + 1, n):
                f = M[r, col] / M[col, col]
                if f != 0.0:
                    for cc in range(col, n + 1):
                        M[r, cc] -= f * M[col, cc]
        for r in range(n - 1, -1, -1):
            s = M[r, n]
            for cc in range(r + 1, n):
                s -= M[r, cc] * out[cc]
            out[r] = s / M[r, r]
        return True

    @jit
    def simplex_max(A, b, c, known_feasible, tol, max_iter):
        # Maximise c.z subject to A z <= b with z free, via the dual
        #   min b.y  s.t.  A'y = c, y >= 0
        # solved by revised simplex with Bland's rule (deterministic,
        # cycle-free) and explicit refactorisation each pivot.
        # Returns (status, z, value, ray, iterations).  On LP_UNBOUNDED the
        # ray satisfies A ray <= 0, c.ray > 0 (Farkas certificate from the
        # phase-1 multipliers); the caller decides unbounded vs infeasible
        # when primal feasibility is not known a priori.
        m, k = A.shape
        z = np.zeros(k)
        ray = np.zeros(k)
        if m == 0:
            unb = False
            for j in range(k):
                if abs(c[j]) > tol:
                    unb = True
            if not unb:
                return LP_OPTIMAL, z, 0.0, ray, 0
            for j in range(k):
                ray[j] = c[j]
            return LP_UNBOUNDED, z, 0.0, ray, 0

        art_sign = np.empty(k)
        for j in range(k):
            art_sign[j] = 1.0 if c[j] >= 0.0 else -1.0
        basis = np.empty(k, np.int64)
        for j in range(k):
            basis[j] = m + j

        B = np.empty((k, k))
        Bt = np.empty((k, k))
        xb = np.empty(k)
        pi = np.empty(k)
        d = np.empty(k)
        cb = np.empty(k)
        col = np.empty(k)

        iters = 0
        phase = 1
        while True:
            if iters > max_iter:
                return LP_ITERATION_LIMIT, z, 0.0, ray, iters
            for pos in range(k):
                idx = basis[pos]
                if idx < m:
                    for r in range(k):
                        B[r, pos] = A[idx, r]
                else:
                    for r in range(k):
                        B[r, pos] = 0.0
                    B[idx - m, pos] = art_sign[idx - m]
            if not solve_square(B, c, xb):
                return LP_SINGULAR, z, 0.0, ray, iters
            for pos in range(k):
                idx = basis[pos]
                if phase == 1:
                    cb[pos] = 1.0 if idx >= m else 0.0
                else:
                    cb[pos] = b[idx] if idx < m else 0.0
            for r in range(k):
                for cc in range(k):
                    Bt[r, cc] = B[cc, r]
            if not solve_square(Bt, cb, pi):
                return LP_SINGULAR, z, 0.0, ray, iters

            # entering column: Bland's rule, lowest index first
            enter = -1
            for j in range(m + k):
                if phase == 2 and j >= m:
                    break  # artificials are barred after phase 1
                inb = False
                for pos in range(k):
                    if basis[pos] == j:
                        inb = True
                        break
                if inb:
                    continue
                if j < m:
                    red = b[j] if phase == 2 else 0.0
                    for r in range(k):
                        red -= pi[r] * A[j, r]
                else:
                    red = 1.0 - pi[j - m] * art_sign[j - m]
                if red < -tol:
                    enter = j
                    break

            if enter < 0:
                if phase == 1:
                    obj = 0.0
                    for pos in range(k):
                        if basis[pos] >= m:
                            obj += xb[pos]
                    if obj > 1e-8:
                        # dual infeasible; pi certifies A pi <= 0, c.pi > 0
                        nrm = 0.0
                        for r in range(k):
                            if abs(pi[r]) > nrm:
                                nrm = abs(pi[r])
                        if nrm <= 0.0:
                            return LP_SINGULAR, z, 0.0, ray, iters
                        for r in range(k):
                            ray[r] = pi[r] / nrm
                        return LP_UNBOUNDED, z, 0.0, ray, iters
                    phase = 2
                    iters += 1
                    continue
                value = 0.0
                for r in range(k):
                    z[r] = pi[r]
                    value += c[r] * pi[r]
                return LP_OPTIMAL, z, value, ray, iters

            if enter < m:
                for r in range(k):
                    col[r] = A[enter, r]
            else:
                for r in range(k):
                    col[r] = 0.0
                col[enter - m] = art_sign[enter - m]
            if not solve_square(B, col, d):
                return LP_SINGULAR, z, 0.0, ray, iters

            leave = -1
            if phase == 2:
                # drive any zero-level artificial out first so the
                # equality system stays satisfied exactly
                for pos in range(k):
                    if basis[pos] >= m and abs(d[pos]) > tol:
                        leave = pos
                        break
            if leave < 0:
                best = np.inf
                for pos in range(k):
                    if d[pos] > tol:
                        v = xb[pos]
                        if v < 0.0:
                            v = 0.0
                        ratio = v / d[pos]
                        if ratio < best:
                            best = ratio
                if not np.isfinite(best):
                    if phase == 1:
                        return LP_SINGULAR, z, 0.0, ray, iters
                    return LP_INFEASIBLE, z, 0.0, ray, iters
                bland = -1
                for pos in range(k):
                    if d[pos] > tol:
                        v = xb[pos]
                        if v < 0.0:
                            v = 0.0
                        ratio = v / d[pos]
                        if ratio <= best + 1e-12 and (bland < 0 or basis[pos] < bland):
                            bland = basis[pos]
                            leave = pos
            basis[leave] = enter
            iters += 1

    @jit
    def supinf_hull(xs, ys):
        # sup_beta min_i (ys[i] + beta * xs[i]) for points sorted by xs:
        # by LP duality this is the lower convex hull of {(xs, ys)}
        # evaluated at abscissa 0 (monotone-chain construction).
        # Returns (value, pos_a, pos_b, status); pos_a/pos_b are positions
        # of the active support points (equal when a vertex sits at 0) and
        # status 1 flags an unbounded supremum (0 outside the x-span).
        n = xs.shape[0]
        bx = np.empty(n)
        by = np.empty(n)
        bpos = np.empty(n, np.int64)
        top = 0
        for i in range(n):
            px = xs[i]
            py = ys[i]
            if top >= 1 and px == bx[top - 1]:
                if py >= by[top - 1]:
                    continue
                top -= 1
            while top >= 2:
                cross = (bx[top - 1] - bx[top - 2]) * (py - by[top - 2]) - (
                    by[top - 1] - by[top - 2]
                ) * (px - bx[top - 2])
                if cross <= 0.0:
                    top -= 1
                else:
                    break
            bx[top] = px
            by[top] = py
            bpos[top] = i
            top += 1
        if bx[0] > 0.0 or bx[top - 1] < 0.0:
            return 0.0, -1, -1, 1
        j = 0
        while bx[j] < 0.0:
            j += 1
        if bx[j] == 0.0:
            return by[j], bpos[j], bpos[j], 0
        t = (0.0 - bx[j - 1]) / (bx[j] - bx[j - 1])
        value = by[j - 1] + t * (by[j] - by[j - 1])
        return value, bpos[j - 1], bpos[j], 0

    @jit
    def q1_grid(u, w, marks, rhos):
        # Batched sup-inf values sup_b min_i [rho*(b*u_i + w_i) + marks_i]
        # over draws (rows) and a grid of bias weights rho.  marks rows are
        # ascending in the original index.  A positive rescaling of the
        # abscissa leaves the hull value at 0 unchanged, so u itself is
        # used as the hull x-coordinate for every rho > 0.
        # Returns (values, act, flags): act is the largest 1-based original
        # index active at the optimum, flags marks unbounded draws.
        nd, J = u.shape
        R = rhos.shape[0]
        vals = np.empty((R, nd))
        act = np.zeros((R, nd), np.int64)
        flags = np.zeros((R, nd), np.uint8)
        us = np.empty(J)
        ws = np.empty(J)
        ms = np.empty(J)
        ys = np.empty(J)
        for dd in range(nd):
            order = np.argsort(u[dd])
            for i in range(J):
                oi = order[i]
                us[i] = u[dd, oi]
                ws[i] = w[dd, oi]
                ms[i] = marks[dd, oi]
            for rr in range(R):
                rho = rhos[rr]
                if rho == 0.0:
                    vals[rr, dd] = marks[dd, 0]
                    act[rr, dd] = 1
                    continue
                for i in range(J):
                    ys[i] = rho * ws[i] + ms[i]
                value, pa, pb, st = supinf_hull(us, ys)
                if st != 0:
                    flags[rr, dd] = 1
                    vals[rr, dd] = np.nan
                    continue
                ia = order[pa]
                ib = order[pb]
                act[rr, dd] = (ia if ia > ib else ib) + 1
                vals[rr, dd] = value
        return vals, act, flags

    @jit
    def kth_neighbour_distance(xs_sorted, x0, kk):
        # exact k-th nearest-neighbour distance on a sorted 1-d grid
        n = xs_sorted.shape[0]
        pos = np.searchsorted(xs_sorted, x0)
        left = pos - 1
        right = pos
        dist = 0.0
        for _ in range(kk):
            dl = x0 - xs_sorted[left] if left >= 0 else np.inf
            dr = xs_sorted[right] - x0 if right < n else np.inf
            if dl <= dr:
                dist = dl
                left -= 1
            else:
                dist = dr
                right += 1
        return dist

    @jit
    def tilde_batch(X, Y, nodes, h, k_min, clamp, tol):
        # Local-LP frontier level at every node, lower-envelope data.
        # Windows expand to the k_min-th neighbour when the h-ball is too
        # thin.  Returns (values, status, h_eff); status 0 bounded,
        # 1 unbounded (value set to clamp), 3 numerical failure.
        n, p = X.shape
        G = nodes.shape[0]
        values = np.empty(G)
        status = np.empty(G, np.uint8)
        h_eff = np.empty(G)
        max_iter = 50 * (n + p)
        k = p + 1

        sorted_mode = p == 1
        xs = np.empty(n)
        ys = np.empty(n)
        if sorted_mode:
            order = np.argsort(X[:, 0])
            for i in range(n):
                xs[i] = X[order[i], 0]
                ys[i] = Y[order[i]]

        dist = np.empty(n)
        obj = np.zeros(k)
        obj[0] = 1.0
        for g in range(G):
            r = h
            if sorted_mode:
                x0 = nodes[g, 0]
                lo = np.searchsorted(xs, x0 - r)
                hi = np.searchsorted(xs, x0 + r, side="right")
                if hi - lo < k_min:
                    r = kth_neighbour_distance(xs, x0, k_min)
                    pad = r + 1e-9 * (abs(x0) + r + 1.0)
                    lo = np.searchsorted(xs, x0 - pad)
                    hi = np.searchsorted(xs, x0 + pad, side="right")
                mloc = hi - lo
                ymean = 0.0
                for i in range(lo, hi):
                    ymean += ys[i]
                ymean /= mloc
                yscale = 1e-12
                for i in range(lo, hi):
                    v = abs(ys[i] - ymean)
                    if v > yscale:
                        yscale = v
                xscale = r if r > 1e-300 else 1.0
                M = np.empty((mloc, 2))
                gvec = np.empty(mloc)
                for i in range(mloc):
                    M[i, 0] = 1.0
                    M[i, 1] = (xs[lo + i] - x0) / xscale
                    gvec[i] = (ys[lo + i] - ymean) / yscale
            else:
                for i in range(n):
                    s = 0.0
                    for cc in range(p):
                        df = X[i, cc] - nodes[g, cc]
                        s += df * df
                    dist[i] = np.sqrt(s)
                cnt = 0
                for i in range(n):
                    if dist[i] <= r:
                        cnt += 1
                if cnt < k_min:
                    r = np.partition(dist.copy(), k_min - 1)[k_min - 1]
                    r = r + 1e-9 * (r + 1.0)
                    cnt = 0
                    for i in range(n):
                        if dist[i] <= r:
                            cnt += 1
                mloc = cnt
                ymean = 0.0
                for i in range(n):
                    if dist[i] <= r:
                        ymean += Y[i]
                ymean /= mloc
                yscale = 1e-12
                for i in range(n):
                    if dist[i] <= r:
                        v = abs(Y[i] - ymean)
                        if v > yscale:
                            yscale = v
                xscale = r if r > 1e-300 else 1.0
                M = np.empty((mloc, k))
                gvec = np.empty(mloc)
                row = 0
                for i in range(n):
                    if dist[i] <= r:
                        M[row, 0] = 1.0
                        for cc in range(p):
                            M[row, cc + 1] = (X[i, cc] - nodes[g, cc]) / xscale
                        gvec[row] = (Y[i] - ymean) / yscale
                        row += 1

            st, zsol, val, rayv, it = simplex_max(M, gvec, obj, True, tol, max_iter)
            h_eff[g] = r
            if st == LP_OPTIMAL:
                values[g] = ymean + yscale * zsol[0]
                status[g] = TILDE_BOUNDED
            elif st == LP_UNBOUNDED:
                values[g] = clamp
                status[g] = TILDE_UNBOUNDED
            else:
                values[g] = np.nan
                status[g] = TILDE_FAILED
        return values, status, h_eff

    return SimpleNamespace(
        jit_enabled=use_jit,
        solve_square=solve_square,
        simplex_max=simplex_max,
        supinf_hull=supinf_hull,
        q1_grid=q1_grid,
        kth_neighbour_distance=kth_neighbour_distance,
        tilde_batch=tilde_batch,
    )


kernels = build_kernels(USE_NUMBA)

simplex_max = kernels.simplex_max
supinf_hull = kernels.supinf_hull
q1_grid = kernels.q1_grid
kth_neighbour_distance = kernels.kth_neighbour_distance
tilde_batch = kernels.tilde_batch
