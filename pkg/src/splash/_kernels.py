"""Compiled inner loops for the coordinate descent solvers.

Falls back to plain Python when numba is not installed (same results,
much slower).
"""

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

# A group whose (soft-thresholded) gradient norm is within this relative
# margin of its threshold is set to zero, so that lam = lambda_max gives an
# exactly zero solution despite rounding in the norm.
ZERO_SLACK = 1e-12


@njit(cache=True)
def _soft(x, t):
    if x > t:
        return x - t
    if x < -t:
        return x + t
    return 0.0


@njit(cache=True)
def _smooth_value(x, z, hd, ho, partner, lo, hi):
    # x'Hx + z'x with H given by diagonal hd and one optional partner entry ho.
    val = 0.0
    for j in range(lo, hi):
        hx = hd[j] * x[j - lo]
        if partner[j] >= 0:
            hx += ho[j] * x[partner[j] - lo]
        val += x[j - lo] * hx + z[j - lo] * x[j - lo]
    return val


@njit(cache=True)
def _sgl_prox_inplace(u, l1, l2):
    ss = 0.0
    for j in range(u.shape[0]):
        u[j] = _soft(u[j], l1)
        ss += u[j] * u[j]
    nu = np.sqrt(ss)
    if nu <= l2 * (1.0 + ZERO_SLACK):
        u[:] = 0.0
    else:
        u *= 1.0 - l2 / nu


@njit(cache=True)
def _group_solve(x, z, hd, ho, partner, lo, hi, l1, l2, lips, tol, max_inner):
    """Accelerated prox-gradient on ``x'Hx + z'x + l1|x|_1 + l2|x|_2``; ``x`` updated in place."""
    m = hi - lo
    y = x.copy()
    xn = np.empty(m)
    grad = np.empty(m)
    step = 1.0 / lips
    t = 1.0
    for _ in range(max_inner):
        for j in range(lo, hi):
            hy = hd[j] * y[j - lo]
            if partner[j] >= 0:
                hy += ho[j] * y[partner[j] - lo]
            grad[j - lo] = 2.0 * hy + z[j - lo]
        fy = _smooth_value(y, z, hd, ho, partner, lo, hi)
        while True:
            for q in range(m):
                xn[q] = y[q] - step * grad[q]
            _sgl_prox_inplace(xn, step * l1, step * l2)
            lin = 0.0
            dd = 0.0
            for q in range(m):
                d = xn[q] - y[q]
                lin += grad[q] * d
                dd += d * d
            fx = _smooth_value(xn, z, hd, ho, partner, lo, hi)
            if fx <= fy + lin + 0.5 / step * dd + 1e-12 * abs(fy) or step < 1e-30:
                break
            step *= 0.5
        tn = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        restart = 0.0
        change = 0.0
        for q in range(m):
            restart += (y[q] - xn[q]) * (xn[q] - x[q])
            change = max(change, abs(xn[q] - x[q]))
        if restart > 0.0:
            for q in range(m):
                y[q] = xn[q]
            tn = 1.0
        else:
            mom = (t - 1.0) / tn
            for q in range(m):
                y[q] = xn[q] + mom * (xn[q] - x[q])
        for q in range(m):
            x[q] = xn[q]
        t = tn
        if change <= tol:
            break


@njit(cache=True)
def bcd_sweep(c, resid, lam, alpha, grp_ptr, members, weights, hd, ho, partner, lips,
              eq_of, eq_start, eq_len, gram_flat, gram_ptr, inner_tol, max_inner):
    """One pass of block coordinate descent over all groups.

    ``resid`` holds ``G c - V' sigma`` and is kept in sync. ``hd``/``ho``/
    ``partner`` are indexed by slot in ``members`` and describe each group's
    own Hessian block, which couples at most two members (same equation).
    Returns the largest absolute coefficient change.
    """
    l1 = lam * alpha
    biggest = 0.0
    n_groups = grp_ptr.shape[0] - 1
    for k in range(n_groups):
        lo = grp_ptr[k]
        hi = grp_ptr[k + 1]
        m = hi - lo
        cg = np.empty(m)
        z = np.empty(m)
        for j in range(lo, hi):
            cg[j - lo] = c[members[j]]
        ss = 0.0
        for j in range(lo, hi):
            hc = hd[j] * cg[j - lo]
            if partner[j] >= 0:
                hc += ho[j] * cg[partner[j] - lo]
            z[j - lo] = 2.0 * (resid[members[j]] - hc)
            s = _soft(z[j - lo], l1)
            ss += s * s
        l2 = lam * (1.0 - alpha) * weights[k]
        new = cg.copy()
        if np.sqrt(ss) <= l2 * (1.0 + ZERO_SLACK):
            new[:] = 0.0
        elif lips[k] <= 0.0:
            for q in range(m):
                new[q] = -z[q]
            _sgl_prox_inplace(new, l1, l2)
        else:
            _group_solve(new, z, hd, ho, partner, lo, hi, l1, l2, lips[k], inner_tol, max_inner)
        for j in range(lo, hi):
            d = new[j - lo] - cg[j - lo]
            if d != 0.0:
                pos = members[j]
                c[pos] = new[j - lo]
                e = eq_of[pos]
                s0 = eq_start[e]
                ne = eq_len[e]
                loc = pos - s0
                base = gram_ptr[e]
                for q in range(ne):
                    resid[s0 + q] += gram_flat[base + q * ne + loc] * d
                if abs(d) > biggest:
                    biggest = abs(d)
    return biggest


@njit(cache=True)
def block_matvec(c, eq_start, eq_len, gram_flat, gram_ptr):
    """``G c`` for the block-diagonal Gram matrix."""
    out = np.zeros_like(c)
    for e in range(eq_start.shape[0]):
        s0 = eq_start[e]
        ne = eq_len[e]
        base = gram_ptr[e]
        for a in range(ne):
            acc = 0.0
            for b in range(ne):
                acc += gram_flat[base + a * ne + b] * c[s0 + b]
            out[s0 + a] = acc
    return out


@njit(cache=True)
def lasso_cd(gram, xty, lam, beta, tol, max_iter):
    """Coordinate descent for ``b'Gb - 2 xty'b + lam |b|_1``; ``beta`` updated in place.

    Stops when the KKT residual relative to ``max(1, |2 xty|_inf)`` is at
    most ``tol``. Returns (sweeps, relative KKT residual); sweeps is -1
    when ``max_iter`` was hit.
    """
    p = xty.shape[0]
    grad_half = gram @ beta - xty
    scale = 1.0
    for j in range(p):
        scale = max(scale, 2.0 * abs(xty[j]))
    kkt = np.inf
    for it in range(max_iter):
        for j in range(p):
            gjj = gram[j, j]
            if gjj <= 0.0:
                continue
            old = beta[j]
            rho = gjj * old - grad_half[j]
            new = _soft(rho, 0.5 * lam) / gjj
            d = new - old
            if d != 0.0:
                beta[j] = new
                for q in range(p):
                    grad_half[q] += gram[q, j] * d
        kkt = 0.0
        for j in range(p):
            g = 2.0 * grad_half[j]
            if beta[j] > 0:
                v = abs(g + lam)
            elif beta[j] < 0:
                v = abs(g - lam)
            else:
                v = max(abs(g) - lam, 0.0)
            kkt = max(kkt, v)
        kkt /= scale
        if kkt <= tol:
            return it + 1, kkt
    return -1, kkt
