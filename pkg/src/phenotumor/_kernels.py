"""Compiled 1D kernels for the time loop.

``prepare_1d``, ``advance_1d`` and ``integrands_1d`` mirror numpy routines in
``solver`` and ``diagnostics``; ``segment_linear_1d`` chains them for many
steps when the growth rate is the linear-inhibition family, avoiding Python
overhead per step. The test suite checks all paths against each other.
"""
import math

import numpy as np
from numba import njit

# order of the values written by integrands_1d (weighted_grad4 values follow)
INTEGRAND_NAMES = (
    "grad_p_l2",
    "grad_p_l4",
    "entropy_dissipation",
    "ab_weighted",
    "hessian_weighted",
    "laplacian_weighted",
    "saturation_residual",
    "complementarity_residual",
)
N_FIXED = len(INTEGRAND_NAMES)

# layout of the monitor vector shared with solver.run
MON_MASS0, MON_GRONWALL, MON_SUP, MON_MINRAW, MON_FLUSHED, MON_DRIFT, MON_MINDT, MON_MAXDT, MON_CONTACT = range(9)
N_MON = 9

STATUS_OK, STATUS_NONFINITE, STATUS_NEGATIVE, STATUS_CONTACT = range(4)


@njit(cache=True)
def prepare_1d(n, gamma, rho, p):
    """Fill rho and p; return (max p, max |p jump| over faces, sum rho, max rho)."""
    ny, nx = n.shape
    for i in range(nx):
        rho[i] = n[0, i]
    for j in range(1, ny):
        for i in range(nx):
            rho[i] += n[j, i]
    pmax = 0.0
    total = 0.0
    rmax = 0.0
    for i in range(nx):
        r = rho[i] / ny
        rho[i] = r
        if r > 0.0:
            p[i] = r ** gamma
        else:
            p[i] = 0.0
        if p[i] > pmax:
            pmax = p[i]
        if r > rmax:
            rmax = r
        total += r
    gmax = abs(p[0])
    for i in range(nx - 1):
        d = abs(p[i + 1] - p[i])
        if d > gmax:
            gmax = d
    if abs(p[nx - 1]) > gmax:
        gmax = abs(p[nx - 1])
    return pmax, gmax, total, rmax


@njit(cache=True)
def advance_1d(n, p, react, dt, h, eps, flush_tol, out):
    """out = n + dt * (-div(upwind n * u) + eps Lap n + react), u = -D_h p.

    Values in [-flush_tol, 0) are set to zero. Returns
    (min raw value, layer, cell, number flushed, nonfinite flag).
    """
    ny, nx = n.shape
    h2 = h * h
    vmin = np.inf
    jmin = -1
    imin = -1
    nflush = 0
    bad = False
    for j in range(ny):
        # face left of cell 0: ghost pressure and density are zero
        u = -(p[0] - 0.0) / h
        if u > 0.0:
            f_left = 0.0
        else:
            f_left = n[j, 0] * u
        for i in range(nx):
            if i + 1 < nx:
                pr = p[i + 1]
                nr = n[j, i + 1]
            else:
                pr = 0.0
                nr = 0.0
            u = -(pr - p[i]) / h
            if u > 0.0:
                f_right = n[j, i] * u
            else:
                f_right = nr * u
            if i > 0:
                nl = n[j, i - 1]
            else:
                nl = 0.0
            rhs = -(f_right - f_left) / h
            if eps != 0.0:
                rhs += eps * ((nr - 2.0 * n[j, i]) + nl) / h2
            rhs += react[j, i]
            val = n[j, i] + dt * rhs
            if not np.isfinite(val):
                bad = True
            if val < vmin:
                vmin = val
                jmin = j
                imin = i
            if val < 0.0 and val >= -flush_tol:
                val = 0.0
                nflush += 1
            out[j, i] = val
            f_left = f_right
    return vmin, jmin, imin, nflush, bad


@njit(cache=True)
def integrands_1d(rho, p, growth, h, gamma, p_floor, alphas, out):
    """Per-step diagnostic integrands, ordered as INTEGRAND_NAMES then one per alpha."""
    nx = p.shape[0]
    for k in range(out.shape[0]):
        out[k] = 0.0
    na = alphas.shape[0]
    w_ab = 1.0 - 1.0 / gamma
    ql = 0.0
    for f in range(nx + 1):
        pl = p[f - 1] if f > 0 else 0.0
        pr = p[f] if f < nx else 0.0
        # rho^((gamma+1)/2) = sqrt(rho * p)
        qr = math.sqrt(rho[f] * pr) if f < nx else 0.0
        d = (pr - pl) / h
        dq = (qr - ql) / h
        ql = qr
        if d == 0.0 and dq == 0.0:
            continue
        d2 = d * d
        d4 = d2 * d2
        out[0] += d2
        out[1] += d4
        out[2] += dq * dq
        pbar = 0.5 * (pl + pr)
        if pbar < p_floor:
            pbar = p_floor
        lp = math.log(pbar)
        out[3] += d2 * math.exp(-w_ab * lp)
        for a in range(na):
            out[N_FIXED + a] += d4 * math.exp(-(1.0 - alphas[a]) * lp)
    h2 = h * h
    for i in range(nx):
        pc = p[i]
        if pc == 0.0:
            continue
        pl = p[i - 1] if i > 0 else 0.0
        pr = p[i + 1] if i + 1 < nx else 0.0
        lap = ((pr - 2.0 * pc) + pl) / h2
        out[4] += pc * lap * lap
        mean_rate = growth[i] / rho[i]
        out[5] += pc * (lap + mean_rate) ** 2
        out[6] += abs(pc * (1.0 - rho[i]))
        out[7] += abs(pc * (lap + growth[i]))
    for k in range(out.shape[0]):
        out[k] *= h
    out[2] *= 4.0 * gamma / (gamma + 1.0) ** 2
    out[3] /= gamma


@njit(cache=True)
def dt_bound(h, dim, gamma, eps, c_cfl, pmax, max_jump, rate):
    diff = 2.0 * dim * (gamma * pmax + eps)
    dt_diff = h * h / diff if diff > 0.0 else np.inf
    dt_adv = h / (max_jump / h + 1e-30)
    dt_react = 1.0 / (2.0 * rate) if rate > 0.0 else np.inf
    dt_press = 1.0 / (gamma * rate) if rate > 0.0 else np.inf
    return c_cfl * min(dt_diff, dt_adv, dt_react, dt_press)


@njit(cache=True)
def segment_linear_1d(n, buf, rho, p, react, growth, g, p_M, gamma, eps, h, c_cfl, rate_bound,
                      t, t_target, observe_first, flush_tol, contact_tol, contact_mode,
                      p_floor, alphas, win_a, win_b, vals, integ, win, mon, err):
    """Step from t to t_target with R(y_j, p) = g_j (1 - p/p_M).

    ``n`` and ``buf`` are ping-pong buffers; returns (t, steps, status, which)
    where ``which`` tells whether the current field is in n (0) or buf (1).
    contact_mode: 0 skip, 1 abort, 2 record first contact time.
    """
    ny, nx = n.shape
    cur = n
    nxt = buf
    which = 0
    steps = 0
    first = observe_first
    while True:
        pmax, jump, rsum, rmax = prepare_1d(cur, gamma, rho, p)
        if first:
            mass = h * rsum
            if rmax > mon[MON_SUP]:
                mon[MON_SUP] = rmax
            if mon[MON_MASS0] > 0.0:
                ratio = mass / (mon[MON_MASS0] * math.exp(rate_bound * t))
                if ratio > mon[MON_GRONWALL]:
                    mon[MON_GRONWALL] = ratio
                drift = abs(mass - mon[MON_MASS0]) / mon[MON_MASS0]
                if drift > mon[MON_DRIFT]:
                    mon[MON_DRIFT] = drift
            if contact_mode != 0:
                edge = max(rho[0], rho[nx - 1])
                if edge > contact_tol:
                    if contact_mode == 1:
                        err[0] = t
                        err[1] = edge
                        return t, steps, STATUS_CONTACT, which
                    if mon[MON_CONTACT] < 0.0:
                        mon[MON_CONTACT] = t
        first = True
        if t >= t_target:
            return t, steps, STATUS_OK, which
        rmax_rate = 0.0
        for i in range(nx):
            growth[i] = 0.0
        for j in range(ny):
            for i in range(nx):
                r = g[j] * (1.0 - p[i] / p_M)
                if abs(r) > rmax_rate:
                    rmax_rate = abs(r)
                react[j, i] = cur[j, i] * r
        for j in range(ny):
            for i in range(nx):
                growth[i] += react[j, i]
        for i in range(nx):
            growth[i] = growth[i] / ny
        rate = max(rate_bound, rmax_rate)
        dt = dt_bound(h, 1, gamma, eps, c_cfl, pmax, jump, rate)
        hit = not dt < t_target - t
        if hit:
            dt = t_target - t
        integrands_1d(rho, p, growth, h, gamma, p_floor, alphas, vals)
        lo = max(t, win_a)
        hi = min(t + dt, win_b)
        for k in range(vals.shape[0]):
            integ[k] += vals[k] * dt
            if hi > lo:
                win[k] += vals[k] * (hi - lo)
        vmin, jmin, imin, nflush, bad = advance_1d(cur, p, react, dt, h, eps, flush_tol, nxt)
        t = t_target if hit else t + dt
        steps += 1
        if bad:
            err[0] = t
            return t, steps, STATUS_NONFINITE, which
        if vmin < -flush_tol:
            err[0] = t
            err[1] = vmin
            err[2] = jmin
            err[3] = imin
            return t, steps, STATUS_NEGATIVE, which
        if vmin < mon[MON_MINRAW]:
            mon[MON_MINRAW] = vmin
        mon[MON_FLUSHED] += nflush
        if dt < mon[MON_MINDT]:
            mon[MON_MINDT] = dt
        if dt > mon[MON_MAXDT]:
            mon[MON_MAXDT] = dt
        tmp = cur
        cur = nxt
        nxt = tmp
        which = 1 - which
