"""Pure numpy versions of the kernels in ``_kernels.pyx``.

Signatures and return values match the compiled module exactly; only
speed differs.  Results agree with the compiled kernels to rounding (the
pairwise drift is summed in a different order).
"""

from __future__ import annotations

import math

import numpy as np

DONE, NEED_NOISE, FULL, COLLISION = 0, 1, 2, 3


def _drift(v: np.ndarray, lam: np.ndarray, theta: float) -> np.ndarray:
    diff = v[:, None] - v[None, :]
    np.fill_diagonal(diff, np.inf)
    coef = 2.0 * (lam[:, None] + lam[None, :])
    return np.sum(coef / diff, axis=1) - theta * v


def drift_into(v, lam, theta, out):
    out[:] = _drift(np.asarray(v), np.asarray(lam), theta)


def _step_size(v, lam, dt_base, c_gap, theta):
    dt = dt_base
    if v.size > 1:
        coef = 2.0 * (lam[1:] + lam[:-1])
        gap = np.diff(v)
        mask = coef > 0
        if mask.any():
            dt = min(dt, c_gap * float(np.min(gap[mask] ** 2 / coef[mask])))
    if theta > 0:
        dt = min(dt, c_gap / theta)
    return dt


# a proposal may not shrink any gap below this fraction of its old value
SHRINK = 0.1


def _first_violation(v, old, gap_floor):
    if v.size == 1:
        return -1 if math.isfinite(v[0]) else 0
    floor = np.maximum(SHRINK * np.diff(old), gap_floor)
    bad = np.nonzero(~(np.diff(v) >= floor))[0]
    return int(bad[0]) if bad.size else -1


def em_advance(v, t, t_stop, lam, sig, theta, dt_base, c_gap, gap_floor,
               noise, pos, use_noise, times_out, vals_out, nrec, max_halvings):
    lam = np.asarray(lam)
    sig = np.asarray(sig)
    B = noise.shape[0]
    cap = times_out.shape[0]
    record = cap > 0
    status, bad = DONE, -1
    while t < t_stop:
        if record and nrec >= cap:
            status = FULL
            break
        dt = _step_size(v, lam, dt_base, c_gap, theta)
        rem = t_stop - t
        last = dt >= rem
        if last:
            dt = rem
        b = _drift(v, lam, theta)
        start = pos
        halvings = 0
        accepted = False
        while True:
            if use_noise:
                if pos >= B:
                    status = NEED_NOISE
                    pos = start
                    break
                vn = v + b * dt + sig * math.sqrt(dt) * noise[pos]
                pos += 1
            else:
                vn = v + b * dt
            bad = _first_violation(vn, v, gap_floor)
            if bad < 0:
                accepted = True
                break
            halvings += 1
            if halvings > max_halvings:
                status = COLLISION
                break
            dt *= 0.5
            last = False
        if not accepted:
            break
        t_new = t_stop if last else t + dt
        if t_new <= t:
            status = COLLISION
            break
        t = t_new
        v[:] = vn
        if record:
            times_out[nrec] = t
            vals_out[nrec] = v
            nrec += 1
    return t, pos, nrec, status, bad


def _field(g, s, a, v0, slope, lam):
    return complex(np.sum(2.0 * lam / (g - (v0 + slope * (s - a)))))


def _dist(g, s, a, v0, slope):
    return float(np.min(np.abs(g - (v0 + slope * (s - a)))))


def _rk4(g, s, h, a, v0, slope, lam):
    k1 = _field(g, s, a, v0, slope, lam)
    k2 = _field(g + 0.5 * h * k1, s + 0.5 * h, a, v0, slope, lam)
    k3 = _field(g + 0.5 * h * k2, s + 0.5 * h, a, v0, slope, lam)
    k4 = _field(g + h * k3, s + h, a, v0, slope, lam)
    return g + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _ok(g):
    return g.imag > 0.0 and math.isfinite(g.real) and math.isfinite(g.imag)


def loewner_forward(times, vals, lam, z, t_end, eps_swallow, c_step, h_max, out, death):
    times = np.asarray(times)
    vals = np.asarray(vals)
    lam = np.asarray(lam)
    T = times.shape[0]
    for p in range(len(z)):
        g = complex(z[p])
        dead = False
        death[p] = np.nan
        i = 0
        s = 0.0
        while i < T - 1 and times[i] < t_end and not dead:
            a = times[i]
            L = times[i + 1] - a
            b = min(times[i + 1], t_end)
            i += 1
            if L <= 0.0:
                continue
            v0 = vals[i - 1]
            slope = (vals[i] - v0) / L
            s = a
            while s < b:
                d = _dist(g, s, a, v0, slope)
                if d < eps_swallow:
                    dead = True
                    break
                h = min(c_step * d * d, h_max, b - s)
                while True:
                    if s + h == s:
                        dead = True
                        break
                    gn = _rk4(g, s, h, a, v0, slope, lam)
                    if _ok(gn):
                        break
                    h *= 0.5
                if dead:
                    break
                g = gn
                s = b if h == b - s else s + h
            if dead:
                death[p] = s
        out[p] = g


def loewner_backward(times, vals, lam, w, t_start, c_step, h_max, out, fail_s):
    times = np.asarray(times)
    vals = np.asarray(vals)
    lam = np.asarray(lam)
    T = times.shape[0]
    i_top = 0
    while i_top < T - 2 and times[i_top + 1] < t_start:
        i_top += 1
    for p in range(len(w)):
        g = complex(w[p])
        failed = False
        fail_s[p] = np.nan
        i = i_top + 1
        while i > 0 and not failed:
            a = times[i - 1]
            L = times[i] - a
            b = min(times[i], t_start)
            i -= 1
            if L <= 0.0 or b <= a:
                continue
            v0 = vals[i]
            slope = (vals[i + 1] - v0) / L
            s = b
            while s > a:
                d = _dist(g, s, a, v0, slope)
                h = min(c_step * d * d, h_max, s - a)
                while True:
                    if s - h == s:
                        failed = True
                        break
                    gn = _rk4(g, s, -h, a, v0, slope, lam)
                    if _ok(gn):
                        break
                    h *= 0.5
                if failed:
                    fail_s[p] = t_start - s
                    break
                g = gn
                s = a if h == s - a else s - h
        out[p] = g
