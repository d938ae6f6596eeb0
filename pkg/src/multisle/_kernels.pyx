# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops.

* ``drift_into``       -- pairwise repulsive drift of the driving functions
* ``em_advance``       -- gap-adaptive Euler-Maruyama stepping
* ``loewner_forward``  -- multi-slit Loewner flow of many points
* ``loewner_backward`` -- the time-reversed flow (tip tracing)

``multisle._fallback`` mirrors every function with the same signature and
return values.
"""

from libc.math cimport sqrt, INFINITY, NAN
import numpy as np

cdef enum:
    DONE = 0
    NEED_NOISE = 1
    FULL = 2
    COLLISION = 3


cdef void _drift(const double* v, const double* lam, double theta,
                 Py_ssize_t n, double* out) noexcept nogil:
    cdef Py_ssize_t k, j
    cdef double vk, lk, acc, r
    for k in range(n):
        out[k] = -theta * v[k]
    for k in range(n):
        vk = v[k]
        lk = lam[k]
        acc = 0.0
        for j in range(k + 1, n):
            r = 2.0 * (lk + lam[j]) / (vk - v[j])
            acc += r
            out[j] -= r
        out[k] += acc


def drift_into(const double[::1] v, const double[::1] lam, double theta, double[::1] out):
    """Write ``sum_{j!=k} 2(l_k+l_j)/(v_k-v_j) - theta v_k`` into ``out``."""
    with nogil:
        _drift(&v[0], &lam[0], theta, v.shape[0], &out[0])


cdef inline double _step_size(const double* v, const double* lam, Py_ssize_t n,
                              double dt_base, double c_gap, double theta) noexcept nogil:
    cdef Py_ssize_t k
    cdef double q, qmin = INFINITY, gap, coef, dt
    for k in range(n - 1):
        gap = v[k + 1] - v[k]
        coef = 2.0 * (lam[k] + lam[k + 1])
        if coef > 0.0:
            q = gap * gap / coef
            if q < qmin:
                qmin = q
    dt = dt_base
    if c_gap * qmin < dt:
        dt = c_gap * qmin
    if theta > 0.0 and c_gap / theta < dt:
        dt = c_gap / theta
    return dt


# a proposal may not shrink any gap below this fraction of its old value
DEF SHRINK = 0.1


cdef inline Py_ssize_t _first_violation(const double* v, const double* old, Py_ssize_t n,
                                        double gap_floor) noexcept nogil:
    cdef Py_ssize_t k
    cdef double floor
    if n == 1:
        if not (v[0] - v[0] == 0.0):
            return 0
        return -1
    for k in range(n - 1):
        floor = SHRINK * (old[k + 1] - old[k])
        if floor < gap_floor:
            floor = gap_floor
        # written so that NaN also counts as a violation
        if not (v[k + 1] - v[k] >= floor):
            return k
    return -1


def em_advance(double[::1] v, double t, double t_stop,
               const double[::1] lam, const double[::1] sig, double theta,
               double dt_base, double c_gap, double gap_floor,
               const double[:, ::1] noise, Py_ssize_t pos, bint use_noise,
               double[::1] times_out, double[:, ::1] vals_out, Py_ssize_t nrec,
               int max_halvings):
    """Advance the particle system in place from ``t`` towards ``t_stop``.

    Returns ``(t, pos, nrec, status, bad_index)``.  On ``NEED_NOISE`` the
    unfinished step is rolled back and ``pos`` points at its first noise
    row, so results do not depend on how the noise is chunked.
    """
    cdef Py_ssize_t n = v.shape[0]
    cdef Py_ssize_t B = noise.shape[0]
    cdef Py_ssize_t cap = times_out.shape[0]
    cdef bint record = cap > 0
    cdef double[::1] b = np.empty(n)
    cdef double[::1] vn = np.empty(n)
    cdef Py_ssize_t k, start, bad = -1
    cdef int status = DONE, halvings
    cdef double dt, rem, sq, t_new
    cdef bint last, accepted
    with nogil:
        while t < t_stop:
            if record and nrec >= cap:
                status = FULL
                break
            dt = _step_size(&v[0], &lam[0], n, dt_base, c_gap, theta)
            rem = t_stop - t
            last = dt >= rem
            if last:
                dt = rem
            _drift(&v[0], &lam[0], theta, n, &b[0])
            start = pos
            halvings = 0
            accepted = False
            while True:
                if use_noise:
                    if pos >= B:
                        status = NEED_NOISE
                        pos = start
                        break
                    sq = sqrt(dt)
                    for k in range(n):
                        vn[k] = v[k] + b[k] * dt + sig[k] * sq * noise[pos, k]
                    pos += 1
                else:
                    for k in range(n):
                        vn[k] = v[k] + b[k] * dt
                bad = _first_violation(&vn[0], &v[0], n, gap_floor)
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
            for k in range(n):
                v[k] = vn[k]
            if record:
                times_out[nrec] = t
                for k in range(n):
                    vals_out[nrec, k] = v[k]
                nrec += 1
    return t, pos, nrec, status, bad


cdef inline double complex _field(double complex g, double s, double a,
                                  const double* v0, const double* slope,
                                  const double* lam, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t k
    cdef double complex acc = 0.0
    cdef double ds = s - a
    for k in range(n):
        acc = acc + 2.0 * lam[k] / (g - (v0[k] + slope[k] * ds))
    return acc


cdef inline double _dist(double complex g, double s, double a, const double* v0,
                         const double* slope, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t k
    cdef double dmin = INFINITY, dx, dy, d
    dy = g.imag
    for k in range(n):
        dx = g.real - (v0[k] + slope[k] * (s - a))
        d = dx * dx + dy * dy
        if d < dmin:
            dmin = d
    return sqrt(dmin)


cdef inline double complex _rk4(double complex g, double s, double h, double a,
                                const double* v0, const double* slope,
                                const double* lam, Py_ssize_t n) noexcept nogil:
    cdef double complex k1, k2, k3, k4
    k1 = _field(g, s, a, v0, slope, lam, n)
    k2 = _field(g + 0.5 * h * k1, s + 0.5 * h, a, v0, slope, lam, n)
    k3 = _field(g + 0.5 * h * k2, s + 0.5 * h, a, v0, slope, lam, n)
    k4 = _field(g + h * k3, s + h, a, v0, slope, lam, n)
    return g + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


cdef inline bint _ok(double complex g) noexcept nogil:
    return g.imag > 0.0 and (g.real - g.real == 0.0) and (g.imag - g.imag == 0.0)


def loewner_forward(const double[::1] times, const double[:, ::1] vals,
                    const double[::1] lam, const double complex[::1] z,
                    double t_end, double eps_swallow, double c_step, double h_max,
                    double complex[::1] out, double[::1] death):
    """Integrate ``dg/ds = sum_k 2 lam_k / (g - V_k(s))`` for every ``z``.

    ``V`` is the piecewise-linear interpolant of ``vals`` over ``times``.
    ``death[p]`` is NaN for points alive at ``t_end``, otherwise the
    swallowing time; ``out[p]`` then holds ``g`` at that time.
    """
    cdef Py_ssize_t T = times.shape[0], n = vals.shape[1], P = z.shape[0]
    cdef double[::1] slope = np.empty(n)
    cdef Py_ssize_t p, i, k
    cdef double a, b, L, s, h, d
    cdef double complex g, gn
    cdef bint dead
    with nogil:
        for p in range(P):
            g = z[p]
            dead = False
            death[p] = NAN
            i = 0
            while i < T - 1 and times[i] < t_end and not dead:
                a = times[i]
                L = times[i + 1] - a
                b = times[i + 1] if times[i + 1] < t_end else t_end
                i += 1
                if L <= 0.0:
                    continue
                for k in range(n):
                    slope[k] = (vals[i, k] - vals[i - 1, k]) / L
                s = a
                while s < b:
                    d = _dist(g, s, a, &vals[i - 1, 0], &slope[0], n)
                    if d < eps_swallow:
                        dead = True
                        break
                    h = c_step * d * d
                    if h > h_max:
                        h = h_max
                    if h > b - s:
                        h = b - s
                    while True:
                        if s + h == s:
                            dead = True
                            break
                        gn = _rk4(g, s, h, a, &vals[i - 1, 0], &slope[0], &lam[0], n)
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


def loewner_backward(const double[::1] times, const double[:, ::1] vals,
                     const double[::1] lam, const double complex[::1] w,
                     double t_start, double c_step, double h_max,
                     double complex[::1] out, double[::1] fail_s):
    """Run the Loewner field backwards in time from ``t_start`` to 0.

    Equivalent to ``dz/ds = -sum_j 2 lam_j / (z - V_j(t_start - s))``.
    ``fail_s[p]`` is NaN on success, else the reversed time ``s`` at which
    the path left the upper half-plane.
    """
    cdef Py_ssize_t T = times.shape[0], n = vals.shape[1], P = w.shape[0]
    cdef double[::1] slope = np.empty(n)
    cdef Py_ssize_t p, i, k, i_top
    cdef double a, b, L, s, h, d
    cdef double complex g, gn
    cdef bint failed
    i_top = 0
    while i_top < T - 2 and times[i_top + 1] < t_start:
        i_top += 1
    with nogil:
        for p in range(P):
            g = w[p]
            failed = False
            fail_s[p] = NAN
            i = i_top + 1
            while i > 0 and not failed:
                a = times[i - 1]
                L = times[i] - a
                b = times[i] if times[i] < t_start else t_start
                i -= 1
                if L <= 0.0 or b <= a:
                    continue
                for k in range(n):
                    slope[k] = (vals[i + 1, k] - vals[i, k]) / L
                s = b
                while s > a:
                    d = _dist(g, s, a, &vals[i, 0], &slope[0], n)
                    h = c_step * d * d
                    if h > h_max:
                        h = h_max
                    if h > s - a:
                        h = s - a
                    while True:
                        if s - h == s:
                            failed = True
                            break
                        gn = _rk4(g, s, -h, a, &vals[i, 0], &slope[0], &lam[0], n)
                        if _ok(gn):
                            break
                        h *= 0.5
                    if failed:
                        fail_s[p] = t_start - s
                        break
                    g = gn
                    s = a if h == s - a else s - h
            out[p] = g
