"""Hot numeric kernels: two-electron Coulomb-Stark forces and a DOP853 driver.

State layout is ``y = (x1, y1, z1, x2, y2, z2, px1, py1, pz1, px2, py2, pz2)``.
Everything here takes plain floats/arrays so it compiles under numba.
"""
import numpy as np
from scipy.integrate._ivp import dop853_coefficients as _dop

from ._accel import jit

_A = np.ascontiguousarray(_dop.A[:_dop.N_STAGES, :_dop.N_STAGES], dtype=np.float64)
_B = np.ascontiguousarray(_dop.B, dtype=np.float64)
_C = np.ascontiguousarray(_dop.C[:_dop.N_STAGES], dtype=np.float64)
_E3 = np.ascontiguousarray(_dop.E3, dtype=np.float64)
_E5 = np.ascontiguousarray(_dop.E5, dtype=np.float64)
_NS = _dop.N_STAGES

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0

# integrate() status codes
RUNNING = 0          # max_time reached
DOUBLE = 1           # both out, neither returned
BOTH_OUT_RETURN = 2  # both out, at least one returned first
NOT_DOUBLE = 3       # early stop: a return was seen
COLLISION = 4
DRIFT = 5
STEP_FAILURE = 6


@jit
def potential(q, Z, F):
    x1, y1, z1, x2, y2, z2 = q[0], q[1], q[2], q[3], q[4], q[5]
    r1 = np.sqrt(x1 * x1 + y1 * y1 + z1 * z1)
    r2 = np.sqrt(x2 * x2 + y2 * y2 + z2 * z2)
    dx, dy, dz = x1 - x2, y1 - y2, z1 - z2
    r12 = np.sqrt(dx * dx + dy * dy + dz * dz)
    return -Z / r1 - Z / r2 + 1.0 / r12 - F * (z1 + z2)


@jit
def gradient(q, Z, F, out):
    x1, y1, z1, x2, y2, z2 = q[0], q[1], q[2], q[3], q[4], q[5]
    r1s = x1 * x1 + y1 * y1 + z1 * z1
    r2s = x2 * x2 + y2 * y2 + z2 * z2
    dx, dy, dz = x1 - x2, y1 - y2, z1 - z2
    ds = dx * dx + dy * dy + dz * dz
    c1 = Z / (r1s * np.sqrt(r1s))
    c2 = Z / (r2s * np.sqrt(r2s))
    c12 = 1.0 / (ds * np.sqrt(ds))
    out[0] = c1 * x1 - c12 * dx
    out[1] = c1 * y1 - c12 * dy
    out[2] = c1 * z1 - c12 * dz - F
    out[3] = c2 * x2 + c12 * dx
    out[4] = c2 * y2 + c12 * dy
    out[5] = c2 * z2 + c12 * dz - F


@jit
def _coulomb_block(r, k, out, i0, j0, sign):
    # sign * k * d^2(1/|r|)/dr dr^T added into out[i0:i0+3, j0:j0+3]
    rs = r[0] * r[0] + r[1] * r[1] + r[2] * r[2]
    inv5 = 1.0 / (rs * rs * np.sqrt(rs))
    for a in range(3):
        for b in range(3):
            v = 3.0 * r[a] * r[b]
            if a == b:
                v -= rs
            out[i0 + a, j0 + b] += sign * k * v * inv5


@jit
def hessian(q, Z, F):
    h = np.zeros((6, 6))
    r1 = q[0:3].copy()
    r2 = q[3:6].copy()
    d = r1 - r2
    _coulomb_block(r1, Z, h, 0, 0, -1.0)
    _coulomb_block(r2, Z, h, 3, 3, -1.0)
    _coulomb_block(d, 1.0, h, 0, 0, 1.0)
    _coulomb_block(d, 1.0, h, 3, 3, 1.0)
    _coulomb_block(d, 1.0, h, 0, 3, -1.0)
    _coulomb_block(d, 1.0, h, 3, 0, -1.0)
    return h


@jit
def energy(y, Z, F):
    kin = 0.0
    for i in range(6, 12):
        kin += y[i] * y[i]
    return 0.5 * kin + potential(y[0:6], Z, F)


@jit
def rhs(y, Z, F, out):
    g = np.empty(6)
    gradient(y[0:6], Z, F, g)
    for i in range(6):
        out[i] = y[6 + i]
        out[6 + i] = -g[i]


@jit
def _rk_step(y, f, h, Z, F, K, y_new, f_new):
    n = y.shape[0]
    for i in range(n):
        K[0, i] = f[i]
    tmp = np.empty(n)
    for s in range(1, _NS):
        for i in range(n):
            acc = 0.0
            for j in range(s):
                acc += _A[s, j] * K[j, i]
            tmp[i] = y[i] + h * acc
        rhs(tmp, Z, F, K[s])
    for i in range(n):
        acc = 0.0
        for j in range(_NS):
            acc += _B[j] * K[j, i]
        y_new[i] = y[i] + h * acc
    rhs(y_new, Z, F, f_new)
    for i in range(n):
        K[_NS, i] = f_new[i]


@jit
def _error_norm(K, h, y, y_new, rtol, atol):
    n = y.shape[0]
    e5 = 0.0
    e3 = 0.0
    for i in range(n):
        sc = atol + rtol * max(abs(y[i]), abs(y_new[i]))
        a5 = 0.0
        a3 = 0.0
        for j in range(_NS + 1):
            a5 += _E5[j] * K[j, i]
            a3 += _E3[j] * K[j, i]
        a5 /= sc
        a3 /= sc
        e5 += a5 * a5
        e3 += a3 * a3
    if e5 == 0.0 and e3 == 0.0:
        return 0.0
    return abs(h) * e5 / np.sqrt((e5 + 0.01 * e3) * n)


@jit
def _radial_speed(y, k):
    return y[3 * k] * y[6 + 3 * k] + y[3 * k + 1] * y[7 + 3 * k] + y[3 * k + 2] * y[8 + 3 * k]


@jit
def _dist(y, k):
    return np.sqrt(y[3 * k] ** 2 + y[3 * k + 1] ** 2 + y[3 * k + 2] ** 2)


@jit
def _min_separation(y):
    dx = y[0] - y[3]
    dy = y[1] - y[4]
    dz = y[2] - y[5]
    return min(_dist(y, 0), _dist(y, 1), np.sqrt(dx * dx + dy * dy + dz * dz))


@jit
def integrate(y0, Z, F, t_max, rtol, atol, h0, z_cut, r_return, min_sep,
              drift_limit, sample_times, stop_not_double, max_steps):
    """Adaptive DOP853 run with escape/return bookkeeping.

    Returns ``(status, t, y, samples, n_samples, escaped, exit_t, exit_y,
    returned, r_min_second, drift, n_steps)``. Samples are taken by
    clipping steps onto ``sample_times``. ``r_min_second`` holds each
    electron's smallest distance to the nucleus seen at a radial turning
    point.
    """
    n = 12
    y = y0.copy()
    f = np.empty(n)
    rhs(y, Z, F, f)
    K = np.empty((_NS + 1, n))
    y_new = np.empty(n)
    f_new = np.empty(n)

    n_samp = sample_times.shape[0]
    samples = np.full((n_samp, n), np.nan)
    k_samp = 0
    while k_samp < n_samp and sample_times[k_samp] <= 0.0:
        samples[k_samp] = y
        k_samp += 1

    escaped = np.zeros(2, dtype=np.bool_)
    returned = np.zeros(2, dtype=np.bool_)
    exit_t = np.full(2, np.nan)
    exit_y = np.full((2, n), np.nan)
    r_turn = np.full(2, np.inf)
    vr_prev = np.array([_radial_speed(y, 0), _radial_speed(y, 1)])

    e0 = energy(y, Z, F)
    e_ref = max(abs(e0), 1e-300)
    drift = 0.0
    t = 0.0
    h = h0
    status = RUNNING
    steps = 0

    if _min_separation(y) < min_sep:
        return (COLLISION, t, y, samples, k_samp, escaped, exit_t, exit_y,
                returned, r_turn, drift, steps)

    while t < t_max:
        if steps >= max_steps:
            status = STEP_FAILURE
            break
        t_stop = t_max
        if k_samp < n_samp and sample_times[k_samp] < t_stop:
            t_stop = sample_times[k_samp]
        accepted = False
        rejected = False
        while not accepted:
            min_step = 10.0 * abs(np.nextafter(t, np.inf) - t)
            if h < min_step:
                h = min_step
            t_new = t + h
            clipped = False
            if t_new >= t_stop:
                t_new = t_stop
                clipped = True
            hh = t_new - t
            _rk_step(y, f, hh, Z, F, K, y_new, f_new)
            err = _error_norm(K, hh, y, y_new, rtol, atol)
            if err < 1.0:
                if err == 0.0:
                    fac = MAX_FACTOR
                else:
                    fac = min(MAX_FACTOR, SAFETY * err ** (-1.0 / 8.0))
                if rejected:
                    fac = min(1.0, fac)
                if not clipped:
                    h = hh * fac
                accepted = True
            else:
                if hh <= min_step:
                    break
                h = hh * max(MIN_FACTOR, SAFETY * err ** (-1.0 / 8.0))
                rejected = True
        if not accepted:
            status = STEP_FAILURE
            break
        steps += 1
        t = t_new
        for i in range(n):
            y[i] = y_new[i]
            f[i] = f_new[i]

        while k_samp < n_samp and sample_times[k_samp] <= t:
            samples[k_samp] = y
            k_samp += 1

        if _min_separation(y) < min_sep:
            status = COLLISION
            break
        d = abs(energy(y, Z, F) - e0) / e_ref
        if d > drift:
            drift = d
        if drift > drift_limit:
            status = DRIFT
            break

        for k in range(2):
            vr = _radial_speed(y, k)
            if not escaped[k]:
                if vr_prev[k] < 0.0 and vr >= 0.0:
                    r = _dist(y, k)
                    if r < r_turn[k]:
                        r_turn[k] = r
                    if r < r_return:
                        returned[k] = True
                if y[3 * k + 2] > z_cut and y[8 + 3 * k] > 0.0:
                    escaped[k] = True
                    exit_t[k] = t
                    for i in range(n):
                        exit_y[k, i] = y[i]
            vr_prev[k] = vr

        if escaped[0] and escaped[1]:
            if returned[0] or returned[1]:
                status = BOTH_OUT_RETURN
            else:
                status = DOUBLE
            break
        if stop_not_double and (returned[0] or returned[1]):
            status = NOT_DOUBLE
            break

    return (status, t, y, samples, k_samp, escaped, exit_t, exit_y,
            returned, r_turn, drift, steps)
