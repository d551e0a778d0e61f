# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. Same contracts as ``_fallback``."""
import numpy as np

from libc.math cimport cos, sin, log, sqrt, fabs, isnan, INFINITY, M_PI

cdef double TWO_PI = 2.0 * M_PI


cdef inline double complex _tank(double omega, double c_trap, double l1, double l2,
                                 double r_loss, double c_amp, double c_tuning,
                                 double r_state, double c_ds) noexcept nogil:
    cdef double complex jw = 1j * omega
    cdef double complex y_switch = (jw * c_tuning * (1 + jw * c_ds * r_state)
                                    / (1 + jw * r_state * (c_ds + c_tuning)))
    cdef double complex y_tap = 1.0 / (jw * l2) + y_switch + jw * c_amp
    cdef double complex z_arm = jw * l1 + 1.0 / y_tap
    cdef double complex y_top = jw * c_trap + 1.0 / r_loss + 1.0 / z_arm
    return 1.0 / y_top


cdef inline double _re_z(double f, double c_trap, double l1, double l2, double r_loss,
                         double c_amp, double ct, double r, double c_ds) noexcept nogil:
    return _tank(TWO_PI * f, c_trap, l1, l2, r_loss, c_amp, ct, r, c_ds).real


cdef inline double _susceptance(double f, double c_trap, double l1, double l2, double r_loss,
                                double c_amp, double ct, double r, double c_ds) noexcept nogil:
    return (1.0 / _tank(TWO_PI * f, c_trap, l1, l2, r_loss, c_amp, ct, r, c_ds)).imag


cdef inline double _lossless_guess(double c_trap, double l1, double l2, double c_amp,
                                   double c_tuning, double r_off, double c_ds) noexcept nogil:
    cdef double w_b = 1.0 / sqrt((l1 + l2) * c_trap)
    cdef double complex jw = 1j * w_b
    cdef double complex y_s = (jw * c_tuning * (1 + jw * c_ds * r_off)
                               / (1 + jw * r_off * (c_ds + c_tuning)))
    cdef double c_m = y_s.imag / w_b + c_amp
    cdef double a = c_trap * l1 * l2 * c_m
    cdef double b = c_trap * (l1 + l2) + l2 * c_m
    cdef double x = 2.0 / (b + sqrt(b * b - 4.0 * a))
    return sqrt(x) / TWO_PI


def switch_model(double c_trap, double l1, double l2, double r_loss, double c_amp,
                 c_tuning, double r_off, double r_on, double c_ds, double f_z):
    cdef double[::1] ct = np.ascontiguousarray(c_tuning, dtype=np.float64).ravel()
    cdef Py_ssize_t n = ct.shape[0], i, it, rep
    f_arr = np.empty(n)
    r_arr = np.empty(n)
    eta_arr = np.empty(n)
    cdef double[::1] fv = f_arr, rv = r_arr, ev = eta_arr
    cdef double f0, f1, b0, b1, denom, step, h, gm, g0, gp, curv, shift, c, f
    cdef bint track = isnan(f_z)
    with nogil:
        for i in range(n):
            c = ct[i]
            if track:
                f1 = _lossless_guess(c_trap, l1, l2, c_amp, c, r_off, c_ds)
                f0 = f1 * (1 - 1e-3)
                b0 = _susceptance(f0, c_trap, l1, l2, r_loss, c_amp, c, r_off, c_ds)
                b1 = _susceptance(f1, c_trap, l1, l2, r_loss, c_amp, c, r_off, c_ds)
                for it in range(60):
                    denom = b1 - b0
                    if denom == 0:
                        break
                    step = b1 * (f1 - f0) / denom
                    f0 = f1
                    b0 = b1
                    f1 = f1 - step
                    b1 = _susceptance(f1, c_trap, l1, l2, r_loss, c_amp, c, r_off, c_ds)
                    if fabs(step) <= 1e-14 * f1:
                        break
                f = f1
                for rep in range(1):
                    h = 1e-5 * f
                    gm = _re_z(f - h, c_trap, l1, l2, r_loss, c_amp, c, r_off, c_ds)
                    g0 = _re_z(f, c_trap, l1, l2, r_loss, c_amp, c, r_off, c_ds)
                    gp = _re_z(f + h, c_trap, l1, l2, r_loss, c_amp, c, r_off, c_ds)
                    curv = gm - 2.0 * g0 + gp
                    shift = 0.5 * h * (gm - gp) / curv if curv < 0 else 0.0
                    if shift > h:
                        shift = h
                    elif shift < -h:
                        shift = -h
                    f = f + shift
            else:
                f = f_z
            fv[i] = f
            rv[i] = _re_z(f, c_trap, l1, l2, r_loss, c_amp, c, r_off, c_ds)
            ev[i] = rv[i] / _re_z(f, c_trap, l1, l2, r_loss, c_amp, c, r_on, c_ds)
    shape = np.shape(c_tuning)
    return f_arr.reshape(shape), r_arr.reshape(shape), eta_arr.reshape(shape)


def rk4_driven(double z0, double v0, double omega_z, double gamma, double accel,
               double omega_d, double dt, Py_ssize_t n_steps):
    z_arr = np.empty(n_steps + 1)
    v_arr = np.empty(n_steps + 1)
    cdef double[::1] zo = z_arr, vo = v_arr
    cdef double w2 = omega_z * omega_z, half = 0.5 * dt
    cdef double z = z0, v = v0, t, f_0, f_h, f_1
    cdef double k1z, k1v, k2z, k2v, k3z, k3v, k4z, k4v
    cdef Py_ssize_t i
    zo[0] = z
    vo[0] = v
    with nogil:
        for i in range(n_steps):
            t = i * dt
            f_0 = accel * cos(omega_d * t)
            f_h = accel * cos(omega_d * (t + half))
            f_1 = accel * cos(omega_d * (t + dt))
            k1z = v
            k1v = -w2 * z - gamma * v + f_0
            k2z = v + half * k1v
            k2v = -w2 * (z + half * k1z) - gamma * k2z + f_h
            k3z = v + half * k2v
            k3v = -w2 * (z + half * k2z) - gamma * k3z + f_h
            k4z = v + dt * k3v
            k4v = -w2 * (z + dt * k3z) - gamma * k4z + f_1
            z = z + dt / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
            v = v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
            zo[i + 1] = z
            vo[i + 1] = v
    return z_arr, v_arr


def jump_phase_batch(n0, u, double gamma, double nbar, double delta_c, double f_center,
                     double dt, Py_ssize_t n_samples):
    cdef long long[::1] n0v = np.ascontiguousarray(n0, dtype=np.int64)
    cdef const double[:, ::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t n_traj = uv.shape[0], n_uniform = uv.shape[1]
    out = np.empty((n_traj, n_samples), dtype=np.complex128)
    cdef double[:, :, ::1] ov = out.view(np.float64).reshape(n_traj, n_samples, 2)
    n_end_arr = np.empty(n_traj, dtype=np.int64)
    used_arr = np.empty(n_traj, dtype=np.int64)
    cdef long long[::1] n_end = n_end_arr, used = used_arr
    cdef double up_coef = gamma * nbar
    cdef double down_coef = gamma * (nbar + 1.0)
    cdef double t, t_next, psi, rate, omega, ph, ts, nd
    cdef long long n
    cdef Py_ssize_t b, k, s
    cdef bint overflow
    with nogil:
        for b in range(n_traj):
            n = n0v[b]
            t = 0.0
            psi = 0.0
            k = 0
            s = 0
            overflow = False
            while True:
                nd = <double>n
                rate = down_coef * nd + up_coef * (nd + 1)
                omega = TWO_PI * (delta_c * (nd + 0.5) - f_center)
                if rate > 0:
                    if k + 2 > n_uniform:
                        overflow = True
                        break
                    t_next = t - log(1.0 - uv[b, k]) / rate
                else:
                    t_next = INFINITY
                while s < n_samples:
                    ts = s * dt
                    if ts >= t_next:
                        break
                    ph = psi + omega * (ts - t)
                    ov[b, s, 0] = cos(ph)
                    ov[b, s, 1] = sin(ph)
                    s += 1
                if s >= n_samples:
                    if rate > 0:
                        k += 2
                    break
                psi = psi + omega * (t_next - t)
                if uv[b, k + 1] * rate < down_coef * nd:
                    n -= 1
                else:
                    n += 1
                t = t_next
                k += 2
            n_end[b] = n
            used[b] = -1 if overflow else k
    return out, n_end_arr, used_arr
