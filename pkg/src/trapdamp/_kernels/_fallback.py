"""Pure numpy implementations of the hot kernels.

Each function mirrors the compiled version in ``_core.pyx`` operation for
operation, so both backends consume random numbers identically and agree to
rounding.
"""
import math

import numpy as np

TWO_PI = 2.0 * math.pi


def tank_impedance(omega, c_trap, l1, l2, r_loss, c_amp, c_tuning, r_state, c_ds):
    """Endcap-to-ground impedance of the tapped tank; arguments broadcast."""
    jw = 1j * omega
    # c_tuning in series with (r_state || c_ds), written so c_tuning = 0 gives 0
    y_switch = jw * c_tuning * (1 + jw * c_ds * r_state) / (1 + jw * r_state * (c_ds + c_tuning))
    y_tap = 1.0 / (jw * l2) + y_switch + jw * c_amp
    z_arm = jw * l1 + 1.0 / y_tap
    y_top = jw * c_trap + 1.0 / r_loss + 1.0 / z_arm
    return 1.0 / y_top


def _lossless_guess(c_trap, l1, l2, c_amp, c_tuning, r_off, c_ds):
    """Resonance of the loss-free tank with the tap loaded by a fixed capacitance.

    The switch branch is frozen to its capacitance at the bare LC frequency;
    the result is the lower root of a quadratic in omega^2.
    """
    w_b = 1.0 / math.sqrt((l1 + l2) * c_trap)
    jw = 1j * w_b
    y_s = jw * c_tuning * (1 + jw * c_ds * r_off) / (1 + jw * r_off * (c_ds + c_tuning))
    c_m = y_s.imag / w_b + c_amp
    a = c_trap * l1 * l2 * c_m
    b = c_trap * (l1 + l2) + l2 * c_m
    x = 2.0 / (b + np.sqrt(b * b - 4.0 * a))
    return np.sqrt(x) / TWO_PI


def switch_model(c_trap, l1, l2, r_loss, c_amp, c_tuning, r_off, r_on, c_ds, f_z):
    """Operating frequency, off-state Re[Z] and eta for each ``c_tuning``.

    ``f_z`` NaN means: track the off-state Re[Z] peak (secant on Im[Y] = 0,
    then one parabolic refinement).
    """
    c_tuning = np.ascontiguousarray(c_tuning, dtype=float)
    args = (c_trap, l1, l2, r_loss, c_amp, c_tuning, r_off, c_ds)

    def re_z(f):
        return tank_impedance(TWO_PI * f, *args).real

    if math.isnan(f_z):
        def susceptance(f):
            return (1.0 / tank_impedance(TWO_PI * f, *args)).imag

        f_g = _lossless_guess(c_trap, l1, l2, c_amp, c_tuning, r_off, c_ds)
        f0 = f_g * (1 - 1e-3)
        f1 = f_g
        b0, b1 = susceptance(f0), susceptance(f1)
        done = np.zeros(c_tuning.shape, dtype=bool)
        for _ in range(60):
            denom = b1 - b0
            live = ~done & (denom != 0)
            step = np.where(live, b1 * (f1 - f0) / np.where(live, denom, 1.0), 0.0)
            f0 = np.where(live, f1, f0)
            b0 = np.where(live, b1, b0)
            f1 = f1 - step
            b1 = susceptance(f1)
            done |= ~live | (np.abs(step) <= 1e-14 * f1)
            if done.all():
                break
        f_eval = f1
        for _ in range(1):
            h = 1e-5 * f_eval
            g_m, g_0, g_p = re_z(f_eval - h), re_z(f_eval), re_z(f_eval + h)
            curv = g_m - 2.0 * g_0 + g_p
            ok = curv < 0
            shift = np.where(ok, 0.5 * h * (g_m - g_p) / np.where(ok, curv, -1.0), 0.0)
            f_eval = f_eval + np.clip(shift, -h, h)
    else:
        f_eval = np.full(c_tuning.shape, float(f_z))
    r_state = re_z(f_eval)
    z_on = tank_impedance(TWO_PI * f_eval, c_trap, l1, l2, r_loss, c_amp, c_tuning, r_on, c_ds)
    return f_eval, r_state, r_state / z_on.real


def rk4_driven(z0, v0, omega_z, gamma, accel, omega_d, dt, n_steps):
    """Classical RK4 for z'' = -omega_z^2 z - gamma z' + accel cos(omega_d t)."""
    w2 = omega_z * omega_z
    z_out = np.empty(n_steps + 1)
    v_out = np.empty(n_steps + 1)
    z, v = float(z0), float(v0)
    z_out[0], v_out[0] = z, v
    cos = math.cos
    half = 0.5 * dt
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
        z_out[i + 1] = z
        v_out[i + 1] = v
    return z_out, v_out


def jump_phase_batch(n0, u, gamma, nbar, delta_c, f_center, dt, n_samples):
    """Sample exp(i psi(t)) for a batch of axial birth-death trajectories.

    The axial number n jumps down at rate gamma (nbar + 1) n and up at rate
    gamma nbar (n + 1). Between jumps the demodulated phase advances at
    2 pi (delta_c (n + 1/2) - f_center). Event k of trajectory b uses
    ``u[b, 2k]`` for the waiting time and ``u[b, 2k + 1]`` for the direction.

    Returns ``(signal[B, S], n_end[B], used[B])``; ``used`` is -1 where the
    uniform buffer ran out.
    """
    n0 = np.asarray(n0, dtype=np.int64)
    u = np.asarray(u, dtype=float)
    n_traj, n_uniform = u.shape
    t_last = (n_samples - 1) * dt
    up_coef = gamma * nbar
    down_coef = gamma * (nbar + 1.0)

    n = n0.copy()
    t = np.zeros(n_traj)
    psi = np.zeros(n_traj)
    active = np.ones(n_traj, dtype=bool)
    used = np.zeros(n_traj, dtype=np.int64)
    seg_t, seg_psi, seg_w, seg_n = [], [], [], []
    seg_count = np.zeros(n_traj, dtype=np.int64)

    def record(mask):
        seg_t.append(np.where(mask, t, np.inf))
        seg_psi.append(psi.copy())
        seg_w.append(TWO_PI * (delta_c * (n + 0.5) - f_center))
        seg_n.append(n.copy())
        seg_count[mask] += 1

    record(active)
    k = 0
    while active.any():
        rate = down_coef * n + up_coef * (n + 1)
        stalled = active & ~(rate > 0)
        used[stalled] = k
        active &= ~stalled
        overflow = active & (k + 2 > n_uniform)
        used[overflow] = -1
        active &= ~overflow
        if not active.any():
            break
        u_wait = u[:, k] if k < n_uniform else np.zeros(n_traj)
        with np.errstate(divide="ignore", invalid="ignore"):
            t_next = t - np.log(1.0 - u_wait) / rate
        finished = active & ~(t_next <= t_last)
        used[finished] = k + 2
        active &= ~finished
        if not active.any():
            break
        omega = TWO_PI * (delta_c * (n + 0.5) - f_center)
        psi = np.where(active, psi + omega * (t_next - t), psi)
        go_down = u[:, k + 1] * rate < down_coef * n
        n = np.where(active, np.where(go_down, n - 1, n + 1), n)
        t = np.where(active, t_next, t)
        k += 2
        record(active)

    seg_t = np.array(seg_t).T
    seg_psi = np.array(seg_psi).T
    seg_w = np.array(seg_w).T
    seg_n = np.array(seg_n).T
    ts = np.arange(n_samples) * dt
    out = np.empty((n_traj, n_samples), dtype=complex)
    n_end = np.empty(n_traj, dtype=np.int64)
    for b in range(n_traj):
        m = seg_count[b]
        times = seg_t[b, :m]
        idx = np.searchsorted(times, ts, side="right") - 1
        ph = seg_psi[b, idx] + seg_w[b, idx] * (ts - times[idx])
        out[b].real = np.cos(ph)
        out[b].imag = np.sin(ph)
        n_end[b] = seg_n[b, idx[-1]]
    return out, n_end, used

