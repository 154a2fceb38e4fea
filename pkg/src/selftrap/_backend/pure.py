"""Pure-Python fallback for the integration kernels.

Semantically identical to the compiled core (`_core.pyx`): the arithmetic
expressions and their evaluation order match line for line, so both backends
produce the same floating-point trajectories.  This module exists so the
package works without a C toolchain; it is one to two orders of magnitude
slower and meant for small problems and cross-checking only.

Kernel conventions
------------------
- State updates are classical fixed-step RK4; the step time is always formed
  as ``t0 + i*dt`` (never accumulated) so both backends agree bitwise.
- Trajectory kernels return ``(arrays..., status, steps_done)`` where status
  0 means the full step count ran, 1 means the singular-drive guard stopped
  the run after ``steps_done`` steps.  Output arrays are sized for the full
  run; on early stop the caller trims to ``steps_done // stride + 1`` rows.
- Half-angle identities (sin th = 2 sh ch, cos th = 1 - 2 sh^2) keep the
  per-stage trig cost at a single (sin, cos) pair.
"""

from math import cos, floor, sin, sqrt

import numpy as np

BACKEND_NAME = "pure"

_TWO_PI = 6.283185307179586


def bloch_traj(omega, a, b, delta, theta, t0, dt, n_steps, stride,
               famp, fomega, fphi, eps_guard):
    """Integrate the two-mode flow with an optional harmonic odd drive."""
    n_out = n_steps // stride + 1
    out_d = np.empty(n_out)
    out_th = np.empty(n_out)
    out_d[0] = delta
    out_th[0] = theta
    status = 0
    steps_done = 0
    j = 1
    for i in range(n_steps):
        t = t0 + i * dt
        ok, delta, theta = _bloch_step(omega, a, b, delta, theta, t, dt,
                                       famp, fomega, fphi, eps_guard)
        if not ok:
            status = 1
            break
        steps_done = i + 1
        if steps_done % stride == 0:
            out_d[j] = delta
            out_th[j] = theta
            j += 1
    return out_d, out_th, status, steps_done


def bloch_noise_traj(omega, a, b, delta, theta, t0, dt, n_sub, xi, stride,
                     eps_guard, soft_pole=0):
    """Integrate the two-mode flow with a piecewise-constant odd drive.

    ``xi`` holds one drive value per block of ``n_sub`` integrator steps.
    With ``soft_pole`` the drive terms are dropped for stages inside the
    guard band at delta = +-1 (the coupling is degenerate at the poles)
    instead of aborting the run.
    """
    n_steps = len(xi) * n_sub
    n_out = n_steps // stride + 1
    out_d = np.empty(n_out)
    out_th = np.empty(n_out)
    out_d[0] = delta
    out_th[0] = theta
    status = 0
    steps_done = 0
    j = 1
    for i in range(n_steps):
        f = xi[i // n_sub]
        ok, delta, theta = _bloch_step_const(omega, a, b, delta, theta, dt,
                                             f, eps_guard, soft_pole)
        if not ok:
            status = 1
            break
        steps_done = i + 1
        if steps_done % stride == 0:
            out_d[j] = delta
            out_th[j] = theta
            j += 1
    return out_d, out_th, status, steps_done


def bloch_detect_crossing(omega, a, b, e_sep, margin, delta, theta, t0, dt,
                          n_steps, famp, fomega, fphi, eps_guard):
    """Run until the state visits the core of the opposite well loop.

    Returns ``(status, t_cross)`` with status 0 = crossed at ``t_cross``,
    1 = horizon exhausted without a crossing, 2 = singular guard stop.
    """
    parity0 = int(floor(theta / _TWO_PI + 0.5)) & 1
    e_core = e_sep - margin
    for i in range(n_steps):
        t = t0 + i * dt
        ok, delta, theta = _bloch_step(omega, a, b, delta, theta, t, dt,
                                       famp, fomega, fphi, eps_guard)
        if not ok:
            return 2, t0 + i * dt
        e = omega * delta + a * delta * delta \
            - b * (1.0 - delta * delta) * cos(theta)
        if e < e_core:
            if (int(floor(theta / _TWO_PI + 0.5)) & 1) != parity0:
                return 0, t0 + (i + 1) * dt
    return 1, t0 + n_steps * dt


def duffing_traj(famp, fomega, x, v, t0, dt, n_steps, stride):
    """Integrate the driven soft unit oscillator xddot = -x + x^3 + drive."""
    n_out = n_steps // stride + 1
    out_x = np.empty(n_out)
    out_v = np.empty(n_out)
    out_x[0] = x
    out_v[0] = v
    j = 1
    for i in range(n_steps):
        t = t0 + i * dt
        x, v = _duffing_step(famp, fomega, x, v, t, dt)
        if (i + 1) % stride == 0:
            out_x[j] = x
            out_v[j] = v
            j += 1
    return out_x, out_v


def duffing_escape(famp, fomega, x, v, t0, dt, n_steps):
    """First sample time with |x| >= 1, or -1.0 if none within the horizon."""
    for i in range(n_steps):
        t = t0 + i * dt
        x, v = _duffing_step(famp, fomega, x, v, t, dt)
        if x >= 1.0 or x <= -1.0:
            return t0 + (i + 1) * dt
    return -1.0


def slowflow_traj(famp, delta, coef, amp, phi, t0, dt, n_steps, stride):
    """Integrate the slow amplitude-phase equations."""
    n_out = n_steps // stride + 1
    out_a = np.empty(n_out)
    out_p = np.empty(n_out)
    out_a[0] = amp
    out_p[0] = phi
    j = 1
    for i in range(n_steps):
        amp, phi = _slowflow_step(famp, delta, coef, amp, phi, dt)
        if (i + 1) % stride == 0:
            out_a[j] = amp
            out_p[j] = phi
            j += 1
    return out_a, out_p


def slowflow_max_amp(famp, delta, coef, amp, phi, dt, n_steps,
                     phi_lo, phi_hi):
    """Track max amplitude; stop early at amp >= 1 or phase window exit.

    Returns ``(max_amp, t_hit)`` where t_hit is the first time amp >= 1
    (-1.0 if never reached before the stop condition or horizon).
    """
    max_amp = amp
    for i in range(n_steps):
        amp, phi = _slowflow_step(famp, delta, coef, amp, phi, dt)
        if amp > max_amp:
            max_amp = amp
        if amp >= 1.0:
            return max_amp, (i + 1) * dt
        if phi < phi_lo or phi > phi_hi:
            break
    return max_amp, -1.0


def fp_evolve_steps(w_left, w_right, w_upper, om_w, om_u,
                    d_face_w, d_face_u, d_junc_w, d_junc_u,
                    h_w, h_u, dt, n_steps):
    """Explicit conservative steps of the branched energy-diffusion equation.

    Operates in place on the three density arrays.  The junction value of
    rho = w*Omega is eliminated from flux continuity (upper flux equals the
    sum of the two well fluxes).  Returns the total clipped negative mass.
    """
    nw = len(w_left)
    nu = len(w_upper)
    a_j = d_junc_w / (0.5 * h_w)
    b_j = d_junc_u / (0.5 * h_u)
    denom = 2.0 * a_j + b_j
    clipped = 0.0
    rho_l = np.empty(nw)
    rho_r = np.empty(nw)
    rho_u = np.empty(nu)
    for _ in range(n_steps):
        for i in range(nw):
            rho_l[i] = w_left[i] * om_w[i]
            rho_r[i] = w_right[i] * om_w[i]
        for i in range(nu):
            rho_u[i] = w_upper[i] * om_u[i]
        if denom > 0.0:
            rho_j = (a_j * (rho_l[nw - 1] + rho_r[nw - 1])
                     + b_j * rho_u[0]) / denom
        else:
            rho_j = 0.0
        # left/right wells: zero flux at the lower edge
        prev_l = 0.0
        prev_r = 0.0
        for i in range(nw):
            if i < nw - 1:
                cur_l = -d_face_w[i] * (rho_l[i + 1] - rho_l[i]) / h_w
                cur_r = -d_face_w[i] * (rho_r[i + 1] - rho_r[i]) / h_w
            else:
                cur_l = -a_j * (rho_j - rho_l[nw - 1])
                cur_r = -a_j * (rho_j - rho_r[nw - 1])
            w_left[i] += dt * (prev_l - cur_l) / h_w
            w_right[i] += dt * (prev_r - cur_r) / h_w
            prev_l = cur_l
            prev_r = cur_r
        # upper branch: junction flux at the lower edge, zero flux on top
        prev_u = -b_j * (rho_u[0] - rho_j)
        for i in range(nu):
            if i < nu - 1:
                cur_u = -d_face_u[i] * (rho_u[i + 1] - rho_u[i]) / h_u
            else:
                cur_u = 0.0
            w_upper[i] += dt * (prev_u - cur_u) / h_u
            prev_u = cur_u
        for i in range(nw):
            if w_left[i] < 0.0:
                clipped -= w_left[i] * h_w
                w_left[i] = 0.0
            if w_right[i] < 0.0:
                clipped -= w_right[i] * h_w
                w_right[i] = 0.0
        for i in range(nu):
            if w_upper[i] < 0.0:
                clipped -= w_upper[i] * h_u
                w_upper[i] = 0.0
    return clipped


# ---------------------------------------------------------------------------
# single RK4 steps


def _bloch_step(omega, a, b, delta, theta, t, dt, famp, fomega, fphi,
                eps_guard):
    lim = 1.0 - eps_guard

    d = delta
    th = theta
    sh = sin(0.5 * th)
    ch = cos(0.5 * th)
    omd2 = 1.0 - d * d
    kd1 = -b * omd2 * (2.0 * sh * ch)
    kt1 = omega + 2.0 * a * d + 2.0 * b * d * (1.0 - 2.0 * sh * sh)
    if famp != 0.0:
        f = famp * sin(fomega * t + fphi)
        if f != 0.0:
            if d >= lim or d <= -lim:
                return False, delta, theta
            root = sqrt(omd2)
            kd1 += -0.5 * f * root * sh
            kt1 += f * (d / root) * ch

    t_half = t + 0.5 * dt
    d = delta + 0.5 * dt * kd1
    th = theta + 0.5 * dt * kt1
    sh = sin(0.5 * th)
    ch = cos(0.5 * th)
    omd2 = 1.0 - d * d
    kd2 = -b * omd2 * (2.0 * sh * ch)
    kt2 = omega + 2.0 * a * d + 2.0 * b * d * (1.0 - 2.0 * sh * sh)
    if famp != 0.0:
        f = famp * sin(fomega * t_half + fphi)
        if f != 0.0:
            if d >= lim or d <= -lim:
                return False, delta, theta
            root = sqrt(omd2)
            kd2 += -0.5 * f * root * sh
            kt2 += f * (d / root) * ch

    d = delta + 0.5 * dt * kd2
    th = theta + 0.5 * dt * kt2
    sh = sin(0.5 * th)
    ch = cos(0.5 * th)
    omd2 = 1.0 - d * d
    kd3 = -b * omd2 * (2.0 * sh * ch)
    kt3 = omega + 2.0 * a * d + 2.0 * b * d * (1.0 - 2.0 * sh * sh)
    if famp != 0.0:
        f = famp * sin(fomega * t_half + fphi)
        if f != 0.0:
            if d >= lim or d <= -lim:
                return False, delta, theta
            root = sqrt(omd2)
            kd3 += -0.5 * f * root * sh
            kt3 += f * (d / root) * ch

    t_full = t + dt
    d = delta + dt * kd3
    th = theta + dt * kt3
    sh = sin(0.5 * th)
    ch = cos(0.5 * th)
    omd2 = 1.0 - d * d
    kd4 = -b * omd2 * (2.0 * sh * ch)
    kt4 = omega + 2.0 * a * d + 2.0 * b * d * (1.0 - 2.0 * sh * sh)
    if famp != 0.0:
        f = famp * sin(fomega * t_full + fphi)
        if f != 0.0:
            if d >= lim or d <= -lim:
                return False, delta, theta
            root = sqrt(omd2)
            kd4 += -0.5 * f * root * sh
            kt4 += f * (d / root) * ch

    delta = delta + dt * (kd1 + 2.0 * (kd2 + kd3) + kd4) / 6.0
    theta = theta + dt * (kt1 + 2.0 * (kt2 + kt3) + kt4) / 6.0
    # overshoot clamp lands just inside the guard band: the lines at
    # delta = +-1 are invariant, so placing a state exactly on them would
    # freeze it there for good
    if delta > 1.0:
        delta = 1.0 - eps_guard
    elif delta < -1.0:
        delta = -1.0 + eps_guard
    return True, delta, theta


def _bloch_step_const(omega, a, b, delta, theta, dt, f, eps_guard,
                      soft_pole=0):
    lim = 1.0 - eps_guard

    d = delta
    th = theta
    sh = sin(0.5 * th)
    ch = cos(0.5 * th)
    omd2 = 1.0 - d * d
    kd1 = -b * omd2 * (2.0 * sh * ch)
    kt1 = omega + 2.0 * a * d + 2.0 * b * d * (1.0 - 2.0 * sh * sh)
    if f != 0.0:
        if d >= lim or d <= -lim:
            if not soft_pole:
                return False, delta, theta
        else:
            root = sqrt(omd2)
            kd1 += -0.5 * f * root * sh
            kt1 += f * (d / root) * ch

    d = delta + 0.5 * dt * kd1
    th = theta + 0.5 * dt * kt1
    sh = sin(0.5 * th)
    ch = cos(0.5 * th)
    omd2 = 1.0 - d * d
    kd2 = -b * omd2 * (2.0 * sh * ch)
    kt2 = omega + 2.0 * a * d + 2.0 * b * d * (1.0 - 2.0 * sh * sh)
    if f != 0.0:
        if d >= lim or d <= -lim:
            if not soft_pole:
                return False, delta, theta
        else:
            root = sqrt(omd2)
            kd2 += -0.5 * f * root * sh
            kt2 += f * (d / root) * ch

    d = delta + 0.5 * dt * kd2
    th = theta + 0.5 * dt * kt2
    sh = sin(0.5 * th)
    ch = cos(0.5 * th)
    omd2 = 1.0 - d * d
    kd3 = -b * omd2 * (2.0 * sh * ch)
    kt3 = omega + 2.0 * a * d + 2.0 * b * d * (1.0 - 2.0 * sh * sh)
    if f != 0.0:
        if d >= lim or d <= -lim:
            if not soft_pole:
                return False, delta, theta
        else:
            root = sqrt(omd2)
            kd3 += -0.5 * f * root * sh
            kt3 += f * (d / root) * ch

    d = delta + dt * kd3
    th = theta + dt * kt3
    sh = sin(0.5 * th)
    ch = cos(0.5 * th)
    omd2 = 1.0 - d * d
    kd4 = -b * omd2 * (2.0 * sh * ch)
    kt4 = omega + 2.0 * a * d + 2.0 * b * d * (1.0 - 2.0 * sh * sh)
    if f != 0.0:
        if d >= lim or d <= -lim:
            if not soft_pole:
                return False, delta, theta
        else:
            root = sqrt(omd2)
            kd4 += -0.5 * f * root * sh
            kt4 += f * (d / root) * ch

    delta = delta + dt * (kd1 + 2.0 * (kd2 + kd3) + kd4) / 6.0
    theta = theta + dt * (kt1 + 2.0 * (kt2 + kt3) + kt4) / 6.0
    # overshoot clamp lands just inside the guard band: the lines at
    # delta = +-1 are invariant, so placing a state exactly on them would
    # freeze it there for good
    if delta > 1.0:
        delta = 1.0 - eps_guard
    elif delta < -1.0:
        delta = -1.0 + eps_guard
    return True, delta, theta


def _duffing_step(famp, fomega, x, v, t, dt):
    kx1 = v
    kv1 = -x + x * x * x + famp * sin(fomega * t)

    t_half = t + 0.5 * dt
    x2 = x + 0.5 * dt * kx1
    kx2 = v + 0.5 * dt * kv1
    kv2 = -x2 + x2 * x2 * x2 + famp * sin(fomega * t_half)

    x3 = x + 0.5 * dt * kx2
    kx3 = v + 0.5 * dt * kv2
    kv3 = -x3 + x3 * x3 * x3 + famp * sin(fomega * t_half)

    t_full = t + dt
    x4 = x + dt * kx3
    kx4 = v + dt * kv3
    kv4 = -x4 + x4 * x4 * x4 + famp * sin(fomega * t_full)

    x = x + dt * (kx1 + 2.0 * (kx2 + kx3) + kx4) / 6.0
    v = v + dt * (kv1 + 2.0 * (kv2 + kv3) + kv4) / 6.0
    return x, v


def _slowflow_step(famp, delta, coef, amp, phi, dt):
    ka1 = -0.5 * famp * cos(phi)
    kp1 = -0.5 * delta - coef * amp * amp

    a2 = amp + 0.5 * dt * ka1
    p2 = phi + 0.5 * dt * kp1
    ka2 = -0.5 * famp * cos(p2)
    kp2 = -0.5 * delta - coef * a2 * a2

    a3 = amp + 0.5 * dt * ka2
    p3 = phi + 0.5 * dt * kp2
    ka3 = -0.5 * famp * cos(p3)
    kp3 = -0.5 * delta - coef * a3 * a3

    a4 = amp + dt * ka3
    p4 = phi + dt * kp3
    ka4 = -0.5 * famp * cos(p4)
    kp4 = -0.5 * delta - coef * a4 * a4

    amp = amp + dt * (ka1 + 2.0 * (ka2 + ka3) + ka4) / 6.0
    phi = phi + dt * (kp1 + 2.0 * (kp2 + kp3) + kp4) / 6.0
    return amp, phi
