# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled integration kernels.

Mirrors `pure.py` line for line: the arithmetic expressions and their
evaluation order are identical, and the extension is built with
-ffp-contract=off, so both backends produce the same floating-point
trajectories.  See the pure module for the kernel conventions.
"""

from libc.math cimport cos, floor, sin, sqrt

import numpy as np

BACKEND_NAME = "compiled"

cdef double _TWO_PI = 6.283185307179586


cdef inline int _bloch_step(double omega, double a, double b,
                            double* delta, double* theta, double t, double dt,
                            double famp, double fomega, double fphi,
                            double eps_guard) nogil:
    cdef double lim = 1.0 - eps_guard
    cdef double d, th, sh, ch, omd2, root, f
    cdef double kd1, kt1, kd2, kt2, kd3, kt3, kd4, kt4
    cdef double t_half, t_full, new_d

    d = delta[0]
    th = theta[0]
    sh = sin(0.5 * th)
    ch = cos(0.5 * th)
    omd2 = 1.0 - d * d
    kd1 = -b * omd2 * (2.0 * sh * ch)
    kt1 = omega + 2.0 * a * d + 2.0 * b * d * (1.0 - 2.0 * sh * sh)
    if famp != 0.0:
        f = famp * sin(fomega * t + fphi)
        if f != 0.0:
            if d >= lim or d <= -lim:
                return 1
            root = sqrt(omd2)
            kd1 += -0.5 * f * root * sh
            kt1 += f * (d / root) * ch

    t_half = t + 0.5 * dt
    d = delta[0] + 0.5 * dt * kd1
    th = theta[0] + 0.5 * dt * kt1
    sh = sin(0.5 * th)
    ch = cos(0.5 * th)
    omd2 = 1.0 - d * d
    kd2 = -b * omd2 * (2.0 * sh * ch)
    kt2 = omega + 2.0 * a * d + 2.0 * b * d * (1.0 - 2.0 * sh * sh)
    if famp != 0.0:
        f = famp * sin(fomega * t_half + fphi)
        if f != 0.0:
            if d >= lim or d <= -lim:
                return 1
            root = sqrt(omd2)
            kd2 += -0.5 * f * root * sh
            kt2 += f * (d / root) * ch

    d = delta[0] + 0.5 * dt * kd2
    th = theta[0] + 0.5 * dt * kt2
    sh = sin(0.5 * th)
    ch = cos(0.5 * th)
    omd2 = 1.0 - d * d
    kd3 = -b * omd2 * (2.0 * sh * ch)
    kt3 = omega + 2.0 * a * d + 2.0 * b * d * (1.0 - 2.0 * sh * sh)
    if famp != 0.0:
        f = famp * sin(fomega * t_half + fphi)
        if f != 0.0:
            if d >= lim or d <= -lim:
                return 1
            root = sqrt(omd2)
            kd3 += -0.5 * f * root * sh
            kt3 += f * (d / root) * ch

    t_full = t + dt
    d = delta[0] + dt * kd3
    th = theta[0] + dt * kt3
    sh = sin(0.5 * th)
    ch = cos(0.5 * th)
    omd2 = 1.0 - d * d
    kd4 = -b * omd2 * (2.0 * sh * ch)
    kt4 = omega + 2.0 * a * d + 2.0 * b * d * (1.0 - 2.0 * sh * sh)
    if famp != 0.0:
        f = famp * sin(fomega * t_full + fphi)
        if f != 0.0:
            if d >= lim or d <= -lim:
                return 1
            root = sqrt(omd2)
            kd4 += -0.5 * f * root * sh
            kt4 += f * (d / root) * ch

    new_d = delta[0] + dt * (kd1 + 2.0 * (kd2 + kd3) + kd4) / 6.0
    theta[0] = theta[0] + dt * (kt1 + 2.0 * (kt2 + kt3) + kt4) / 6.0
    # overshoot clamp lands just inside the guard band: the lines at
    # delta = +-1 are invariant, so placing a state exactly on them would
    # freeze it there for good
    if new_d > 1.0:
        new_d = 1.0 - eps_guard
    elif new_d < -1.0:
        new_d = -1.0 + eps_guard
    delta[0] = new_d
    return 0


cdef inline int _bloch_step_const(double omega, double a, double b,
                                  double* delta, double* theta, double dt,
                                  double f, double eps_guard,
                                  int soft_pole) nogil:
    cdef double lim = 1.0 - eps_guard
    cdef double d, th, sh, ch, omd2, root
    cdef double kd1, kt1, kd2, kt2, kd3, kt3, kd4, kt4
    cdef double new_d

    d = delta[0]
    th = theta[0]
    sh = sin(0.5 * th)
    ch = cos(0.5 * th)
    omd2 = 1.0 - d * d
    kd1 = -b * omd2 * (2.0 * sh * ch)
    kt1 = omega + 2.0 * a * d + 2.0 * b * d * (1.0 - 2.0 * sh * sh)
    if f != 0.0:
        if d >= lim or d <= -lim:
            if not soft_pole:
                return 1
        else:
            root = sqrt(omd2)
            kd1 += -0.5 * f * root * sh
            kt1 += f * (d / root) * ch

    d = delta[0] + 0.5 * dt * kd1
    th = theta[0] + 0.5 * dt * kt1
    sh = sin(0.5 * th)
    ch = cos(0.5 * th)
    omd2 = 1.0 - d * d
    kd2 = -b * omd2 * (2.0 * sh * ch)
    kt2 = omega + 2.0 * a * d + 2.0 * b * d * (1.0 - 2.0 * sh * sh)
    if f != 0.0:
        if d >= lim or d <= -lim:
            if not soft_pole:
                return 1
        else:
            root = sqrt(omd2)
            kd2 += -0.5 * f * root * sh
            kt2 += f * (d / root) * ch

    d = delta[0] + 0.5 * dt * kd2
    th = theta[0] + 0.5 * dt * kt2
    sh = sin(0.5 * th)
    ch = cos(0.5 * th)
    omd2 = 1.0 - d * d
    kd3 = -b * omd2 * (2.0 * sh * ch)
    kt3 = omega + 2.0 * a * d + 2.0 * b * d * (1.0 - 2.0 * sh * sh)
    if f != 0.0:
        if d >= lim or d <= -lim:
            if not soft_pole:
                return 1
        else:
            root = sqrt(omd2)
            kd3 += -0.5 * f * root * sh
            kt3 += f * (d / root) * ch

    d = delta[0] + dt * kd3
    th = theta[0] + dt * kt3
    sh = sin(0.5 * th)
    ch = cos(0.5 * th)
    omd2 = 1.0 - d * d
    kd4 = -b * omd2 * (2.0 * sh * ch)
    kt4 = omega + 2.0 * a * d + 2.0 * b * d * (1.0 - 2.0 * sh * sh)
    if f != 0.0:
        if d >= lim or d <= -lim:
            if not soft_pole:
                return 1
        else:
            root = sqrt(omd2)
            kd4 += -0.5 * f * root * sh
            kt4 += f * (d / root) * ch

    new_d = delta[0] + dt * (kd1 + 2.0 * (kd2 + kd3) + kd4) / 6.0
    theta[0] = theta[0] + dt * (kt1 + 2.0 * (kt2 + kt3) + kt4) / 6.0
    # overshoot clamp lands just inside the guard band: the lines at
    # delta = +-1 are invariant, so placing a state exactly on them would
    # freeze it there for good
    if new_d > 1.0:
        new_d = 1.0 - eps_guard
    elif new_d < -1.0:
        new_d = -1.0 + eps_guard
    delta[0] = new_d
    return 0


cdef inline void _duffing_step(double famp, double fomega,
                               double* x, double* v, double t,
                               double dt) nogil:
    cdef double kx1, kv1, kx2, kv2, kx3, kv3, kx4, kv4
    cdef double x2, x3, x4, t_half, t_full

    kx1 = v[0]
    kv1 = -x[0] + x[0] * x[0] * x[0] + famp * sin(fomega * t)

    t_half = t + 0.5 * dt
    x2 = x[0] + 0.5 * dt * kx1
    kx2 = v[0] + 0.5 * dt * kv1
    kv2 = -x2 + x2 * x2 * x2 + famp * sin(fomega * t_half)

    x3 = x[0] + 0.5 * dt * kx2
    kx3 = v[0] + 0.5 * dt * kv2
    kv3 = -x3 + x3 * x3 * x3 + famp * sin(fomega * t_half)

    t_full = t + dt
    x4 = x[0] + dt * kx3
    kx4 = v[0] + dt * kv3
    kv4 = -x4 + x4 * x4 * x4 + famp * sin(fomega * t_full)

    x[0] = x[0] + dt * (kx1 + 2.0 * (kx2 + kx3) + kx4) / 6.0
    v[0] = v[0] + dt * (kv1 + 2.0 * (kv2 + kv3) + kv4) / 6.0


cdef inline void _slowflow_step(double famp, double delta, double coef,
                                double* amp, double* phi, double dt) nogil:
    cdef double ka1, kp1, ka2, kp2, ka3, kp3, ka4, kp4
    cdef double a2, p2, a3, p3, a4, p4

    ka1 = -0.5 * famp * cos(phi[0])
    kp1 = -0.5 * delta - coef * amp[0] * amp[0]

    a2 = amp[0] + 0.5 * dt * ka1
    p2 = phi[0] + 0.5 * dt * kp1
    ka2 = -0.5 * famp * cos(p2)
    kp2 = -0.5 * delta - coef * a2 * a2

    a3 = amp[0] + 0.5 * dt * ka2
    p3 = phi[0] + 0.5 * dt * kp2
    ka3 = -0.5 * famp * cos(p3)
    kp3 = -0.5 * delta - coef * a3 * a3

    a4 = amp[0] + dt * ka3
    p4 = phi[0] + dt * kp3
    ka4 = -0.5 * famp * cos(p4)
    kp4 = -0.5 * delta - coef * a4 * a4

    amp[0] = amp[0] + dt * (ka1 + 2.0 * (ka2 + ka3) + ka4) / 6.0
    phi[0] = phi[0] + dt * (kp1 + 2.0 * (kp2 + kp3) + kp4) / 6.0


def bloch_traj(double omega, double a, double b, double delta, double theta,
               double t0, double dt, long n_steps, long stride,
               double famp, double fomega, double fphi, double eps_guard):
    """Integrate the two-mode flow with an optional harmonic odd drive."""
    cdef long n_out = n_steps // stride + 1
    out_d_arr = np.empty(n_out)
    out_th_arr = np.empty(n_out)
    cdef double[::1] out_d = out_d_arr
    cdef double[::1] out_th = out_th_arr
    cdef long i, j, steps_done = 0
    cdef int status = 0
    cdef double t

    out_d[0] = delta
    out_th[0] = theta
    j = 1
    with nogil:
        for i in range(n_steps):
            t = t0 + i * dt
            if _bloch_step(omega, a, b, &delta, &theta, t, dt,
                           famp, fomega, fphi, eps_guard):
                status = 1
                break
            steps_done = i + 1
            if steps_done % stride == 0:
                out_d[j] = delta
                out_th[j] = theta
                j += 1
    return out_d_arr, out_th_arr, status, steps_done


def bloch_noise_traj(double omega, double a, double b, double delta,
                     double theta, double t0, double dt, long n_sub,
                     double[::1] xi, long stride, double eps_guard,
                     int soft_pole=0):
    """Integrate with a piecewise-constant odd drive (one value per block).

    With ``soft_pole`` the drive terms are dropped for stages inside the
    guard band at delta = +-1 instead of aborting the run.
    """
    cdef long n_steps = xi.shape[0] * n_sub
    cdef long n_out = n_steps // stride + 1
    out_d_arr = np.empty(n_out)
    out_th_arr = np.empty(n_out)
    cdef double[::1] out_d = out_d_arr
    cdef double[::1] out_th = out_th_arr
    cdef long i, j, steps_done = 0
    cdef int status = 0
    cdef double f

    out_d[0] = delta
    out_th[0] = theta
    j = 1
    with nogil:
        for i in range(n_steps):
            f = xi[i // n_sub]
            if _bloch_step_const(omega, a, b, &delta, &theta, dt,
                                 f, eps_guard, soft_pole):
                status = 1
                break
            steps_done = i + 1
            if steps_done % stride == 0:
                out_d[j] = delta
                out_th[j] = theta
                j += 1
    return out_d_arr, out_th_arr, status, steps_done


def bloch_detect_crossing(double omega, double a, double b, double e_sep,
                          double margin, double delta, double theta,
                          double t0, double dt, long n_steps,
                          double famp, double fomega, double fphi,
                          double eps_guard):
    """Run until the state visits the core of the opposite well loop."""
    cdef long parity0 = (<long>floor(theta / _TWO_PI + 0.5)) & 1
    cdef double e_core = e_sep - margin
    cdef long i
    cdef double t, e
    cdef int crossed = 0, singular = 0

    with nogil:
        for i in range(n_steps):
            t = t0 + i * dt
            if _bloch_step(omega, a, b, &delta, &theta, t, dt,
                           famp, fomega, fphi, eps_guard):
                singular = 1
                break
            e = omega * delta + a * delta * delta \
                - b * (1.0 - delta * delta) * cos(theta)
            if e < e_core:
                if ((<long>floor(theta / _TWO_PI + 0.5)) & 1) != parity0:
                    crossed = 1
                    break
    if singular:
        return 2, t0 + i * dt
    if crossed:
        return 0, t0 + (i + 1) * dt
    return 1, t0 + n_steps * dt


def duffing_traj(double famp, double fomega, double x, double v, double t0,
                 double dt, long n_steps, long stride):
    """Integrate the driven soft unit oscillator xddot = -x + x^3 + drive."""
    cdef long n_out = n_steps // stride + 1
    out_x_arr = np.empty(n_out)
    out_v_arr = np.empty(n_out)
    cdef double[::1] out_x = out_x_arr
    cdef double[::1] out_v = out_v_arr
    cdef long i, j
    cdef double t

    out_x[0] = x
    out_v[0] = v
    j = 1
    with nogil:
        for i in range(n_steps):
            t = t0 + i * dt
            _duffing_step(famp, fomega, &x, &v, t, dt)
            if (i + 1) % stride == 0:
                out_x[j] = x
                out_v[j] = v
                j += 1
    return out_x_arr, out_v_arr


def duffing_escape(double famp, double fomega, double x, double v, double t0,
                   double dt, long n_steps):
    """First sample time with |x| >= 1, or -1.0 if none within the horizon."""
    cdef long i
    cdef double t
    cdef int escaped = 0

    with nogil:
        for i in range(n_steps):
            t = t0 + i * dt
            _duffing_step(famp, fomega, &x, &v, t, dt)
            if x >= 1.0 or x <= -1.0:
                escaped = 1
                break
    if escaped:
        return t0 + (i + 1) * dt
    return -1.0


def slowflow_traj(double famp, double delta, double coef, double amp,
                  double phi, double t0, double dt, long n_steps,
                  long stride):
    """Integrate the slow amplitude-phase equations."""
    cdef long n_out = n_steps // stride + 1
    out_a_arr = np.empty(n_out)
    out_p_arr = np.empty(n_out)
    cdef double[::1] out_a = out_a_arr
    cdef double[::1] out_p = out_p_arr
    cdef long i, j

    out_a[0] = amp
    out_p[0] = phi
    j = 1
    with nogil:
        for i in range(n_steps):
            _slowflow_step(famp, delta, coef, &amp, &phi, dt)
            if (i + 1) % stride == 0:
                out_a[j] = amp
                out_p[j] = phi
                j += 1
    return out_a_arr, out_p_arr


def slowflow_max_amp(double famp, double delta, double coef, double amp,
                     double phi, double dt, long n_steps,
                     double phi_lo, double phi_hi):
    """Track max amplitude; stop early at amp >= 1 or phase window exit."""
    cdef double max_amp = amp
    cdef double t_hit = -1.0
    cdef long i
    cdef int hit = 0

    with nogil:
        for i in range(n_steps):
            _slowflow_step(famp, delta, coef, &amp, &phi, dt)
            if amp > max_amp:
                max_amp = amp
            if amp >= 1.0:
                hit = 1
                t_hit = (i + 1) * dt
                break
            if phi < phi_lo or phi > phi_hi:
                break
    if hit:
        return max_amp, t_hit
    return max_amp, -1.0


def fp_evolve_steps(double[::1] w_left, double[::1] w_right,
                    double[::1] w_upper, double[::1] om_w, double[::1] om_u,
                    double[::1] d_face_w, double[::1] d_face_u,
                    double d_junc_w, double d_junc_u,
                    double h_w, double h_u, double dt, long n_steps):
    """Explicit conservative steps of the branched energy-diffusion equation.

    Operates in place; returns the total clipped negative mass.
    """
    cdef long nw = w_left.shape[0]
    cdef long nu = w_upper.shape[0]
    cdef double a_j = d_junc_w / (0.5 * h_w)
    cdef double b_j = d_junc_u / (0.5 * h_u)
    cdef double denom = 2.0 * a_j + b_j
    cdef double clipped = 0.0
    rho_l_arr = np.empty(nw)
    rho_r_arr = np.empty(nw)
    rho_u_arr = np.empty(nu)
    cdef double[::1] rho_l = rho_l_arr
    cdef double[::1] rho_r = rho_r_arr
    cdef double[::1] rho_u = rho_u_arr
    cdef long i, step
    cdef double rho_j, prev_l, prev_r, prev_u, cur_l, cur_r, cur_u

    with nogil:
        for step in range(n_steps):
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
