"""Numerical integration and orbit machinery for the two-mode flow.

Fixed-step classical RK4 throughout (the Hamiltonian is non-separable, so
simple splitting schemes do not apply); energy drift is monitored rather than
enforced.  Periods are found by event location on a section: linear bracket
from the sampled trajectory, refined by bisection with single RK4 steps.

Branches are labelled ``"left"`` / ``"right"`` (libration loops around
Theta = 0 and Theta = 2*pi) and ``"upper"`` (rotations above the separatrix).
On the upper branch the physical state is 4*pi-periodic in Theta, so the
orbit period is twice the time for Theta to advance by 2*pi; the reported
angular frequency 2*pi/T follows the same convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .errors import (
    EnergyOutOfRange,
    PeriodNotConverged,
    SingularAmplitudeTerm,
    StepUnderflow,
)
from .model import (
    EPS_DELTA_GUARD,
    ModelParams,
    PhaseState,
    energy_of,
    stationary_points,
)

WELL_CENTERS = {"left": 0.0, "right": 2.0 * math.pi}

#: Default near-separatrix exclusion for orbit construction, as a fraction of
#: the full energy span.
EPS_SEP_FRACTION = 1e-4


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step integrator settings.

    ``energy_tol`` is a diagnostic bound used by conservative-run checks and
    orbit validation, not an adaptive control.
    """

    dt: float = 1e-3
    method: str = "rk4"
    sample_stride: int = 1
    energy_tol: float = 1e-8

    def __post_init__(self):
        if self.dt <= 0:
            raise StepUnderflow(f"dt = {self.dt} must be positive")
        if self.method != "rk4":
            raise ValueError(f"unknown method {self.method!r}")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be >= 1")


@dataclass(frozen=True)
class Trajectory:
    """Time-ordered samples of the reduced state and its energy."""

    t: np.ndarray
    delta: np.ndarray
    theta: np.ndarray
    energy: np.ndarray
    params: ModelParams
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    @property
    def final_state(self) -> PhaseState:
        return PhaseState(float(self.delta[-1]), float(self.theta[-1]))


def _drive_kernel_args(drive):
    """Map a drive object to (famp, fomega, fphi) for the harmonic kernel.

    Returns None when the drive is a sampled noise path instead.
    """
    if drive is None:
        return 0.0, 0.0, 0.0
    if hasattr(drive, "samples"):
        return None
    return float(drive.F), float(drive.omega), float(drive.phi)


def integrate(
    params: ModelParams,
    drive,
    state0: PhaseState,
    t_end: float,
    cfg: IntegratorConfig = IntegratorConfig(),
    t0: float = 0.0,
    eps_delta: float = EPS_DELTA_GUARD,
    pole_policy: str = "strict",
) -> Trajectory:
    """Integrate the flow from ``state0`` for ``t_end`` time units.

    ``drive`` is None (conservative), a harmonic drive (attributes F, omega,
    phi), or a sampled noise path (attributes samples, dt, seed); noise
    values are held constant over each sample interval, which must be an
    integer multiple of ``cfg.dt``.

    ``pole_policy`` applies to noise drives only: "strict" aborts when the
    guard band at |delta| = 1 is entered (the odd-drive term is singular
    there), "soft" drops the drive terms for the offending stages and
    continues.  The poles are coordinate singularities of the reduced chart,
    not of the underlying two-mode state, and the energy is insensitive to
    the phase there, so "soft" is the appropriate choice for long stochastic
    runs; the harmonic path always rejects.

    Raises
    ------
    SingularAmplitudeTerm
        If the driven trajectory enters the guard band at |delta| = 1
        (harmonic drives, or noise drives under "strict").
    """
    n_steps = int(round(t_end / cfg.dt))
    if n_steps < 1:
        raise ValueError("t_end shorter than one step")
    stride = cfg.sample_stride
    meta = {"dt": cfg.dt, "stride": stride, "t0": t0}
    hargs = _drive_kernel_args(drive)
    if hargs is not None:
        famp, fomega, fphi = hargs
        if famp != 0.0:
            meta["drive"] = {"kind": "harmonic", "F": famp, "omega": fomega,
                             "phi": fphi}
        else:
            meta["drive"] = {"kind": "none"}
        delta, theta, status, steps_done = kernels.bloch_traj(
            params.Omega, params.A, params.B,
            state0.delta, state0.theta, t0, cfg.dt, n_steps, stride,
            famp, fomega, fphi, eps_delta,
        )
    else:
        n_sub = int(round(drive.dt / cfg.dt))
        if n_sub < 1 or abs(n_sub * cfg.dt - drive.dt) > 1e-9 * drive.dt:
            raise ValueError(
                f"noise sample interval {drive.dt} is not an integer "
                f"multiple of the integrator step {cfg.dt}"
            )
        n_samples_needed = -(-n_steps // n_sub)
        xi = np.asarray(drive.samples, dtype=float)
        if len(xi) < n_samples_needed:
            raise ValueError(
                f"noise path covers {len(xi) * drive.dt} time units, "
                f"need {t_end}"
            )
        xi = np.ascontiguousarray(xi[:n_samples_needed])
        n_steps = n_samples_needed * n_sub
        if pole_policy not in ("strict", "soft"):
            raise ValueError(f"unknown pole_policy {pole_policy!r}")
        meta["drive"] = {"kind": "noise", "noise_dt": drive.dt,
                         "s0": getattr(drive, "s0", None),
                         "cutoff": getattr(drive, "cutoff", None)}
        meta["seed"] = getattr(drive, "seed", None)
        meta["pole_policy"] = pole_policy
        delta, theta, status, steps_done = kernels.bloch_noise_traj(
            params.Omega, params.A, params.B,
            state0.delta, state0.theta, t0, cfg.dt, n_sub, xi, stride,
            eps_delta, int(pole_policy == "soft"),
        )
    if status != 0:
        raise SingularAmplitudeTerm(
            f"guard band |delta| >= 1 - {eps_delta} entered at "
            f"t = {t0 + steps_done * cfg.dt}"
        )
    t = t0 + stride * cfg.dt * np.arange(len(delta))
    energy = energy_of(delta, theta, params)
    return Trajectory(t=t, delta=delta, theta=theta, energy=energy,
                      params=params, meta=meta)


def section_start_delta(params: ModelParams, e: float, branch: str) -> float:
    """Upper intersection of the energy level with the branch's section line.

    On Theta = 0 (or 2*pi) the level set solves a quadratic in delta; the
    larger root is the starting point used for orbit construction on every
    branch.
    """
    apb = params.A + params.B
    disc = params.Omega**2 + 4.0 * apb * (params.B + e)
    if disc < 0:
        raise EnergyOutOfRange(f"no section intersection at E = {e}")
    return (-params.Omega + math.sqrt(disc)) / (2.0 * apb)


def _check_branch_energy(params, e, branch, eps_exclude):
    if branch in ("left", "right"):
        lo, hi = params.e_minus, params.e_sep
    elif branch == "upper":
        lo, hi = params.e_sep, params.e_plus
    else:
        raise ValueError(f"unknown branch {branch!r}")
    if not lo < e < hi:
        raise EnergyOutOfRange(
            f"E = {e} outside the open {branch} interval ({lo}, {hi})"
        )
    if abs(e - params.e_sep) < eps_exclude:
        raise PeriodNotConverged(
            f"E = {e} within the separatrix exclusion band "
            f"(+- {eps_exclude}); evaluate one-sided limits outside it"
        )


def _step_once(params, delta, theta, tau):
    """One conservative RK4 step of size tau; returns (delta, theta)."""
    d, th, status, _ = kernels.bloch_traj(
        params.Omega, params.A, params.B, delta, theta,
        0.0, tau, 1, 1, 0.0, 0.0, 0.0, EPS_DELTA_GUARD,
    )
    return float(d[1]), float(th[1])


def _refine_crossing(params, delta, theta, target, dt):
    """Bisect the up-crossing time of theta through ``target`` within a step.

    The state (delta, theta) is the sample just before the crossing
    (theta < target); one full step lands at or beyond it.
    """
    lo, hi = 0.0, dt
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        _, th = _step_once(params, delta, theta, mid)
        if th < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class PeriodicOrbit:
    """A closed orbit of the conservative flow, resampled uniformly in time.

    ``t`` holds n points 0, T/n, ..., T*(n-1)/n; the sample at T is omitted
    (it repeats the start).  On the upper branch T covers a 4*pi advance of
    Theta, the full period of the physical state.
    """

    e: float
    branch: str
    period: float
    omega: float
    t: np.ndarray
    delta: np.ndarray
    theta: np.ndarray
    params: ModelParams

    def observable(self, fn) -> np.ndarray:
        """Evaluate a (delta, theta) function along the orbit."""
        return np.asarray(fn(self.delta, self.theta))


def periodic_orbit(
    params: ModelParams,
    e: float,
    branch: str,
    dt: float = 1e-3,
    n_uniform: int = 4096,
    eps_exclude: float | None = None,
    energy_tol: float = 1e-6,
    period_cap: float = 2000.0,
) -> PeriodicOrbit:
    """Construct the closed orbit at energy ``e`` on the given branch.

    Raises
    ------
    EnergyOutOfRange
        If ``e`` lies outside the branch's open energy interval.
    PeriodNotConverged
        Inside the separatrix exclusion band, if the section return is not
        found within ``period_cap`` time units, or if the orbit energy
        wanders beyond ``energy_tol``.
    """
    if eps_exclude is None:
        eps_exclude = EPS_SEP_FRACTION * params.energy_span
    _check_branch_energy(params, e, branch, eps_exclude)
    theta_c = WELL_CENTERS.get(branch, 0.0)
    delta_start = section_start_delta(params, e, branch)
    target = theta_c + 2.0 * math.pi if branch == "upper" else theta_c

    # hunt for the bracketing step of the section up-crossing
    chunk = 20000
    delta, theta = delta_start, theta_c
    t_base = 0.0
    bracket = None
    seen_below = branch == "upper"
    while bracket is None:
        if t_base > period_cap:
            raise PeriodNotConverged(
                f"no section return within {period_cap} time units at "
                f"E = {e} ({branch})"
            )
        d_arr, th_arr, status, _ = kernels.bloch_traj(
            params.Omega, params.A, params.B, delta, theta,
            t_base, dt, chunk, 1, 0.0, 0.0, 0.0, EPS_DELTA_GUARD,
        )
        g = th_arr - target
        below = g < 0
        for i in range(chunk):
            if not seen_below:
                if below[i + 1]:
                    seen_below = True
                continue
            if below[i] and not below[i + 1]:
                bracket = (float(d_arr[i]), float(th_arr[i]),
                           t_base + i * dt)
                break
        delta, theta = float(d_arr[-1]), float(th_arr[-1])
        t_base += chunk * dt

    d_pre, th_pre, t_pre = bracket
    tau = _refine_crossing(params, d_pre, th_pre, target, dt)
    period = t_pre + tau
    if branch == "upper":
        period *= 2.0

    # uniform resampling over one full period
    m = max(1, math.ceil(period / n_uniform / dt))
    dt_res = period / (n_uniform * m)
    d_s, th_s, status, _ = kernels.bloch_traj(
        params.Omega, params.A, params.B, delta_start, theta_c,
        0.0, dt_res, n_uniform * m, m, 0.0, 0.0, 0.0, EPS_DELTA_GUARD,
    )
    delta_u = d_s[:-1].copy()
    theta_u = th_s[:-1].copy()
    e_samples = energy_of(delta_u, theta_u, params)
    wander = float(np.max(np.abs(e_samples - e)))
    if wander > energy_tol:
        raise PeriodNotConverged(
            f"orbit energy wander {wander:.3e} exceeds tol {energy_tol:.1e} "
            f"at E = {e} ({branch}); reduce dt"
        )
    t_u = (period / n_uniform) * np.arange(n_uniform)
    return PeriodicOrbit(
        e=e, branch=branch, period=period, omega=2.0 * math.pi / period,
        t=t_u, delta=delta_u, theta=theta_u, params=params,
    )


def libration_frequency(
    params: ModelParams, e: float, branch: str, **kwargs
) -> float:
    """Angular frequency 2*pi/T of the closed orbit at energy ``e``."""
    kwargs.setdefault("n_uniform", 512)
    return periodic_orbit(params, e, branch, **kwargs).omega


def orbit_fourier(
    orbit: PeriodicOrbit, observable, k_max: int, alias_tol: float = 1e-6
) -> np.ndarray:
    """Harmonics V_k, k = 0..k_max, of an observable along the orbit.

    The observable is expanded as V(t) = sum_k V_k exp(-i k Omega t) with
    Omega the orbit frequency; for real observables V_{-k} = conj(V_k), so
    only k >= 0 is returned.

    Warns
    -----
    AliasWarning
        If the top harmonic carries more than ``alias_tol`` of the returned
        power, indicating an under-resolved expansion.
    """
    from .errors import AliasWarning
    import warnings

    vals = orbit.observable(observable)
    n = len(vals)
    if not np.all(np.isfinite(vals)):
        raise ValueError("observable not finite along the orbit")
    if k_max >= n // 2:
        raise ValueError(f"k_max = {k_max} needs more than {n} samples")
    coeffs = np.conj(np.fft.rfft(vals))[: k_max + 1] / n
    power = np.abs(coeffs) ** 2
    total = float(np.sum(power))
    if total > 0 and power[-1] > alias_tol * total:
        warnings.warn(
            f"harmonic k_max={k_max} holds {power[-1] / total:.2e} of the "
            "returned power",
            AliasWarning,
            stacklevel=2,
        )
    return coeffs


# 8-point Gauss-Legendre nodes/weights on [0, 1]
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


def inverse_omega_integral(
    params: ModelParams, lo: float, hi: float, branch: str,
    omega_cache: dict | None = None,
) -> float:
    """Integral of dE/Omega(E) over [lo, hi] on one branch.

    Fixed Gauss-Legendre quadrature; nodes are kept strictly off the
    separatrix energy (the 1/Omega divergence there is logarithmic, so the
    clamped nodes bias the integral by far less than the bin tolerances this
    feeds).  ``omega_cache`` memoizes frequency evaluations across bins.
    """
    if omega_cache is None:
        omega_cache = {}
    span = params.energy_span
    total = 0.0
    for x, wgt in zip(_GL_X, _GL_W):
        e = lo + (hi - lo) * x
        if branch == "upper":
            e = min(max(e, params.e_sep + 1e-9 * span),
                    params.e_plus - 1e-12)
        else:
            e = min(max(e, params.e_minus + 1e-12),
                    params.e_sep - 1e-9 * span)
        key = (branch, e)
        om = omega_cache.get(key)
        if om is None:
            om = libration_frequency(
                params, e, branch, eps_exclude=1e-10 * span, n_uniform=64
            )
            omega_cache[key] = om
        total += wgt / om
    return total * (hi - lo)


@dataclass(frozen=True)
class SeparatrixOrbit:
    """The heteroclinic orbit at E = e_sep around one well loop.

    Time runs from -t_w to +t_w with the loop's inner vertex at t = 0; both
    ends stop where delta reaches -1 + eps_saddle (the saddle line).  Built
    by forward integration from the vertex plus the exact time-reflection
    symmetry theta -> 2*theta_center - theta of the conservative flow.
    """

    t: np.ndarray
    delta: np.ndarray
    theta: np.ndarray
    params: ModelParams
    loop: str
    eps_saddle: float

    @property
    def energy(self) -> np.ndarray:
        return energy_of(self.delta, self.theta, self.params)


def separatrix_orbit(
    params: ModelParams,
    loop: str = "left",
    eps_saddle: float = 1e-6,
    dt: float = 2e-4,
    t_cap: float = 200.0,
) -> SeparatrixOrbit:
    """Construct the separatrix orbit of one well loop.

    Raises
    ------
    PeriodNotConverged
        If the saddle approach (delta <= -1 + eps_saddle) stalls beyond
        ``t_cap`` time units, e.g. for an eps_saddle below the integration
        accuracy.
    """
    if loop not in WELL_CENTERS:
        raise ValueError(f"loop must be 'left' or 'right', got {loop!r}")
    if eps_saddle <= 0:
        raise ValueError("eps_saddle must be positive")
    lm = stationary_points(params)
    theta_c = WELL_CENTERS[loop]
    stop = -1.0 + eps_saddle

    chunk = 20000
    delta, theta = lm.vertex_delta, theta_c
    pieces_d = [np.array([delta])]
    pieces_th = [np.array([theta])]
    t_base = 0.0
    n_total = 0
    hit = None
    while hit is None:
        if t_base > t_cap:
            raise PeriodNotConverged(
                f"saddle approach stalled: delta > -1 + {eps_saddle} "
                f"after {t_cap} time units"
            )
        d_arr, th_arr, status, _ = kernels.bloch_traj(
            params.Omega, params.A, params.B, delta, theta,
            t_base, dt, chunk, 1, 0.0, 0.0, 0.0, EPS_DELTA_GUARD,
        )
        reached = np.nonzero(d_arr[1:] <= stop)[0]
        if len(reached):
            k = int(reached[0]) + 1
            pieces_d.append(d_arr[1 : k + 1])
            pieces_th.append(th_arr[1 : k + 1])
            n_total += k
            hit = True
        else:
            pieces_d.append(d_arr[1:])
            pieces_th.append(th_arr[1:])
            n_total += chunk
        delta, theta = float(d_arr[-1]), float(th_arr[-1])
        t_base += chunk * dt

    d_fwd = np.concatenate(pieces_d)
    th_fwd = np.concatenate(pieces_th)
    t_fwd = dt * np.arange(len(d_fwd))
    # mirror through the vertex: the flow is symmetric under
    # (t, theta) -> (-t, 2*theta_c - theta) at fixed delta
    t_full = np.concatenate((-t_fwd[:0:-1], t_fwd))
    d_full = np.concatenate((d_fwd[:0:-1], d_fwd))
    th_full = np.concatenate((2.0 * theta_c - th_fwd[:0:-1], th_fwd))
    return SeparatrixOrbit(
        t=t_full, delta=d_full, theta=th_full, params=params, loop=loop,
        eps_saddle=eps_saddle,
    )
