"""Driven escape thresholds for the soft unit oscillator (toy companion).

The oscillator xddot + x - x^3 = F*sin(omega*t) started from rest shares the
soft nonlinearity of the two-mode system: its eigenfrequency decreases with
amplitude, which places the minimum of the escape threshold F_c(omega) below
the small-oscillation frequency.  Escape means reaching the saddle points of
x^2/2 - x^4/4 at |x| = 1.

The slow amplitude-phase reduction

    dA/dt   = -(F/2) cos(phi)
    dphi/dt = -delta/2 - (c/2) A^2,     A(0) = 0, phi(0) = pi

uses the amplitude-frequency slope c from Omega(A) = 1 - c*A^2.  The default
c = 3/16 matches the companion model equations; textbook first-order
averaging of this oscillator gives c = 3/8 and is available for comparison,
but all quoted numbers use the default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import BracketFailed

#: Amplitude-frequency slope c in Omega(A) = 1 - c*A^2.
FREQ_SLOPE_DEFAULT = 3.0 / 16.0
FREQ_SLOPE_AVERAGED = 3.0 / 8.0


@dataclass(frozen=True)
class DuffingTrajectory:
    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    escape_time: float | None

    def energy(self) -> np.ndarray:
        """Conserved energy v^2/2 + x^2/2 - x^4/4 of the unforced motion."""
        return 0.5 * self.v**2 + 0.5 * self.x**2 - 0.25 * self.x**4


def duffing_simulate(
    famp: float,
    omega: float,
    t_end: float,
    dt: float = 1e-3,
    stride: int = 1,
    x0: float = 0.0,
    v0: float = 0.0,
) -> DuffingTrajectory:
    """Integrate from rest; escape is the first sample with |x| >= 1."""
    if famp < 0 or omega <= 0:
        raise ValueError("need famp >= 0 and omega > 0")
    n_steps = int(round(t_end / dt))
    x, v = kernels.duffing_traj(famp, omega, x0, v0, 0.0, dt, n_steps, stride)
    t = stride * dt * np.arange(len(x))
    esc = np.nonzero(np.abs(x) >= 1.0)[0]
    escape_time = float(t[esc[0]]) if len(esc) else None
    return DuffingTrajectory(t=t, x=x, v=v, escape_time=escape_time)


def duffing_escape_time(
    famp: float, omega: float, t_max: float, dt: float = 1e-3,
    x0: float = 0.0, v0: float = 0.0,
) -> float | None:
    """Streaming escape detection without storing the trajectory."""
    n_steps = int(round(t_max / dt))
    t = kernels.duffing_escape(famp, omega, x0, v0, 0.0, dt, n_steps)
    return None if t < 0 else float(t)


def duffing_linear_threshold(delta: float) -> float:
    """Crude linear-resonance estimate |delta| of the escape threshold."""
    return abs(delta)


@dataclass(frozen=True)
class SlowFlowHistory:
    t: np.ndarray
    amp: np.ndarray
    phi: np.ndarray


def slow_flow_integrate(
    famp: float,
    delta: float,
    t_end: float,
    dt: float = 1e-3,
    stride: int = 1,
    freq_slope: float = FREQ_SLOPE_DEFAULT,
    cubic: bool = True,
    amp0: float = 0.0,
    phi0: float = math.pi,
) -> SlowFlowHistory:
    """History of the slow amplitude and phase.

    ``cubic=False`` drops the A^2 phase term (pure linear detuning drift).
    """
    if famp < 0:
        raise ValueError("famp must be non-negative")
    coef = 0.5 * freq_slope if cubic else 0.0
    n_steps = int(round(t_end / dt))
    amp, phi = kernels.slowflow_traj(
        famp, delta, coef, amp0, phi0, 0.0, dt, n_steps, stride
    )
    t = stride * dt * np.arange(len(amp))
    return SlowFlowHistory(t=t, amp=amp, phi=phi)


# phase window for the threshold search: the amplitude can only grow while
# cos(phi) < 0, so once phi leaves (pi/2 - pi, pi/2 + pi) the run is decided
_PHI_LO = 0.5 * math.pi - math.pi
_PHI_HI = 0.5 * math.pi + math.pi


def slow_flow_max_amp(
    famp: float,
    delta: float,
    t_max: float = 2000.0,
    dt: float = 1e-3,
    freq_slope: float = FREQ_SLOPE_DEFAULT,
) -> tuple[float, float | None]:
    """Peak slow amplitude and the time it first reaches 1 (None if never)."""
    coef = 0.5 * freq_slope
    n_steps = int(round(t_max / dt))
    max_amp, t_hit = kernels.slowflow_max_amp(
        famp, delta, coef, 0.0, math.pi, dt, n_steps, _PHI_LO, _PHI_HI
    )
    return float(max_amp), (None if t_hit < 0 else float(t_hit))


def slow_flow_threshold(
    delta: float,
    f_lo: float = 0.0,
    f_hi: float = 0.3,
    iters: int = 30,
    t_max: float = 2000.0,
    dt: float = 1e-3,
    freq_slope: float = FREQ_SLOPE_DEFAULT,
    max_doublings: int = 8,
) -> float:
    """Smallest F whose slow-flow amplitude reaches 1 (bisection)."""

    def reaches(famp):
        return slow_flow_max_amp(famp, delta, t_max, dt, freq_slope)[1] \
            is not None

    lo, hi = f_lo, f_hi
    doublings = 0
    while not reaches(hi):
        if doublings >= max_doublings:
            raise BracketFailed(f"no slow-flow escape up to F = {hi}")
        lo, hi = hi, 2.0 * hi
        doublings += 1
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if reaches(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def resonance_threshold_analytic(n_quad: int = 4096) -> float:
    """Closed-form resonant threshold (27/16) * I^-3 with
    I = integral_0^{pi/2} theta^(-2/3) cos(theta) d(theta).

    The substitution theta = u^3 absorbs the endpoint singularity; the
    remaining smooth integrand is handled by a composite Simpson rule with
    ``n_quad`` intervals (even).
    """
    if n_quad % 2:
        raise ValueError("n_quad must be even")
    u_max = (0.5 * math.pi) ** (1.0 / 3.0)
    u = np.linspace(0.0, u_max, n_quad + 1)
    f = 3.0 * np.cos(u**3)
    h = u_max / n_quad
    simpson = (h / 3.0) * (
        f[0] + f[-1] + 4.0 * np.sum(f[1:-1:2]) + 2.0 * np.sum(f[2:-1:2])
    )
    return (27.0 / 16.0) * simpson**-3


@dataclass(frozen=True)
class DuffingScanConfig:
    """Settings for the full-oscillator escape-threshold bisection."""

    t_max_periods: float = 400.0
    f_lo: float = 0.0
    f_hi: float = 0.3
    bisection_iters: int = 18
    dt: float = 1e-3
    max_doublings: int = 8


def duffing_threshold_numeric(
    omega: float, cfg: DuffingScanConfig = DuffingScanConfig()
) -> float:
    """Escape threshold of the full oscillator by bisection."""
    if omega <= 0:
        raise ValueError("omega must be positive")
    t_max = cfg.t_max_periods * 2.0 * math.pi / omega

    def escapes(famp):
        return duffing_escape_time(famp, omega, t_max, cfg.dt) is not None

    lo, hi = cfg.f_lo, cfg.f_hi
    doublings = 0
    while not escapes(hi):
        if doublings >= cfg.max_doublings:
            raise BracketFailed(
                f"no escape up to F = {hi} at omega = {omega}"
            )
        lo, hi = hi, 2.0 * hi
        doublings += 1
    for _ in range(cfg.bisection_iters):
        mid = 0.5 * (lo + hi)
        if escapes(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
