"""Harmonic-drive experiments: crossings, thresholds, layer width, statistics.

The drive is F(t) = F*sin(omega*t + phi) on the odd channel (diagonal channel
off).  A "crossing" is a visit to the opposite well's core: conservative
energy below e_sep - margin with the nearest loop center on the other side.
The core-visit criterion avoids false positives from the instantaneous energy
swinging across e_sep when F is comparable to the well depth.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from ._backend import kernels
from .errors import (
    BadInitialRegion,
    BracketFailed,
    DegenerateOccupancy,
    SingularAmplitudeTerm,
    WindowTooShort,
)
from .engine import (
    Trajectory,
    inverse_omega_integral,
    separatrix_orbit,
)
from .model import (
    EPS_DELTA_GUARD,
    ModelParams,
    PhaseState,
    classify_region,
    offdiag_coupling_rate,
)


@dataclass(frozen=True)
class HarmonicDrive:
    """Odd-channel drive F*sin(omega*t + phi)."""

    F: float
    omega: float
    phi: float = 0.0

    def __post_init__(self):
        if self.F < 0:
            raise ValueError("drive amplitude must be non-negative")
        if self.omega <= 0:
            raise ValueError("drive frequency must be positive")

    def value(self, t):
        return self.F * np.sin(self.omega * np.asarray(t) + self.phi)

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega


def default_margin(params: ModelParams) -> float:
    """Crossing margin: 5% of the well depth."""
    return 0.05 * (params.e_sep - params.e_minus)


def crossing_time(
    traj: Trajectory, params: ModelParams, margin: float | None = None
) -> float | None:
    """Earliest sample time at which the trajectory visits the opposite core.

    Raises
    ------
    BadInitialRegion
        If the trajectory does not start inside a well loop.
    """
    if margin is None:
        margin = default_margin(params)
    start = classify_region(
        PhaseState(float(traj.delta[0]), float(traj.theta[0])), params, margin
    )
    if not start.in_well:
        raise BadInitialRegion(f"trajectory starts in region {start.kind!r}")
    parity0 = 0 if start.kind == "left" else 1
    m = np.floor(traj.theta / (2.0 * math.pi) + 0.5).astype(np.int64)
    hits = (traj.energy < params.e_sep - margin) & ((m & 1) != parity0)
    idx = np.nonzero(hits)[0]
    if len(idx) == 0:
        return None
    return float(traj.t[idx[0]])


def detect_crossing(
    params: ModelParams,
    drive: HarmonicDrive,
    state0: PhaseState | None = None,
    t_max: float | None = None,
    margin: float | None = None,
    dt: float = 1e-3,
) -> float | None:
    """Streaming crossing detection (no trajectory storage).

    ``t_max`` defaults to 200 drive periods.  Returns the crossing time or
    None when the horizon is exhausted.
    """
    if state0 is None:
        state0 = PhaseState(params.delta0, 0.0)
    if margin is None:
        margin = default_margin(params)
    if t_max is None:
        t_max = 200.0 * drive.period
    region = classify_region(state0, params, margin)
    if not region.in_well:
        raise BadInitialRegion(f"start state lies in region {region.kind!r}")
    n_steps = int(round(t_max / dt))
    status, t = kernels.bloch_detect_crossing(
        params.Omega, params.A, params.B, params.e_sep, margin,
        state0.delta, state0.theta, 0.0, dt, n_steps,
        drive.F, drive.omega, drive.phi, EPS_DELTA_GUARD,
    )
    if status == 2:
        raise SingularAmplitudeTerm(f"guard band entered at t = {t}")
    return t if status == 0 else None


@dataclass(frozen=True)
class ThresholdScanConfig:
    """Settings for threshold bisection.

    ``t_max_periods`` is the detection horizon in drive periods; ``margin``
    of None means the 5%-of-well-depth default; the upper bracket doubles at
    most ``max_doublings`` times before giving up.
    """

    t_max_periods: float = 200.0
    f_lo: float = 0.0
    f_hi: float = 0.4
    bisection_iters: int = 20
    margin: float | None = None
    dt: float = 1e-3
    max_doublings: int = 8

    def __post_init__(self):
        if not self.f_lo < self.f_hi:
            raise ValueError("need f_lo < f_hi")
        if self.t_max_periods <= 0:
            raise ValueError("t_max_periods must be positive")


@dataclass(frozen=True)
class ThresholdResult:
    omega: float
    phi: float
    f_c: float
    bracket_width: float
    t_cross: float
    """Crossing time observed at the final upper bracket amplitude."""


def threshold_amplitude(
    params: ModelParams,
    omega: float,
    phi: float = 0.0,
    cfg: ThresholdScanConfig = ThresholdScanConfig(),
    state0: PhaseState | None = None,
) -> ThresholdResult:
    """Bisect the smallest amplitude that produces a crossing in the horizon.

    Raises
    ------
    BracketFailed
        If the lower bracket already crosses, or the upper bracket cannot be
        made to cross within ``max_doublings`` doublings.
    """
    t_max = cfg.t_max_periods * 2.0 * math.pi / omega
    margin = cfg.margin if cfg.margin is not None else default_margin(params)

    def probe(famp):
        return detect_crossing(
            params, HarmonicDrive(famp, omega, phi), state0=state0,
            t_max=t_max, margin=margin, dt=cfg.dt,
        )

    lo, hi = cfg.f_lo, cfg.f_hi
    if lo > 0.0 and probe(lo) is not None:
        raise BracketFailed(f"lower bracket F = {lo} already crosses")
    t_hi = probe(hi)
    doublings = 0
    while t_hi is None:
        if doublings >= cfg.max_doublings:
            raise BracketFailed(
                f"no crossing up to F = {hi} within {cfg.t_max_periods} "
                f"periods at omega = {omega}"
            )
        lo, hi = hi, 2.0 * hi
        t_hi = probe(hi)
        doublings += 1
    for _ in range(cfg.bisection_iters):
        mid = 0.5 * (lo + hi)
        t_mid = probe(mid)
        if t_mid is None:
            lo = mid
        else:
            hi, t_hi = mid, t_mid
    return ThresholdResult(
        omega=omega, phi=phi, f_c=0.5 * (lo + hi), bracket_width=hi - lo,
        t_cross=t_hi,
    )


def _threshold_job(args):
    params, omega, phi, cfg, state0 = args
    try:
        return threshold_amplitude(params, omega, phi, cfg, state0)
    except BracketFailed:
        return ThresholdResult(omega=omega, phi=phi, f_c=math.nan,
                               bracket_width=math.nan, t_cross=math.nan)


def threshold_curve(
    params: ModelParams,
    omegas,
    phi: float = 0.0,
    cfg: ThresholdScanConfig = ThresholdScanConfig(),
    workers: int = 1,
    state0: PhaseState | None = None,
) -> list[ThresholdResult]:
    """Threshold amplitudes over a frequency grid, sorted by frequency.

    Failed brackets yield NaN rows instead of raising.  With ``workers`` > 1
    the scan runs in separate processes; the output order is independent of
    the worker count.
    """
    oms = sorted(float(w) for w in omegas)
    jobs = [(params, w, phi, cfg, state0) for w in oms]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_threshold_job, jobs))
    else:
        results = [_threshold_job(j) for j in jobs]
    return results


def fig2_frequency_grid(params: ModelParams, n: int = 27) -> np.ndarray:
    """Default scan grid: omega/omega0 from 0.3 to 1.6."""
    return params.omega0 * np.linspace(0.3, 1.6, n)


@dataclass(frozen=True)
class MelnikovResult:
    """Stochastic-layer energy half-width from the separatrix integral.

    ``delta_e`` maximizes over the drive phase; ``delta_e_sine`` fixes the
    sine phase with the time origin at the loop vertex.  With that origin the
    coupling rate is odd in time, so the two values agree up to integration
    error; both are kept so the phase convention is explicit.
    """

    delta_e: float
    delta_e_sine: float
    omega: float
    famp: float


def melnikov_halfwidth(
    params: ModelParams,
    omega: float,
    famp: float = 1.0,
    eps_saddle: float = 1e-6,
    dt: float = 2e-4,
    tail_tol: float = 5e-3,
    loop: str = "left",
) -> MelnikovResult:
    """Layer half-width F * max_phi |integral of (dV/dt) sin(omega t + phi)|.

    The coupling rate is evaluated along the unperturbed separatrix orbit and
    Fourier-transformed at the drive frequency over the truncated window.

    Raises
    ------
    WindowTooShort
        If the integrand at the window ends exceeds ``tail_tol`` times its
        maximum (increase the window by lowering ``eps_saddle``).
    """
    if omega <= 0:
        raise ValueError("omega must be positive")
    orb = separatrix_orbit(params, loop=loop, eps_saddle=eps_saddle, dt=dt)
    vdot = offdiag_coupling_rate(orb.delta, orb.theta, params)
    vmax = float(np.max(np.abs(vdot)))
    tail = max(abs(float(vdot[0])), abs(float(vdot[-1])))
    if tail > tail_tol * vmax:
        raise WindowTooShort(
            f"integrand tail {tail:.2e} exceeds {tail_tol} * max "
            f"{vmax:.2e}; lower eps_saddle"
        )
    i_sin = trapezoid(vdot * np.sin(omega * orb.t), orb.t)
    i_cos = trapezoid(vdot * np.cos(omega * orb.t), orb.t)
    return MelnikovResult(
        delta_e=famp * math.hypot(i_sin, i_cos),
        delta_e_sine=famp * abs(i_sin),
        omega=omega,
        famp=famp,
    )


@dataclass(frozen=True)
class EnergyDistribution:
    """Energy density on a binned grid: w[i] over [edges[i], edges[i+1])."""

    edges: np.ndarray
    w: np.ndarray
    eta: float | None = None
    params: ModelParams | None = None
    meta: dict = field(default_factory=dict)

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    def total_mass(self) -> float:
        return float(np.sum(self.w * self.widths))


def layer_grid(
    params: ModelParams, delta_e: float, n_bins_well: int = 160
) -> np.ndarray:
    """Bin edges over [e_minus, e_sep + delta_e] with e_sep as an edge."""
    if delta_e <= 0:
        raise ValueError("delta_e must be positive")
    below = np.linspace(params.e_minus, params.e_sep, n_bins_well + 1)
    h = below[1] - below[0]
    n_layer = max(1, int(round(delta_e / h)))
    above = params.e_sep + (delta_e / n_layer) * np.arange(1, n_layer + 1)
    return np.concatenate((below, above))


def invariant_energy_distribution(
    params: ModelParams,
    delta_e: float,
    edges: np.ndarray | None = None,
    n_bins_well: int = 160,
) -> EnergyDistribution:
    """Uniform-phase-density energy distribution over the layer-bounded range.

    The density is eta*2/Omega(E) below the separatrix (both wells) and
    eta/Omega(E) inside the layer [e_sep, e_sep + delta_e]; eta normalizes
    the total mass to one.  Bin values are bin averages of the density.
    """
    if edges is None:
        edges = layer_grid(params, delta_e, n_bins_well)
    edges = np.asarray(edges, dtype=float)
    if not np.any(np.isclose(edges, params.e_sep, atol=1e-12)):
        raise ValueError("grid must contain e_sep as an edge")
    cache: dict = {}
    integrals = np.empty(len(edges) - 1)
    for i, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
        if hi <= params.e_sep + 1e-12:
            integrals[i] = 2.0 * inverse_omega_integral(
                params, lo, hi, "left", cache
            )
        else:
            integrals[i] = inverse_omega_integral(
                params, lo, hi, "upper", cache
            )
    eta = 1.0 / float(np.sum(integrals))
    w = eta * integrals / np.diff(edges)
    return EnergyDistribution(
        edges=edges, w=w, eta=eta, params=params,
        meta={"kind": "invariant", "delta_e": delta_e},
    )


def energy_histogram(traj: Trajectory, edges: np.ndarray) -> EnergyDistribution:
    """Normalized histogram of the conservative energy along a trajectory."""
    edges = np.asarray(edges, dtype=float)
    counts, _ = np.histogram(traj.energy, bins=edges)
    n = len(traj.energy)
    w = counts / (n * np.diff(edges))
    return EnergyDistribution(
        edges=edges, w=w, eta=None, params=traj.params,
        meta={"kind": "histogram", "n_samples": n,
              "n_outside": int(n - counts.sum())},
    )


@dataclass(frozen=True)
class OccupancyResult:
    mu: float
    linear_approx: float | None


def occupancy_fraction(
    dist: EnergyDistribution, e_star: float
) -> OccupancyResult:
    """Mass below ``e_star``, with the flat-bottom linear approximation.

    The linear approximation eta*(e_star - e_minus)/omega0 treats one well
    near its bottom (single-loop convention); the integral counts both wells,
    so the two differ by the well degeneracy as e_star approaches e_minus.
    """
    edges, w = dist.edges, dist.w
    if e_star < edges[0] - 1e-12:
        raise ValueError(f"e_star = {e_star} below the grid")
    e_star = min(e_star, float(edges[-1]))
    cover = np.clip(e_star - edges[:-1], 0.0, np.diff(edges))
    mu = float(np.sum(w * cover))
    approx = None
    if dist.eta is not None and dist.params is not None:
        approx = dist.eta * (e_star - dist.params.e_minus) / dist.params.omega0
    return OccupancyResult(mu=mu, linear_approx=approx)


def harmonic_transfer_time(tau: float, mu: float) -> float:
    """Order-of-magnitude inter-well transfer time tau/mu."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    if mu <= 0:
        raise DegenerateOccupancy(f"mu = {mu} (no occupancy)")
    return tau / mu
