"""Broadband-noise physics: energy diffusion, Langevin runs, branched
Fokker-Planck evolution, and band-limited locking.

Spectral-density convention: two-sided, S(w) = (1/2pi) * FT of the noise
autocovariance, so white noise of level S0 means <xi(t) xi(t')> =
2*pi*S0*delta(t - t').  Discretely, one sample per interval ``dt`` drawn
i.i.d. with variance 2*pi*S0/dt.  Under this convention the short-time
energy variance of a driven ensemble grows as 2*Omega(E)*D(E)*S0*t with the
diffusion coefficient

    D(E) = 2*pi*Omega(E) * sum_k k^2 |V_k|^2 = (1/2) * integral over one
           period of (dV/dt)^2,

where V = sqrt(1-Delta^2)*cos(Theta/2) is the odd-channel coupling and the
harmonics are taken over the full state period (4*pi advance of Theta on the
upper branch).  D is discontinuous at the separatrix, D(e_sep+0) =
2*D(e_sep-0): the two well loops merge into one rotation whose period covers
both paired coupling pulses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CFLViolation,
    CutoffAboveNyquist,
    DegenerateProfile,
    RootNotBracketed,
)
from ._backend import kernels
from .engine import (
    IntegratorConfig,
    Trajectory,
    integrate,
    inverse_omega_integral,
    libration_frequency,
    orbit_fourier,
    periodic_orbit,
)
from .model import ModelParams, PhaseState, offdiag_coupling, \
    offdiag_coupling_rate


@dataclass(frozen=True)
class NoisePath:
    """Sampled noise drive: one value per interval of length ``dt``."""

    samples: np.ndarray
    dt: float
    s0: float
    cutoff: float | None
    seed: int

    @property
    def duration(self) -> float:
        return len(self.samples) * self.dt


def white_noise_path(
    seed: int, dt: float, n: int, s0: float = 1.0,
    cutoff: float | None = None,
) -> NoisePath:
    """Generate a flat-spectrum noise path of ``n`` samples.

    Without a cutoff the samples are i.i.d. normal with variance
    2*pi*s0/dt.  With a cutoff the path is synthesized from a flat spectrum
    truncated at the cutoff (random spectral phases), which preserves the
    level s0 below the cutoff and suppresses everything above it.

    Raises
    ------
    CutoffAboveNyquist
        If ``cutoff`` is at or above pi/dt.
    """
    if dt <= 0 or n < 1:
        raise ValueError("need dt > 0 and n >= 1")
    if s0 < 0:
        raise ValueError("s0 must be non-negative")
    rng = np.random.default_rng(seed)
    if cutoff is None:
        samples = math.sqrt(2.0 * math.pi * s0 / dt) * rng.standard_normal(n)
    else:
        nyquist = math.pi / dt
        if cutoff >= nyquist:
            raise CutoffAboveNyquist(
                f"cutoff {cutoff} >= pi/dt = {nyquist}"
            )
        freqs = 2.0 * math.pi * np.fft.rfftfreq(n, dt)
        amp = np.where(
            freqs <= cutoff, math.sqrt(2.0 * math.pi * s0 * n / dt), 0.0
        )
        re = rng.standard_normal(len(freqs))
        im = rng.standard_normal(len(freqs))
        spec = amp * (re + 1j * im) / math.sqrt(2.0)
        spec[0] = amp[0] * re[0]
        if n % 2 == 0:
            spec[-1] = amp[-1] * re[-1]
        samples = np.fft.irfft(spec, n)
    return NoisePath(samples=samples, dt=dt, s0=s0, cutoff=cutoff, seed=seed)


def periodogram(path: NoisePath, n_segments: int = 64):
    """Averaged-periodogram estimate of the two-sided spectral density.

    Returns (omega, s_est) over the resolved band; segment averaging trades
    resolution for variance.
    """
    n = len(path.samples)
    seg = n // n_segments
    if seg < 8:
        raise ValueError("too few samples per segment")
    freqs = 2.0 * math.pi * np.fft.rfftfreq(seg, path.dt)
    acc = np.zeros(len(freqs))
    for k in range(n_segments):
        x = path.samples[k * seg : (k + 1) * seg]
        acc += np.abs(np.fft.rfft(x)) ** 2
    s_est = acc * path.dt / (2.0 * math.pi * seg * n_segments)
    return freqs, s_est


def langevin_simulate(
    params: ModelParams,
    noise: NoisePath,
    state0: PhaseState,
    t_end: float,
    cfg: IntegratorConfig = IntegratorConfig(),
    pole_policy: str = "soft",
) -> Trajectory:
    """Integrate the flow with the noise path on the odd drive channel.

    Deterministic given the path (and hence its seed); the noise value is
    held constant over each sample interval, which must be an integer
    multiple of ``cfg.dt``.  Long runs cross the separatrix many times and
    occasionally graze the coordinate poles at delta = +-1, so the default
    pole policy is "soft" (see `selftrap.engine.integrate`); pass "strict"
    to abort on pole contact instead.
    """
    return integrate(params, noise, state0, t_end, cfg,
                     pole_policy=pole_policy)


def diffusion_coefficient(
    params: ModelParams,
    e: float,
    branch: str,
    method: str = "fourier",
    k_max: int = 256,
    n_uniform: int = 4096,
    eps_exclude: float | None = None,
) -> float:
    """Energy diffusion coefficient for unit spectral density.

    ``method="fourier"`` sums 2*pi*Omega*k^2*|V_k|^2 over the orbit
    harmonics; ``method="time"`` evaluates (1/2) * integral of (dV/dt)^2
    over one period.  The two agree by Parseval and are kept as independent
    routes.
    """
    orb = periodic_orbit(
        params, e, branch, n_uniform=n_uniform, eps_exclude=eps_exclude
    )
    if method == "time":
        vdot = offdiag_coupling_rate(orb.delta, orb.theta, params)
        return float(
            0.5 * np.sum(vdot * vdot) * (orb.period / len(vdot))
        )
    if method == "fourier":
        coeffs = orbit_fourier(orb, offdiag_coupling, k_max)
        k = np.arange(k_max + 1, dtype=float)
        return float(
            2.0 * math.pi * orb.omega
            * np.sum(k * k * np.abs(coeffs) ** 2)
        )
    raise ValueError(f"unknown method {method!r}")


def diffusion_coefficient_bandlimited(
    params: ModelParams,
    e: float,
    branch: str,
    omega_cut: float,
    k_max: int = 256,
    n_uniform: int = 4096,
    eps_exclude: float | None = None,
) -> float:
    """Diffusion coefficient when the noise spectrum stops at ``omega_cut``.

    Only harmonics with k*Omega(E) < omega_cut contribute; the value is zero
    once the fundamental exceeds the cutoff.
    """
    if omega_cut <= 0:
        raise ValueError("omega_cut must be positive")
    orb = periodic_orbit(
        params, e, branch, n_uniform=n_uniform, eps_exclude=eps_exclude
    )
    coeffs = orbit_fourier(orb, offdiag_coupling, k_max)
    k = np.arange(k_max + 1, dtype=float)
    keep = k * orb.omega < omega_cut
    keep[0] = False
    return float(
        2.0 * math.pi * orb.omega
        * np.sum(k[keep] ** 2 * np.abs(coeffs[keep]) ** 2)
    )


def locking_energy(
    params: ModelParams, omega_cut: float, tol: float = 1e-8
) -> float:
    """Energy on the upper branch where Omega(E) reaches the noise cutoff.

    Above this energy a spectrum cut at ``omega_cut`` drives no diffusion.

    Raises
    ------
    RootNotBracketed
        If Omega(E) does not cross ``omega_cut`` on the upper branch.
    """
    span = params.energy_span
    lo = params.e_sep + 1e-7 * span
    hi = params.e_plus - 1e-9 * span
    excl = 1e-8 * span

    def f(e):
        return libration_frequency(
            params, e, "upper", eps_exclude=excl, n_uniform=64
        ) - omega_cut

    f_lo, f_hi = f(lo), f(hi)
    if f_lo * f_hi > 0:
        raise RootNotBracketed(
            f"Omega(E) - {omega_cut} keeps one sign on "
            f"[{lo}, {hi}]: [{f_lo:+.3e}, {f_hi:+.3e}]"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f_lo * f(mid) <= 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class DiffusionProfile:
    """Omega(E) and D(E) tabulated on branched finite-volume grids.

    Cell centers carry Omega and D per branch (the well grid is shared by
    both wells); interior faces carry the D values the conservative solver
    differences; the junction uses the one-sided limits D(e_sep -+ eps).
    """

    well_edges: np.ndarray
    upper_edges: np.ndarray
    omega_well: np.ndarray
    omega_upper: np.ndarray
    d_well: np.ndarray
    d_upper: np.ndarray
    d_face_well: np.ndarray
    d_face_upper: np.ndarray
    d_junction_well: float
    d_junction_upper: float
    eps_junction: float
    method: str
    cutoff: float | None
    params: ModelParams

    @property
    def h_well(self) -> float:
        return float(self.well_edges[1] - self.well_edges[0])

    @property
    def h_upper(self) -> float:
        return float(self.upper_edges[1] - self.upper_edges[0])


def diffusion_profile(
    params: ModelParams,
    n_well: int = 64,
    n_upper: int = 128,
    method: str = "time",
    cutoff: float | None = None,
    eps_junction: float | None = None,
    n_uniform: int = 2048,
) -> DiffusionProfile:
    """Tabulate Omega(E) and D(E) for the branched diffusion solver."""
    span = params.energy_span
    if eps_junction is None:
        eps_junction = 1e-3 * span
    well_edges = np.linspace(params.e_minus, params.e_sep, n_well + 1)
    upper_edges = np.linspace(params.e_sep, params.e_plus, n_upper + 1)
    excl = 1e-7 * span

    def d_of(e, branch):
        if cutoff is not None:
            return diffusion_coefficient_bandlimited(
                params, e, branch, cutoff,
                n_uniform=n_uniform, eps_exclude=excl,
            )
        return diffusion_coefficient(
            params, e, branch, method=method,
            n_uniform=n_uniform, eps_exclude=excl,
        )

    def om_of(e, branch):
        return libration_frequency(
            params, e, branch, eps_exclude=excl, n_uniform=64
        )

    span_lo = params.e_minus + 1e-9 * span
    span_hi = params.e_plus - 1e-9 * span

    def clamp(e, branch):
        if branch == "left":
            return min(max(e, span_lo), params.e_sep - excl)
        return min(max(e, params.e_sep + excl), span_hi)

    wc = 0.5 * (well_edges[1:] + well_edges[:-1])
    uc = 0.5 * (upper_edges[1:] + upper_edges[:-1])
    omega_well = np.array([om_of(clamp(e, "left"), "left") for e in wc])
    omega_upper = np.array([om_of(clamp(e, "upper"), "upper") for e in uc])
    d_well = np.array([d_of(clamp(e, "left"), "left") for e in wc])
    d_upper = np.array([d_of(clamp(e, "upper"), "upper") for e in uc])
    d_face_well = np.array(
        [d_of(clamp(e, "left"), "left") for e in well_edges[1:-1]]
    )
    d_face_upper = np.array(
        [d_of(clamp(e, "upper"), "upper") for e in upper_edges[1:-1]]
    )
    d_junc_w = d_of(params.e_sep - eps_junction, "left")
    d_junc_u = d_of(params.e_sep + eps_junction, "upper")
    return DiffusionProfile(
        well_edges=well_edges, upper_edges=upper_edges,
        omega_well=omega_well, omega_upper=omega_upper,
        d_well=d_well, d_upper=d_upper,
        d_face_well=d_face_well, d_face_upper=d_face_upper,
        d_junction_well=float(d_junc_w), d_junction_upper=float(d_junc_u),
        eps_junction=eps_junction, method=method, cutoff=cutoff,
        params=params,
    )


@dataclass(frozen=True)
class BranchedDensity:
    """Per-branch energy densities on the profile grids.

    ``w_left`` and ``w_right`` are per-well densities; total probability is
    sum over both wells plus the upper branch.
    """

    well_edges: np.ndarray
    upper_edges: np.ndarray
    w_left: np.ndarray
    w_right: np.ndarray
    w_upper: np.ndarray
    meta: dict = field(default_factory=dict)

    def total_mass(self) -> float:
        h_w = self.well_edges[1] - self.well_edges[0]
        h_u = self.upper_edges[1] - self.upper_edges[0]
        return float(
            (np.sum(self.w_left) + np.sum(self.w_right)) * h_w
            + np.sum(self.w_upper) * h_u
        )

    def max_abs_diff(self, other: "BranchedDensity") -> float:
        return float(
            max(
                np.max(np.abs(self.w_left - other.w_left)),
                np.max(np.abs(self.w_right - other.w_right)),
                np.max(np.abs(self.w_upper - other.w_upper)),
            )
        )


def stationary_branched(profile: DiffusionProfile) -> BranchedDensity:
    """Stationary density w proportional to 1/Omega per branch, normalized.

    Uses the profile's own tabulated frequencies so the discrete fluxes of
    `fp_evolve` vanish identically on this state.
    """
    h_w = profile.h_well
    h_u = profile.h_upper
    inv_w = 1.0 / profile.omega_well
    inv_u = 1.0 / profile.omega_upper
    eta = 1.0 / (2.0 * np.sum(inv_w) * h_w + np.sum(inv_u) * h_u)
    return BranchedDensity(
        well_edges=profile.well_edges, upper_edges=profile.upper_edges,
        w_left=eta * inv_w, w_right=eta * inv_w.copy(),
        w_upper=eta * inv_u, meta={"eta": eta},
    )


def delta_density(
    profile: DiffusionProfile, branch: str, e0: float
) -> BranchedDensity:
    """Unit mass concentrated in the cell containing ``e0`` of one branch."""
    w_l = np.zeros(len(profile.omega_well))
    w_r = np.zeros(len(profile.omega_well))
    w_u = np.zeros(len(profile.omega_upper))
    if branch in ("left", "right"):
        idx = int(np.clip(
            np.searchsorted(profile.well_edges, e0) - 1, 0, len(w_l) - 1
        ))
        target = w_l if branch == "left" else w_r
        target[idx] = 1.0 / profile.h_well
    elif branch == "upper":
        idx = int(np.clip(
            np.searchsorted(profile.upper_edges, e0) - 1, 0, len(w_u) - 1
        ))
        w_u[idx] = 1.0 / profile.h_upper
    else:
        raise ValueError(f"unknown branch {branch!r}")
    return BranchedDensity(
        well_edges=profile.well_edges, upper_edges=profile.upper_edges,
        w_left=w_l, w_right=w_r, w_upper=w_u,
        meta={"init": (branch, e0)},
    )


def fp_cfl_bound(profile: DiffusionProfile) -> float:
    """Largest stable explicit step for the branched diffusion update."""
    kappa_w = float(np.max(profile.d_well * profile.omega_well))
    kappa_u = float(np.max(profile.d_upper * profile.omega_upper))
    kappa_jw = profile.d_junction_well * float(np.max(profile.omega_well))
    kappa_ju = profile.d_junction_upper * float(np.max(profile.omega_upper))
    h_w, h_u = profile.h_well, profile.h_upper
    bound = min(
        h_w**2 / (2.0 * max(kappa_w, kappa_jw, 1e-300)),
        h_u**2 / (2.0 * max(kappa_u, kappa_ju, 1e-300)),
    )
    return bound


def fp_evolve(
    profile: DiffusionProfile,
    w0: BranchedDensity,
    t_end: float,
    dt_pde: float | None = None,
    s0: float = 1.0,
    safety: float = 0.25,
) -> BranchedDensity:
    """Evolve a branched density for ``t_end`` with noise level ``s0``.

    Conservative explicit finite-volume update of
    dw/dt = d/dE ( s0 * D(E) * d/dE (w * Omega) ) on the three branches,
    coupled at the separatrix by continuity of rho = w*Omega and flux
    conservation (upper flux equals the sum of the two well fluxes); outer
    boundaries carry zero flux.

    Raises
    ------
    CFLViolation
        If an explicitly requested ``dt_pde`` exceeds the stability bound.
    """
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    bound = fp_cfl_bound(profile) / max(s0, 1e-300)
    if dt_pde is None:
        dt_pde = safety * bound
    elif dt_pde > bound:
        raise CFLViolation(
            f"dt_pde = {dt_pde} exceeds the stability bound {bound:.3e}"
        )
    n_steps = max(1, int(math.ceil(t_end / dt_pde)))
    dt_pde = t_end / n_steps
    w_l = w0.w_left.copy()
    w_r = w0.w_right.copy()
    w_u = w0.w_upper.copy()
    clipped = kernels.fp_evolve_steps(
        w_l, w_r, w_u,
        np.ascontiguousarray(profile.omega_well),
        np.ascontiguousarray(profile.omega_upper),
        np.ascontiguousarray(s0 * profile.d_face_well),
        np.ascontiguousarray(s0 * profile.d_face_upper),
        s0 * profile.d_junction_well, s0 * profile.d_junction_upper,
        profile.h_well, profile.h_upper, dt_pde, n_steps,
    )
    meta = dict(w0.meta)
    meta.update({
        "t": meta.get("t", 0.0) + t_end, "dt_pde": dt_pde,
        "n_steps": n_steps,
        "clipped_mass": meta.get("clipped_mass", 0.0) + clipped,
    })
    return BranchedDensity(
        well_edges=profile.well_edges, upper_edges=profile.upper_edges,
        w_left=w_l, w_right=w_r, w_upper=w_u, meta=meta,
    )


def noise_transfer_time(
    params: ModelParams, profile: DiffusionProfile, s0: float = 1.0
) -> float:
    """Order-of-magnitude inter-well transfer time under white noise.

    (e_plus - e_minus)^2 divided by the uniform-in-energy average of
    Omega(E)*D(E)*s0 over the full energy range (the well interval counted
    once; both wells share the same profile).

    Raises
    ------
    DegenerateProfile
        If the average vanishes.
    """
    num_w = float(np.sum(profile.omega_well * profile.d_well)) \
        * profile.h_well
    num_u = float(np.sum(profile.omega_upper * profile.d_upper)) \
        * profile.h_upper
    span = params.energy_span
    avg = s0 * (num_w + num_u) / span
    if avg <= 0:
        raise DegenerateProfile("Omega*D averages to zero")
    return span**2 / avg


def well_occupancy_stationary(params: ModelParams, n_bins: int = 48) -> float:
    """Stationary probability of one self-trapping well under white noise.

    Integrates the full-range stationary density (per-well 1/Omega below the
    separatrix, 1/Omega above) and returns the single-well mass.
    """
    cache: dict = {}
    well_edges = np.linspace(params.e_minus, params.e_sep, n_bins + 1)
    upper_edges = np.linspace(params.e_sep, params.e_plus, 2 * n_bins + 1)
    i_well = sum(
        inverse_omega_integral(params, lo, hi, "left", cache)
        for lo, hi in zip(well_edges[:-1], well_edges[1:])
    )
    i_upper = sum(
        inverse_omega_integral(params, lo, hi, "upper", cache)
        for lo, hi in zip(upper_edges[:-1], upper_edges[1:])
    )
    eta = 1.0 / (2.0 * i_well + i_upper)
    return eta * i_well
