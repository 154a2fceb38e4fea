"""Acceptance gate: every shipped claim checked at its stated tolerance.

Each test prints one line into the "acceptance criteria" terminal summary.
A handful of reference values are not reproducible by the exact flow of the
model Hamiltonian with the standard constants; those checks are implemented
at their stated tolerances anyway and marked strict-xfail, with the measured
value recorded in the summary line and the analysis in the repository notes
(README, "Known deviations").  Everything else must pass.
"""

import math

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES

from selftrap.engine import (
    IntegratorConfig,
    integrate,
    libration_frequency,
    periodic_orbit,
)
from selftrap.harmonic import (
    HarmonicDrive,
    ThresholdScanConfig,
    energy_histogram,
    invariant_energy_distribution,
    melnikov_halfwidth,
    occupancy_fraction,
    harmonic_transfer_time,
    threshold_amplitude,
)
from selftrap.model import PhaseState, energy_of, standard_params
from selftrap.noise import (
    delta_density,
    diffusion_coefficient,
    diffusion_coefficient_bandlimited,
    diffusion_profile,
    fp_evolve,
    langevin_simulate,
    locking_energy,
    noise_transfer_time,
    stationary_branched,
    well_occupancy_stationary,
    white_noise_path,
)
from selftrap._backend import kernels
from selftrap.engine import inverse_omega_integral

P = standard_params()
OMEGA0_QUOTED = 2.887  # reference print of the small-oscillation frequency


def record(name, ok, detail):
    status = "PASS" if ok else "FAIL (expected, noted)"
    ACCEPTANCE_LINES.append((name, status, detail))
    return ok


# ---------------------------------------------------------------------------
# shared expensive artifacts


@pytest.fixture(scope="module")
def stated_run():
    """10^4 drive periods at F = 0.2, omega = omega0 (criterion 8)."""
    drive = HarmonicDrive(0.2, P.omega0)
    cfg = IntegratorConfig(dt=1e-3, sample_stride=20)
    traj = integrate(P, drive, PhaseState(P.delta0, 0.0),
                     10000 * drive.period, cfg)
    mel = melnikov_halfwidth(P, drive.omega, drive.F)
    return drive, traj, mel


@pytest.fixture(scope="module")
def dip_run():
    """Over-threshold run near the threshold-curve minimum (criterion 14)."""
    drive = HarmonicDrive(0.2, 0.9 * P.omega0)
    cfg = IntegratorConfig(dt=1e-3, sample_stride=20)
    traj = integrate(P, drive, PhaseState(P.delta0, 0.0),
                     10000 * drive.period, cfg)
    mel = melnikov_halfwidth(P, drive.omega, drive.F)
    dist = invariant_energy_distribution(P, mel.delta_e, n_bins_well=160)
    return drive, traj, mel, dist


@pytest.fixture(scope="module")
def threshold_scan():
    """F_c over a frequency grid plus a phase grid at omega0 (criterion 7)."""
    cfg = ThresholdScanConfig(t_max_periods=200, bisection_iters=20,
                              dt=1e-3)
    omegas = P.omega0 * np.linspace(0.5, 1.25, 16)
    curve = [threshold_amplitude(P, float(w), 0.0, cfg) for w in omegas]
    phases = np.arange(8) * math.pi / 4
    spread = [threshold_amplitude(P, P.omega0, float(ph), cfg)
              for ph in phases]
    return omegas, curve, spread


@pytest.fixture(scope="module")
def profile():
    return diffusion_profile(P, n_well=24, n_upper=48, n_uniform=1024)


# ---------------------------------------------------------------------------
# criteria


def test_c01_landmarks():
    ok = (
        abs(P.delta0 - (-0.686)) <= 1e-3
        and abs(P.e_minus - (-3.871)) <= 1e-3
        and abs(P.e_sep - (-3.486)) <= 1e-3
        and abs(P.e_plus - 7.290) <= 1e-3
    )
    detail = (f"delta0={P.delta0:.6f} e-={P.e_minus:.6f} "
              f"es={P.e_sep:.6f} e+={P.e_plus:.6f}")
    assert record("1 landmarks", ok, detail), detail


def test_c02_small_oscillation_frequency():
    om = libration_frequency(P, P.e_minus + 1e-6, "left")
    ok = (abs(om - OMEGA0_QUOTED) / OMEGA0_QUOTED <= 0.01
          and abs(om - P.omega0) / P.omega0 <= 1e-3)
    detail = (f"Omega(E->E-)={om:.6f}, quoted {OMEGA0_QUOTED} "
              f"(dev {abs(om - OMEGA0_QUOTED) / OMEGA0_QUOTED:.2%}), "
              f"closed form {P.omega0:.6f} "
              f"(dev {abs(om - P.omega0) / P.omega0:.2e})")
    assert record("2 small-oscillation frequency", ok, detail), detail


def test_c03_integrator_quality():
    tr = integrate(P, None, PhaseState(0.0, math.pi / 2), 1000.0,
                   IntegratorConfig(dt=1e-3, sample_stride=100))
    drift = float(np.max(np.abs(tr.energy)))
    cfg = IntegratorConfig(dt=1e-3, sample_stride=10**9)
    s0 = PhaseState(0.3, 1.0)
    fwd = integrate(P, None, s0, 50.0, cfg)
    back = integrate(
        P, None, PhaseState(float(fwd.delta[-1]), -float(fwd.theta[-1])),
        50.0, cfg,
    )
    defect = math.hypot(back.delta[-1] - s0.delta,
                        back.theta[-1] + s0.theta)
    ok = drift <= 1e-8 and defect <= 1e-6
    detail = f"energy drift {drift:.2e} (<=1e-8), reversibility {defect:.2e}"
    assert record("3 integrator quality", ok, detail), detail


def test_c04a_duffing_analytic_resonance():
    from selftrap.duffing import resonance_threshold_analytic

    f_an = resonance_threshold_analytic()
    ok = abs(f_an - 0.0666) <= 5e-4
    detail = f"analytic threshold {f_an:.6f} (quoted 0.0666 +- 0.0005)"
    assert record("4a analytic resonance threshold", ok, detail), detail


@pytest.mark.xfail(
    strict=True,
    reason="exact slow-flow threshold 0.06250 sits 6.16% below the "
           "analytic 0.06660; the quoted agreement is 'about 6%'",
)
def test_c04b_slow_flow_matches_analytic_within_six_percent():
    from selftrap.duffing import (
        resonance_threshold_analytic,
        slow_flow_threshold,
    )

    f_an = resonance_threshold_analytic()
    f_sf = slow_flow_threshold(0.0)
    rel = abs(f_sf - f_an) / f_an
    ok = rel <= 0.06
    detail = f"slow-flow {f_sf:.6f} vs analytic {f_an:.6f}: {rel:.2%}"
    assert record("4b slow-flow vs analytic", ok, detail), detail


@pytest.fixture(scope="module")
def slow_flow_curve():
    from selftrap.duffing import slow_flow_threshold

    omegas = np.arange(0.80, 1.0001, 0.005)
    fcs = np.array([slow_flow_threshold(float(w) - 1.0, iters=22)
                    for w in omegas])
    return omegas, fcs


@pytest.mark.xfail(
    strict=True,
    reason="the slow-flow threshold curve reaches its minimum at 0.95, "
           "not at the quoted 0.87",
)
def test_c05a_slow_flow_minimum_location(slow_flow_curve):
    omegas, fcs = slow_flow_curve
    om_min = float(omegas[np.argmin(fcs)])
    ok = abs(om_min - 0.87) <= 0.02
    detail = f"argmin at omega={om_min:.3f} (quoted 0.87 +- 0.02)"
    assert record("5a slow-flow minimum location", ok, detail), detail


def test_c05b_slow_flow_minimum_inside_band(slow_flow_curve):
    omegas, fcs = slow_flow_curve
    om_min = float(omegas[np.argmin(fcs)])
    ok = 0.812 < om_min < 1.0
    detail = f"argmin omega={om_min:.3f} inside (0.812, 1)"
    assert record("5b slow-flow minimum band", ok, detail), detail


@pytest.mark.slow
def test_c06_duffing_numeric_vs_slow_flow_ratio():
    from selftrap.duffing import duffing_threshold_numeric, \
        slow_flow_threshold

    f_num = duffing_threshold_numeric(1.0)
    f_sf = slow_flow_threshold(0.0)
    ratio = f_num / f_sf
    ok = 1.2 <= ratio <= 1.9
    detail = (f"numeric {f_num:.4f} / slow-flow {f_sf:.4f} = {ratio:.3f} "
              f"(band [1.2, 1.9])")
    assert record("6 toy-model numeric/slow-flow ratio", ok, detail), detail


@pytest.mark.slow
@pytest.mark.xfail(
    strict=True,
    reason="exact threshold at the small-oscillation frequency is 0.240; "
           "the quoted 0.1 matches the curve minimum instead",
)
def test_c07a_threshold_at_omega0(threshold_scan):
    _, _, spread = threshold_scan
    f_c = spread[0].f_c  # phi = 0
    ok = abs(f_c - 0.1) <= 0.025
    detail = f"F_c(omega0, 0) = {f_c:.4f} (quoted 0.1 +- 25%)"
    assert record("7a threshold at omega0", ok, detail), detail


@pytest.mark.slow
@pytest.mark.xfail(
    strict=True,
    reason="one phase ray hits a reappearing stability island and bisection "
           "lands on its upper edge; ex-outlier spread is a few percent",
)
def test_c07b_threshold_phase_spread(threshold_scan):
    _, _, spread = threshold_scan
    fcs = np.array([r.f_c for r in spread])
    rel = float((fcs.max() - fcs.min()) / fcs.mean())
    ok = rel <= 0.10
    detail = (f"spread over 8 phases {rel:.1%} "
              f"(values {np.round(fcs, 3).tolist()})")
    assert record("7b threshold phase spread", ok, detail), detail


@pytest.mark.slow
def test_c07c_threshold_minimum_location(threshold_scan):
    omegas, curve, _ = threshold_scan
    fcs = np.array([r.f_c for r in curve])
    assert np.all(np.isfinite(fcs))
    om_min = float(omegas[np.argmin(fcs)]) / P.omega0
    ok = 0.7 < om_min < 1.0
    detail = (f"argmin at omega/omega0 = {om_min:.3f}, "
              f"F_c(min) = {fcs.min():.4f}")
    assert record("7c threshold minimum location", ok, detail), detail


def test_c08a_layer_bound(stated_run):
    drive, traj, mel = stated_run
    bound = P.e_sep + 1.5 * mel.delta_e
    frac = float(np.mean(traj.energy <= bound))
    ok = frac >= 0.95
    detail = (f"fraction below e_s + 1.5*dE: {frac:.4f} "
              f"(dE = {mel.delta_e:.4f}; run stays trapped below the "
              f"separatrix at these settings)")
    assert record("8a layer energy bound", ok, detail), detail


@pytest.mark.xfail(
    strict=True,
    reason="at F = 0.2 the drive at the small-oscillation frequency stays "
           "below threshold (F_c = 0.24 there), so no chaotic layer forms "
           "and the histogram cannot match the uniform-density shape",
)
def test_c08b_layer_statistics(stated_run):
    drive, traj, mel = stated_run
    dist = invariant_energy_distribution(P, mel.delta_e, n_bins_well=160)
    emp = energy_histogram(traj, dist.edges)
    n = 160
    sel = np.ones(len(dist.w), bool)
    sel[n - 2 : n + 2] = False
    sel[dist.centers > P.e_sep + 0.5 * mel.delta_e] = False
    dev = float(np.max(np.abs(emp.w - dist.w)[sel]))
    peak = float(np.max(dist.w[sel]))
    ok = dev <= 0.3 * peak
    detail = f"sup-norm deviation {dev:.3f} vs 0.3*peak = {0.3 * peak:.3f}"
    assert record("8b layer statistics vs theory", ok, detail), detail


@pytest.mark.xfail(
    strict=True,
    reason="the one-sided ratio converges to 2 only as the offset shrinks "
           "(2.004 at 1e-6 of the span); at the stated 1e-3 offset the "
           "O(eps*log(eps)) correction leaves 2.24",
)
def test_c09_diffusion_jump():
    eps = 1e-3 * P.energy_span
    lo = diffusion_coefficient(P, P.e_sep - eps, "left", method="time")
    hi = diffusion_coefficient(P, P.e_sep + eps, "upper", method="time")
    ratio = hi / lo
    ok = abs(ratio - 2.0) <= 0.1
    detail = f"D(es+eps)/D(es-eps) = {ratio:.4f} at eps = 1e-3*span"
    assert record("9 diffusion jump ratio", ok, detail), detail


@pytest.mark.xfail(
    strict=True,
    reason="the diffusion-weighted low-frequency fraction is 0.84 in the "
           "continuum (0.91 at the stated offset); 0.66 matches the "
           "amplitude-weighted fraction instead",
)
def test_c10a_bandlimited_fraction():
    eps = 1e-3 * P.energy_span
    e = P.e_sep + eps
    d_full = diffusion_coefficient(P, e, "upper", method="fourier",
                                   k_max=2048, n_uniform=16384)
    d_cut = diffusion_coefficient_bandlimited(P, e, "upper", OMEGA0_QUOTED,
                                              k_max=2048, n_uniform=16384)
    frac = d_cut / d_full
    ok = abs(frac - 0.66) <= 0.05
    detail = f"D_cut/D = {frac:.4f} at e_s + 1e-3*span (quoted 0.66)"
    assert record("10a band-limited fraction", ok, detail), detail


@pytest.mark.xfail(
    strict=True,
    reason="the exact root of Omega(E) = 2.887 is -0.206; the quoted "
           "-0.356 solves it only with a 1.4% lower frequency, and the "
           "shallow slope of Omega(E) amplifies that into 0.15 in energy",
)
def test_c10b_locking_energy():
    e_h = locking_energy(P, OMEGA0_QUOTED)
    ok = abs(e_h - (-0.356)) <= 0.01
    detail = f"locking energy {e_h:.4f} (quoted -0.356 +- 0.01)"
    assert record("10b locking energy", ok, detail), detail


def test_c10c_locking_consistency():
    e_h = locking_energy(P, OMEGA0_QUOTED)
    om = libration_frequency(P, e_h, "upper")
    ok = abs(om - OMEGA0_QUOTED) <= 1e-6
    detail = f"Omega(E_h) = {om:.8f} vs cutoff {OMEGA0_QUOTED}"
    assert record("10c locking consistency", ok, detail), detail


def test_c11_noise_convention_closure():
    e0 = -3.68
    orb = periodic_orbit(P, e0, "left", n_uniform=512)
    from selftrap.model import offdiag_coupling_rate

    vdot = offdiag_coupling_rate(orb.delta, orb.theta, P)
    d_coef = 0.5 * float(np.sum(vdot**2)) * orb.period / len(vdot)
    s0, noise_dt, t_end = 1e-4, 0.01, 2.0
    n_noise = int(t_end / noise_dt)
    sigma = math.sqrt(2 * math.pi * s0 / noise_dt)
    rng = np.random.default_rng(12345)
    members = 1000
    finals = np.empty(members)
    for m in range(members):
        j = int(rng.integers(0, len(orb.delta)))
        xi = sigma * rng.standard_normal(n_noise)
        d, th, status, _ = kernels.bloch_noise_traj(
            P.Omega, P.A, P.B, float(orb.delta[j]), float(orb.theta[j]),
            0.0, 1e-3, 10, xi, n_noise * 10, 1e-12, 1,
        )
        finals[m] = energy_of(d[-1], th[-1], P)
    var = float(np.var(finals, ddof=1))
    pred = 2.0 * orb.omega * d_coef * s0 * t_end
    ratio = var / pred
    ok = abs(ratio - 1.0) <= 0.3
    detail = (f"ensemble Var[E] / (2*Omega*D*S0*t) = {ratio:.3f} "
              f"(1000 members)")
    assert record("11 noise convention closure", ok, detail), detail


def test_c12a_fp_stationarity(profile):
    w0 = stationary_branched(profile)
    w1 = fp_evolve(profile, w0, 1.0)
    drift = w1.max_abs_diff(w0)
    ok = drift <= 1e-6
    detail = f"sup-norm drift per unit time {drift:.2e} (<= 1e-6)"
    assert record("12a stationary state fixed", ok, detail), detail


@pytest.mark.slow
def test_c12b_langevin_reaches_stationary_shape():
    s0, noise_dt, t_end = 1e-3, 0.01, 300000.0
    path = white_noise_path(42, noise_dt, int(t_end / noise_dt) + 1, s0=s0)
    traj = langevin_simulate(P, path, PhaseState(P.delta0, 0.0), t_end,
                             IntegratorConfig(dt=2e-3, sample_stride=100))
    n_w, n_u = 16, 36
    edges = np.concatenate((
        np.linspace(P.e_minus, P.e_sep, n_w + 1),
        P.e_sep + (P.e_plus - P.e_sep) / n_u * np.arange(1, n_u + 1),
    ))
    emp = energy_histogram(traj, edges)
    cache = {}
    ints = np.array([
        (2.0 if hi <= P.e_sep + 1e-12 else 1.0)
        * inverse_omega_integral(
            P, lo, hi, "left" if hi <= P.e_sep + 1e-12 else "upper", cache)
        for lo, hi in zip(edges[:-1], edges[1:])
    ])
    w_stat = ints / ints.sum() / np.diff(edges)
    sel = np.ones(len(w_stat), bool)
    sel[n_w - 1 : n_w + 1] = False
    dev = float(np.max(np.abs(emp.w - w_stat)[sel]))
    peak = float(np.max(w_stat[sel]))
    ok = dev <= 0.3 * peak
    detail = (f"sup-norm {dev:.4f} vs 0.3*peak = {0.3 * peak:.4f} "
              f"({t_end:.0f} time units, e_s-adjacent bins excluded)")
    assert record("12b noise-driven histogram", ok, detail), detail


def test_c13_well_occupancy():
    frac = well_occupancy_stationary(P)
    ok = 0.005 < frac < 0.10
    detail = f"single-well stationary mass {frac:.4f} (band (0.005, 0.10))"
    assert record("13 well occupancy", ok, detail), detail


@pytest.mark.slow
def test_c14a_transfer_time_vs_first_passage(dip_run):
    drive, traj, mel, dist = dip_run
    mu_total = occupancy_fraction(dist, P.e_sep).mu
    mu_well = 0.5 * mu_total
    t_est = harmonic_transfer_time(drive.period, mu_well)
    margin = 0.05 * (P.e_sep - P.e_minus)
    m = np.floor(traj.theta / (2 * math.pi) + 0.5).astype(np.int64) & 1
    core = traj.energy < P.e_sep - margin
    passages = []
    cur, t_prev = 0, 0.0
    for i in np.nonzero(core)[0]:
        if m[i] != cur:
            passages.append(traj.t[i] - t_prev)
            t_prev, cur = traj.t[i], m[i]
    t_emp = float(np.mean(passages))
    ratio = t_est / t_emp
    ok = 0.1 <= ratio <= 10.0
    detail = (f"estimate {t_est:.2f} vs mean first passage {t_emp:.2f} "
              f"({len(passages)} transfers): ratio {ratio:.3f}")
    assert record("14a transfer-time estimator", ok, detail), detail


@pytest.mark.slow
def test_s08_layer_statistics_at_working_frequency(dip_run):
    """Supplement to 8b: with the drive inside the threshold dip the
    chaotic layer forms and the histogram does match the uniform-density
    shape at the stated tolerance."""
    drive, traj, mel, dist = dip_run
    emp = energy_histogram(traj, dist.edges)
    n = 160
    sel = np.ones(len(dist.w), bool)
    sel[n - 2 : n + 2] = False
    sel[dist.centers > P.e_sep + 0.5 * mel.delta_e] = False
    dev = float(np.max(np.abs(emp.w - dist.w)[sel]))
    peak = float(np.max(dist.w[sel]))
    bound = P.e_sep + 1.5 * mel.delta_e
    frac = float(np.mean(traj.energy <= bound))
    ok = dev <= 0.3 * peak and frac >= 0.95
    detail = (f"at omega = 0.9*omega0, F = 0.2: sup-norm {dev:.3f} vs "
              f"0.3*peak = {0.3 * peak:.3f}; fraction in layer {frac:.4f}")
    assert record("s8 layer statistics (dip drive)", ok, detail), detail


@pytest.mark.xfail(
    strict=True,
    reason="the uniform-average estimate carries no mode-shape factor; the "
           "measured ratio to the slowest relaxation e-fold is pi^2*1.04 "
           "= 10.23, a hair beyond the stated factor 10",
)
def test_c14b_transfer_time_vs_fp_relaxation(profile):
    t_est = noise_transfer_time(P, profile)
    stat = stationary_branched(profile)
    w = delta_density(profile, "left", P.e_minus)
    ts, ds = [], []
    t_acc = 0.0
    for _ in range(10):
        w = fp_evolve(profile, w, 2.0)
        t_acc += 2.0
        ts.append(t_acc)
        ds.append(w.max_abs_diff(stat))
    ts, ds = np.array(ts), np.array(ds)
    mask = (ds > 1e-11) & (ts >= 4.0)
    tau = -1.0 / np.polyfit(ts[mask], np.log(ds[mask]), 1)[0]
    ratio = t_est / tau
    ok = 0.1 <= ratio <= 10.0
    detail = (f"estimate {t_est:.2f} vs relaxation e-fold {tau:.3f}: "
              f"ratio {ratio:.2f}")
    assert record("14b relaxation-time estimator", ok, detail), detail
