"""Command-line front end: experiment configuration and tabular output.

Outputs are plain CSV with '#'-prefixed header lines (full settings echo,
package version, seed) and 17-significant-digit values, so identical
configurations reproduce byte-identical files.  Settings come from an
optional flat key=value config file ([section] headers, one key per line);
command-line flags override file values.

Exit codes: 0 success, 2 configuration/usage error, 3 numerical failure
threshold exceeded.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import __version__
from .errors import SelftrapError
from .engine import (
    IntegratorConfig,
    integrate,
    periodic_orbit,
    separatrix_orbit,
)
from .harmonic import (
    HarmonicDrive,
    ThresholdScanConfig,
    energy_histogram,
    fig2_frequency_grid,
    invariant_energy_distribution,
    layer_grid,
    melnikov_halfwidth,
    threshold_curve,
)
from .model import (
    ModelParams,
    OverlapInputs,
    PhaseState,
    derive_model_params,
    standard_params,
    stationary_points,
)
from .duffing import (
    DuffingScanConfig,
    duffing_threshold_numeric,
    resonance_threshold_analytic,
    slow_flow_threshold,
)
from .noise import (
    diffusion_profile,
    fp_evolve,
    delta_density,
    langevin_simulate,
    stationary_branched,
    white_noise_path,
)
from .engine import inverse_omega_integral


class ConfigError(Exception):
    pass


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def write_table(path, settings: dict, columns, rows):
    """Write a CSV table with a '#'-header echoing all settings."""
    lines = [f"# selftrap {__version__}"]
    for key in sorted(settings):
        lines.append(f"# {key} = {_fmt(settings[key])}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    text = "\n".join(lines) + "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def parse_config_file(path) -> dict:
    """Parse a flat key=value file with [section] headers.

    Returns {"section.key": "value"}; bare keys before any section land in
    the "model" section (so a parameters-only file needs no header).
    """
    out = {}
    section = "model"
    try:
        with open(path) as fh:
            for ln, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if line.startswith("[") and line.endswith("]"):
                    section = line[1:-1].strip().lower()
                    continue
                if "=" not in line:
                    raise ConfigError(
                        f"{path}:{ln}: expected key=value, got {line!r}"
                    )
                key, val = (s.strip() for s in line.split("=", 1))
                out[f"{section}.{key.lower()}"] = val
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return out


_MODEL_KEYS = {"omega", "a", "b", "j00", "j01", "j11", "e0", "e1", "lam",
               "hbar"}


def load_params(source: str) -> ModelParams:
    """Resolve --params: the baked-in standard set or a key=value file."""
    if source == "paper":
        return standard_params()
    cfg = parse_config_file(source)
    keys = {}
    for full, val in cfg.items():
        sect, key = full.split(".", 1)
        if sect != "model":
            raise ConfigError(f"unexpected section [{sect}] in params file")
        if key not in _MODEL_KEYS:
            raise ConfigError(f"unknown model key {key!r}")
        keys[key] = float(val)
    if {"omega", "a", "b"} <= keys.keys():
        return ModelParams(Omega=keys["omega"], A=keys["a"], B=keys["b"])
    need = {"j00", "j01", "j11", "e0", "e1", "lam"}
    if need <= keys.keys():
        return derive_model_params(OverlapInputs(
            j00=keys["j00"], j01=keys["j01"], j11=keys["j11"],
            e0=keys["e0"], e1=keys["e1"], lam=keys["lam"],
            hbar=keys.get("hbar", 1.0),
        ))
    raise ConfigError(
        "params file needs either omega,a,b or j00,j01,j11,e0,e1,lam"
    )


def _parse_grid(spec: str, params: ModelParams) -> np.ndarray:
    """Frequency list 'w1,w2,...' or geometric spec 'lo:hi:n' (rad/time)."""
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ConfigError(f"grid spec {spec!r} is not lo:hi:n")
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        if n < 1 or not lo < hi:
            raise ConfigError(f"bad grid spec {spec!r}")
        return np.linspace(lo, hi, n)
    vals = [float(s) for s in spec.split(",") if s.strip()]
    if not vals:
        raise ConfigError("empty frequency list")
    uniq = sorted(set(vals))
    if len(uniq) != len(vals):
        print("warning: duplicate frequencies removed", file=sys.stderr)
    return np.asarray(uniq)


def _settings(args, params, extra=None) -> dict:
    base = {
        "command": args.command,
        "params.omega": params.Omega,
        "params.a": params.A,
        "params.b": params.B,
        "run.seed": args.seed,
        "run.workers": args.workers,
    }
    if extra:
        base.update(extra)
    return base


# ---------------------------------------------------------------------------
# subcommands


def cmd_landmarks(args, params):
    lm = stationary_points(params)
    rows = [
        ("delta0", lm.delta0),
        ("e_minus", lm.e_minus),
        ("e_sep", lm.e_sep),
        ("e_plus", lm.e_plus),
        ("omega0", lm.omega0),
        ("saddle_theta", lm.saddle_theta),
        ("vertex_delta", lm.vertex_delta),
        ("saddle_line_delta", lm.saddle_line_delta),
    ]
    write_table(args.out, _settings(args, params), ("name", "value"), rows)
    return 0


def cmd_portrait(args, params):
    energies = [float(s) for s in args.energies.split(",") if s.strip()]
    if not energies:
        raise ConfigError("empty energy list")
    span = params.energy_span
    tol = 1e-9 * span
    rows = []
    for e in energies:
        if e < params.e_minus - tol or e > params.e_plus + tol:
            raise ConfigError(
                f"energy {e} outside [{params.e_minus}, {params.e_plus}]"
            )
        if abs(e - params.e_minus) <= tol:
            rows.append((e, 0.0, params.delta0, 0.0, params.e_minus))
            continue
        if abs(e - params.e_plus) <= tol:
            rows.append((e, 0.0, 1.0, 0.0, params.e_plus))
            continue
        if abs(e - params.e_sep) <= 10 * tol:
            orb = separatrix_orbit(params)
            stride = max(1, len(orb.t) // args.points)
            for t, d, th in zip(orb.t[::stride], orb.delta[::stride],
                                orb.theta[::stride]):
                rows.append((e, t, d, th, params.e_sep))
            continue
        branch = "left" if e < params.e_sep else "upper"
        orb = periodic_orbit(params, e, branch, dt=args.dt,
                             n_uniform=args.points)
        en = orb.e
        for t, d, th in zip(orb.t, orb.delta, orb.theta):
            rows.append((e, t, d, th, en))
    settings = _settings(args, params, {
        "portrait.energies": args.energies, "portrait.points": args.points,
        "run.dt": args.dt,
    })
    write_table(args.out, settings,
                ("energy", "t", "delta", "theta", "e"), rows)
    return 0


def cmd_scan_threshold(args, params):
    omegas = (_parse_grid(args.omegas, params) if args.omegas
              else fig2_frequency_grid(params))
    cfg = ThresholdScanConfig(
        t_max_periods=args.tmax, f_lo=args.flo, f_hi=args.fhi,
        bisection_iters=args.iters, dt=args.dt,
    )
    results = threshold_curve(params, omegas, args.phi, cfg,
                              workers=args.workers)
    rows = [
        (r.omega, r.omega / params.omega0, r.f_c, r.bracket_width, r.t_cross)
        for r in results
    ]
    settings = _settings(args, params, {
        "scan.phi": args.phi, "scan.tmax_periods": args.tmax,
        "scan.flo": args.flo, "scan.fhi": args.fhi,
        "scan.iters": args.iters, "run.dt": args.dt,
    })
    write_table(args.out, settings,
                ("omega", "omega_over_omega0", "f_c", "bracket_width",
                 "t_cross"), rows)
    n_failed = sum(1 for r in results if math.isnan(r.f_c))
    if n_failed > 0.1 * len(results):
        print(f"error: {n_failed}/{len(results)} brackets failed",
              file=sys.stderr)
        return 3
    return 0


def cmd_scan_duffing(args, params):
    omegas = (_parse_grid(args.omegas, params) if args.omegas
              else np.linspace(0.7, 1.1, 21))
    rows = []
    failed = 0
    for om in omegas:
        if args.mode in ("slowflow", "both"):
            try:
                fc = slow_flow_threshold(om - 1.0, t_max=args.tmax)
                rows.append((float(om), "slowflow", fc))
            except SelftrapError:
                failed += 1
                rows.append((float(om), "slowflow", math.nan))
        if args.mode in ("numeric", "both"):
            cfg = DuffingScanConfig(t_max_periods=args.tmax, dt=args.dt)
            try:
                rows.append((float(om), "numeric",
                             duffing_threshold_numeric(float(om), cfg)))
            except SelftrapError:
                failed += 1
                rows.append((float(om), "numeric", math.nan))
    rows.append((1.0, "analytic", resonance_threshold_analytic()))
    settings = _settings(args, params, {
        "scan.mode": args.mode, "scan.tmax": args.tmax, "run.dt": args.dt,
    })
    write_table(args.out, settings, ("omega", "method", "f_c"), rows)
    return 3 if failed > 0.1 * max(1, len(rows) - 1) else 0


def cmd_melnikov(args, params):
    omegas = (_parse_grid(args.omegas, params) if args.omegas
              else np.asarray([args.omega if args.omega else params.omega0]))
    rows = []
    for om in omegas:
        res = melnikov_halfwidth(params, float(om), args.famp,
                                 eps_saddle=args.eps_saddle)
        rows.append((float(om), res.delta_e, res.delta_e_sine))
    settings = _settings(args, params, {
        "melnikov.famp": args.famp, "melnikov.eps_saddle": args.eps_saddle,
    })
    write_table(args.out, settings,
                ("omega", "delta_e", "delta_e_sine"), rows)
    return 0


def cmd_histogram(args, params):
    omega = args.omega if args.omega else params.omega0
    drive = HarmonicDrive(args.famp, omega, args.phi)
    mel = melnikov_halfwidth(params, omega, args.famp)
    edges = layer_grid(params, mel.delta_e, args.bins)
    theory = invariant_energy_distribution(params, mel.delta_e, edges=edges)
    t_end = args.tmax * drive.period
    cfg = IntegratorConfig(dt=args.dt, sample_stride=args.stride)
    traj = integrate(params, drive, PhaseState(params.delta0, 0.0), t_end,
                     cfg)
    emp = energy_histogram(traj, edges)
    rows = [
        (lo, hi, we, wt)
        for lo, hi, we, wt in zip(edges[:-1], edges[1:], emp.w, theory.w)
    ]
    settings = _settings(args, params, {
        "histogram.famp": args.famp, "histogram.omega": omega,
        "histogram.phi": args.phi, "histogram.periods": args.tmax,
        "histogram.bins": args.bins, "histogram.delta_e": mel.delta_e,
        "histogram.eta": theory.eta, "run.dt": args.dt,
        "run.stride": args.stride,
        "histogram.n_outside": emp.meta["n_outside"],
    })
    write_table(args.out, settings,
                ("e_lo", "e_hi", "w_empirical", "w_theory"), rows)
    return 0


def cmd_diffusion(args, params):
    prof = diffusion_profile(
        params, n_well=args.n_well, n_upper=args.n_upper,
        method=args.method, cutoff=args.cutoff,
    )
    wc = 0.5 * (prof.well_edges[1:] + prof.well_edges[:-1])
    uc = 0.5 * (prof.upper_edges[1:] + prof.upper_edges[:-1])
    rows = [
        ("well", float(e), float(om), float(d))
        for e, om, d in zip(wc, prof.omega_well, prof.d_well)
    ]
    rows.append(("well-limit", params.e_sep - prof.eps_junction,
                 math.nan, prof.d_junction_well))
    rows.append(("upper-limit", params.e_sep + prof.eps_junction,
                 math.nan, prof.d_junction_upper))
    rows.extend(
        ("upper", float(e), float(om), float(d))
        for e, om, d in zip(uc, prof.omega_upper, prof.d_upper)
    )
    settings = _settings(args, params, {
        "diffusion.n_well": args.n_well, "diffusion.n_upper": args.n_upper,
        "diffusion.method": args.method,
        "diffusion.cutoff": args.cutoff if args.cutoff else "none",
        "diffusion.eps_junction": prof.eps_junction,
    })
    write_table(args.out, settings, ("branch", "e", "omega_e", "d"), rows)
    return 0


def _stationary_reference(params, edges, branch_g):
    cache = {}
    vals = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        vals.append(branch_g * inverse_omega_integral(
            params, lo, hi, "left" if branch_g == 2.0 else "upper", cache
        ))
    return np.asarray(vals)


def cmd_langevin(args, params):
    noise_dt = args.noise_dt
    n = int(math.ceil(args.tmax / noise_dt))
    noise = white_noise_path(args.seed, noise_dt, n, s0=args.s0,
                             cutoff=args.cutoff)
    cfg = IntegratorConfig(dt=args.dt, sample_stride=args.stride)
    traj = langevin_simulate(params, noise, PhaseState(params.delta0, 0.0),
                             args.tmax, cfg)
    n_w = args.bins
    h = (params.e_sep - params.e_minus) / n_w
    n_u = int(math.ceil((params.e_plus - params.e_sep) / h))
    edges = np.concatenate((
        np.linspace(params.e_minus, params.e_sep, n_w + 1),
        params.e_sep + (params.e_plus - params.e_sep) / n_u
        * np.arange(1, n_u + 1),
    ))
    emp = energy_histogram(traj, edges)
    below = _stationary_reference(params, edges[: n_w + 1], 2.0)
    above = _stationary_reference(params, edges[n_w:], 1.0)
    integrals = np.concatenate((below, above))
    eta = 1.0 / integrals.sum()
    w_stat = eta * integrals / np.diff(edges)
    rows = [
        (lo, hi, we, ws)
        for lo, hi, we, ws in zip(edges[:-1], edges[1:], emp.w, w_stat)
    ]
    settings = _settings(args, params, {
        "langevin.s0": args.s0, "langevin.noise_dt": noise_dt,
        "langevin.tmax": args.tmax, "langevin.bins": args.bins,
        "langevin.cutoff": args.cutoff if args.cutoff else "none",
        "run.dt": args.dt, "run.stride": args.stride,
    })
    write_table(args.out, settings,
                ("e_lo", "e_hi", "w_empirical", "w_stationary"), rows)
    return 0


def cmd_fp(args, params):
    prof = diffusion_profile(params, n_well=args.n_well,
                             n_upper=args.n_upper)
    if args.init == "stationary":
        w0 = stationary_branched(prof)
    else:
        parts = args.init.split(":")
        if len(parts) != 3 or parts[0] != "delta":
            raise ConfigError(
                f"--init must be 'stationary' or 'delta:<branch>:<e0>', "
                f"got {args.init!r}"
            )
        w0 = delta_density(prof, parts[1], float(parts[2]))
    w1 = fp_evolve(prof, w0, args.tmax, dt_pde=args.dt_pde, s0=args.s0)
    ref = stationary_branched(prof)
    wc = 0.5 * (prof.well_edges[1:] + prof.well_edges[:-1])
    uc = 0.5 * (prof.upper_edges[1:] + prof.upper_edges[:-1])
    rows = []
    for e, wl, wr, ws in zip(wc, w1.w_left, w1.w_right, ref.w_left):
        rows.append(("left", float(e), float(wl), float(ws)))
        rows.append(("right", float(e), float(wr), float(ws)))
    rows.extend(
        ("upper", float(e), float(wu), float(ws))
        for e, wu, ws in zip(uc, w1.w_upper, ref.w_upper)
    )
    settings = _settings(args, params, {
        "fp.n_well": args.n_well, "fp.n_upper": args.n_upper,
        "fp.tmax": args.tmax, "fp.s0": args.s0, "fp.init": args.init,
        "fp.dt_pde": w1.meta["dt_pde"], "fp.n_steps": w1.meta["n_steps"],
        "fp.clipped_mass": w1.meta["clipped_mass"],
    })
    write_table(args.out, settings,
                ("branch", "e", "w_final", "w_stationary"), rows)
    return 0


# ---------------------------------------------------------------------------
# argument plumbing


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="selftrap",
        description="Two-mode double-well dynamics experiments",
    )
    ap.add_argument("--config", default=None,
                    help="key=value settings file; flags override it")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, tmax_help, tmax_default):
        sp.add_argument("--params", default="paper",
                        help="'paper' or a parameters file")
        sp.add_argument("--out", default="-", help="output path or '-'")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--workers", type=int,
                        default=int(os.environ.get("SELFTRAP_WORKERS",
                                                   os.cpu_count() or 1)))
        sp.add_argument("--dt", type=float, default=1e-3,
                        help="integrator step")
        sp.add_argument("--tmax", type=float, default=tmax_default,
                        help=tmax_help)

    sp = sub.add_parser("landmarks", help="fixed points and energy levels")
    common(sp, "unused", 0.0)

    sp = sub.add_parser("portrait", help="isoenergy trajectories")
    common(sp, "unused", 0.0)
    sp.add_argument("--energies", default="-3.7,-3.486,0,5")
    sp.add_argument("--points", type=int, default=512)

    sp = sub.add_parser("scan-threshold",
                        help="crossing-threshold amplitudes F_c(omega)")
    common(sp, "detection horizon in drive periods", 200.0)
    sp.add_argument("--omegas", default=None,
                    help="'w1,w2,...' or 'lo:hi:n' (default: 0.3..1.6 of "
                         "the small-oscillation frequency)")
    sp.add_argument("--phi", type=float, default=0.0)
    sp.add_argument("--flo", type=float, default=0.0)
    sp.add_argument("--fhi", type=float, default=0.4)
    sp.add_argument("--iters", type=int, default=20)

    sp = sub.add_parser("scan-duffing",
                        help="escape thresholds of the toy oscillator")
    common(sp, "horizon (time units for slowflow, periods for numeric)",
           400.0)
    sp.add_argument("--omegas", default=None)
    sp.add_argument("--mode", choices=("slowflow", "numeric", "both"),
                    default="slowflow")

    sp = sub.add_parser("melnikov", help="stochastic-layer half-width")
    common(sp, "unused", 0.0)
    sp.add_argument("--omega", type=float, default=None)
    sp.add_argument("--omegas", default=None)
    sp.add_argument("--famp", type=float, default=0.2)
    sp.add_argument("--eps-saddle", type=float, default=1e-6)

    sp = sub.add_parser("histogram",
                        help="driven energy histogram vs layer theory")
    common(sp, "trajectory length in drive periods", 10000.0)
    sp.add_argument("--famp", type=float, default=0.2)
    sp.add_argument("--omega", type=float, default=None,
                    help="default: small-oscillation frequency")
    sp.add_argument("--phi", type=float, default=0.0)
    sp.add_argument("--bins", type=int, default=160)
    sp.add_argument("--stride", type=int, default=50)

    sp = sub.add_parser("diffusion", help="energy diffusion profile D(E)")
    common(sp, "unused", 0.0)
    sp.add_argument("--n-well", type=int, default=48)
    sp.add_argument("--n-upper", type=int, default=96)
    sp.add_argument("--method", choices=("time", "fourier"), default="time")
    sp.add_argument("--cutoff", type=float, default=None)

    sp = sub.add_parser("langevin", help="noise-driven run and histogram")
    common(sp, "run length in time units", 20000.0)
    sp.add_argument("--s0", type=float, default=1e-3)
    sp.add_argument("--noise-dt", type=float, default=0.01)
    sp.add_argument("--cutoff", type=float, default=None)
    sp.add_argument("--bins", type=int, default=40)
    sp.add_argument("--stride", type=int, default=100)

    sp = sub.add_parser("fp", help="branched energy-diffusion evolution")
    common(sp, "evolution time in time units", 10.0)
    sp.add_argument("--n-well", type=int, default=48)
    sp.add_argument("--n-upper", type=int, default=96)
    sp.add_argument("--s0", type=float, default=1.0)
    sp.add_argument("--init", default="stationary")
    sp.add_argument("--dt-pde", type=float, default=None)
    return ap


_HANDLERS = {
    "landmarks": cmd_landmarks,
    "portrait": cmd_portrait,
    "scan-threshold": cmd_scan_threshold,
    "scan-duffing": cmd_scan_duffing,
    "melnikov": cmd_melnikov,
    "histogram": cmd_histogram,
    "diffusion": cmd_diffusion,
    "langevin": cmd_langevin,
    "fp": cmd_fp,
}


def _apply_config(args, parser, argv):
    """Overlay config-file values under explicit command-line flags."""
    if not args.config:
        return args
    cfg = parse_config_file(args.config)
    explicit = set()
    for tok in argv:
        if tok.startswith("--"):
            explicit.add(tok[2:].split("=", 1)[0].replace("-", "_"))
    for full, val in cfg.items():
        sect, key = full.split(".", 1)
        if sect == "model":
            continue  # consumed by load_params via --params
        if sect not in ("run", "args", args.command):
            raise ConfigError(f"unknown config section [{sect}]")
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise ConfigError(
                f"unknown config key {key!r} for {args.command}"
            )
        if attr in explicit:
            continue
        current = getattr(args, attr)
        if isinstance(current, bool):
            setattr(args, attr, val.lower() in ("1", "true", "yes"))
        elif isinstance(current, int):
            setattr(args, attr, int(val))
        elif isinstance(current, float):
            setattr(args, attr, float(val))
        else:
            setattr(args, attr, val)
    return args


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _apply_config(args, parser, argv)
        if args.config and args.params == "paper":
            cfg = parse_config_file(args.config)
            if any(k.startswith("model.") for k in cfg):
                args.params = args.config
        params = load_params(args.params)
        return _HANDLERS[args.command](args, params)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SelftrapError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
