"""Two-mode double-well model: constants, Hamiltonian, equations of motion.

The reduced state is the canonical pair (Delta, Theta): population difference
between the two lowest modes and their relative phase.  The conservative part

    H0 = Omega*Delta + A*Delta**2 - B*(1 - Delta**2)*cos(Theta)

has two self-trapped fixed points at Delta0 = -Omega/(2*(A+B)), Theta = 0 and
Theta = 2*pi, a separatrix at E_s = A - Omega (which contains the whole line
Delta = -1), and a maximum E_plus = Omega + A on the line Delta = +1.  A drive
enters through

    H1(t) = G(t)*Delta - F(t)*sqrt(1 - Delta**2)*cos(Theta/2),

which is 4*pi-periodic in Theta, so Theta is kept unwrapped on the real line
and the physical state identifies Theta with Theta + 4*pi.

Sign convention: the flow is exactly the canonical flow of H0 + H1,

    dDelta/dt = -dH/dTheta,    dTheta/dt = +dH/dDelta.

This is fixed by requiring the self-trapped points to be equilibria of the
energy landmarks above; a global sign flip of H would traverse the same
curves in reversed time and is dynamically equivalent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import NonPositiveOverlap, NoSelfTrapping, SingularAmplitudeTerm

#: Guard band half-width at Delta = +-1 inside which a nonzero odd drive is
#: rejected (the Delta/sqrt(1-Delta^2) term is singular there).
EPS_DELTA_GUARD = 1e-12


@dataclass(frozen=True)
class OverlapInputs:
    """Mode-overlap integrals and linear eigenenergies of the two lowest modes.

    Parameters
    ----------
    j00, j01, j11 : float
        Overlap integrals of the squared mode functions; all positive and
        constrained by Cauchy-Schwarz, j01**2 <= j00*j11.
    e0, e1 : float
        Linear eigenenergies of the even and odd mode.
    lam : float
        Nonlinearity strength; lam = 0 reduces to the linear two-level system.
    hbar : float
        Action scale, default 1.
    """

    j00: float
    j01: float
    j11: float
    e0: float
    e1: float
    lam: float
    hbar: float = 1.0

    def __post_init__(self):
        if not (self.j00 > 0 and self.j01 > 0 and self.j11 > 0):
            raise NonPositiveOverlap(
                f"overlap integrals must be positive, got "
                f"j00={self.j00}, j01={self.j01}, j11={self.j11}"
            )
        if self.j01**2 > self.j00 * self.j11:
            raise NonPositiveOverlap(
                "Cauchy-Schwarz violated: j01^2 > j00*j11"
            )
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")


@dataclass(frozen=True)
class ModelParams:
    """Frequencies (Omega, A, B) of the reduced Hamiltonian, plus landmarks.

    All three constants carry frequency units (hbar = 1).  Derived landmarks
    are cached on first access:

    - ``delta0``: population difference of the self-trapped points,
    - ``e_minus``: minimum energy (at the self-trapped points),
    - ``e_sep``: separatrix energy A - Omega,
    - ``e_plus``: maximum energy (the line Delta = +1),
    - ``omega0``: small-oscillation frequency around the self-trapped points.
    """

    Omega: float
    A: float
    B: float

    def __post_init__(self):
        if self.A + self.B < 0:
            raise NoSelfTrapping(
                f"A + B = {self.A + self.B} must be non-negative"
            )
        if self.A + self.B > 0 and \
                abs(self.Omega) >= 2.0 * (self.A + self.B):
            raise NoSelfTrapping(
                f"|Omega| = {abs(self.Omega)} >= 2(A+B) = "
                f"{2.0 * (self.A + self.B)}: stationary states fall outside "
                "|Delta| < 1"
            )
        # A + B == 0 is the linear two-level reduction: the constants are
        # valid but there are no self-trapped landmarks (accessing them
        # raises)

    @cached_property
    def delta0(self) -> float:
        if self.A + self.B == 0:
            raise NoSelfTrapping("linear reduction has no self-trapped "
                                 "states (A + B = 0)")
        return -self.Omega / (2.0 * (self.A + self.B))

    @cached_property
    def e_minus(self) -> float:
        d0 = self.delta0
        return self.Omega * d0 + self.A * d0**2 - self.B * (1.0 - d0**2)

    @cached_property
    def e_sep(self) -> float:
        return self.A - self.Omega

    @cached_property
    def e_plus(self) -> float:
        return self.Omega + self.A

    @cached_property
    def omega0(self) -> float:
        d0 = self.delta0
        return math.sqrt(2.0 * (self.A + self.B) * self.B * (1.0 - d0**2))

    @property
    def energy_span(self) -> float:
        return self.e_plus - self.e_minus


def standard_params() -> ModelParams:
    """The standard parameter set used by all bundled experiments."""
    return ModelParams(Omega=5.388, A=1.902, B=2.022)


@dataclass(frozen=True)
class PhaseState:
    """Canonical pair (delta, theta); theta is unwrapped (real line)."""

    delta: float
    theta: float

    def __post_init__(self):
        if not -1.0 <= self.delta <= 1.0:
            raise ValueError(f"delta = {self.delta} outside [-1, 1]")
        if not math.isfinite(self.theta):
            raise ValueError("theta must be finite")


@dataclass(frozen=True)
class DriveSample:
    """Instantaneous drive values: f is the odd channel, g the diagonal one."""

    f: float = 0.0
    g: float = 0.0


@dataclass(frozen=True)
class Region:
    """Phase-space region label.

    ``kind`` is one of ``"left"``, ``"right"`` (well loops, with unwrapped
    winding index), ``"outer"``, or ``"near-separatrix"``.
    """

    kind: str
    winding: int = 0

    @property
    def in_well(self) -> bool:
        return self.kind in ("left", "right")


def derive_model_params(inputs: OverlapInputs) -> ModelParams:
    """Reduce overlap integrals and eigenenergies to (Omega, A, B).

    With beta_i = (e_i + lam*j_ii)/hbar the constants are

        Omega = 2*(beta1 - beta0) + lam*(j11 - j00)/hbar,
        A     = lam*(4*j01 - j00 - j11)/(2*hbar),
        B     = lam*j01/hbar.

    Raises
    ------
    NoSelfTrapping
        If the resulting parameters put the stationary points outside
        |Delta| < 1.
    """
    lam_h = inputs.lam / inputs.hbar
    beta0 = (inputs.e0 + inputs.lam * inputs.j00) / inputs.hbar
    beta1 = (inputs.e1 + inputs.lam * inputs.j11) / inputs.hbar
    omega = 2.0 * (beta1 - beta0) + lam_h * (inputs.j11 - inputs.j00)
    a = 0.5 * lam_h * (4.0 * inputs.j01 - inputs.j00 - inputs.j11)
    b = lam_h * inputs.j01
    return ModelParams(Omega=omega, A=a, B=b)


def h0_energy(state: PhaseState, params: ModelParams) -> float:
    """Conservative energy of a state."""
    d, th = state.delta, state.theta
    return (
        params.Omega * d
        + params.A * d * d
        - params.B * (1.0 - d * d) * math.cos(th)
    )


def energy_of(delta, theta, params: ModelParams):
    """Vectorized conservative energy; accepts scalars or numpy arrays."""
    return (
        params.Omega * delta
        + params.A * delta * delta
        - params.B * (1.0 - delta * delta) * np.cos(theta)
    )


def offdiag_coupling(delta, theta):
    """Drive coupling strength sqrt(1 - delta^2)*cos(theta/2) (vectorized).

    The odd drive enters the Hamiltonian as -F(t) times this function; it is
    4*pi-periodic in theta and vanishes on both lines delta = +-1.
    """
    return np.sqrt(np.maximum(1.0 - np.asarray(delta) ** 2, 0.0)) * np.cos(
        np.asarray(theta) / 2.0
    )


def offdiag_coupling_rate(delta, theta, params: ModelParams):
    """Time derivative of `offdiag_coupling` along the unperturbed flow.

    Uses the product form of the chain rule in which the 1/sqrt(1-delta^2)
    factor cancels against the flow, so the expression stays finite on
    delta = +-1.
    """
    delta = np.asarray(delta, dtype=float)
    theta = np.asarray(theta, dtype=float)
    root = np.sqrt(np.maximum(1.0 - delta * delta, 0.0))
    dtheta = (
        params.Omega
        + 2.0 * params.A * delta
        + 2.0 * params.B * delta * np.cos(theta)
    )
    # dW/dDelta * dDelta/dt with the square roots combined analytically:
    term1 = params.B * delta * root * np.sin(theta) * np.cos(theta / 2.0)
    term2 = -0.5 * root * np.sin(theta / 2.0) * dtheta
    return term1 + term2


def h1_energy(state: PhaseState, drive: DriveSample) -> float:
    """Drive energy g*Delta - f*sqrt(1-Delta^2)*cos(Theta/2)."""
    d, th = state.delta, state.theta
    root = math.sqrt(max(1.0 - d * d, 0.0))
    return drive.g * d - drive.f * root * math.cos(th / 2.0)


def eom_rhs(
    state: PhaseState,
    params: ModelParams,
    drive: DriveSample | None = None,
    eps_delta: float = EPS_DELTA_GUARD,
) -> tuple[float, float]:
    """Right-hand side (dDelta/dt, dTheta/dt) of the canonical flow.

    Raises
    ------
    SingularAmplitudeTerm
        If |delta| >= 1 - eps_delta while the odd drive is nonzero.
    """
    f = 0.0 if drive is None else drive.f
    g = 0.0 if drive is None else drive.g
    d, th = state.delta, state.theta
    sh = math.sin(th / 2.0)
    ch = math.cos(th / 2.0)
    sin_th = 2.0 * sh * ch
    cos_th = 1.0 - 2.0 * sh * sh
    one_m_d2 = 1.0 - d * d
    ddelta = -params.B * one_m_d2 * sin_th
    dtheta = params.Omega + 2.0 * params.A * d + 2.0 * params.B * d * cos_th + g
    if f != 0.0:
        if abs(d) >= 1.0 - eps_delta:
            raise SingularAmplitudeTerm(
                f"|delta| = {abs(d)} inside the guard band with f = {f}"
            )
        root = math.sqrt(one_m_d2)
        ddelta += -0.5 * f * root * sh
        dtheta += f * (d / root) * ch
    return ddelta, dtheta


@dataclass(frozen=True)
class Landmarks:
    """Closed-form landmarks of the unperturbed phase space.

    ``saddle_theta`` is the positive Theta of the saddle points on the line
    delta = -1 (the whole line lies on the separatrix); ``vertex_delta`` is
    the inner vertex of a separatrix loop at its center Theta.
    """

    delta0: float
    e_minus: float
    e_sep: float
    e_plus: float
    omega0: float
    saddle_theta: float
    vertex_delta: float
    saddle_line_delta: float = -1.0


def stationary_points(params: ModelParams) -> Landmarks:
    """Fixed points and energy landmarks of the conservative flow."""
    # Saddles sit on delta = -1 where dTheta/dt = Omega - 2A - 2B cos(theta)
    # vanishes; the separatrix loop meets its center line at vertex_delta.
    cos_saddle = (params.Omega - 2.0 * params.A) / (2.0 * params.B)
    if not -1.0 < cos_saddle < 1.0:
        raise NoSelfTrapping(
            "no saddle on the delta = -1 line: separatrix structure absent"
        )
    return Landmarks(
        delta0=params.delta0,
        e_minus=params.e_minus,
        e_sep=params.e_sep,
        e_plus=params.e_plus,
        omega0=params.omega0,
        saddle_theta=math.acos(cos_saddle),
        vertex_delta=1.0 - params.Omega / (params.A + params.B),
    )


def loop_parity(theta: float) -> tuple[str, int]:
    """Nearest loop center of an unwrapped phase: kind and winding index."""
    m = math.floor(theta / (2.0 * math.pi) + 0.5)
    if m % 2 == 0:
        return "left", m // 2
    return "right", (m - 1) // 2


def classify_region(
    state: PhaseState, params: ModelParams, margin: float
) -> Region:
    """Label a state by its position relative to the separatrix.

    States with energy below e_sep - margin belong to the well loop whose
    center (Theta = 0 mod 4*pi for the left, 2*pi mod 4*pi for the right) is
    nearest in unwrapped Theta; above e_sep + margin they are outer; within
    the margin band they are near-separatrix.
    """
    e = h0_energy(state, params)
    if e < params.e_sep - margin:
        kind, k = loop_parity(state.theta)
        return Region(kind, k)
    if e > params.e_sep + margin:
        return Region("outer")
    return Region("near-separatrix")
