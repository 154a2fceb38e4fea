"""Exception and warning types shared across the package."""


class SelftrapError(Exception):
    """Base class for all errors raised by this package."""


class NonPositiveOverlap(SelftrapError):
    """Overlap integrals violate positivity or the Cauchy-Schwarz bound."""


class NoSelfTrapping(SelftrapError):
    """Parameters admit no self-trapped fixed points inside |Delta| < 1."""


class SingularAmplitudeTerm(SelftrapError):
    """Trajectory entered the guard band at |Delta| = 1 while driven."""


class StepUnderflow(SelftrapError):
    """Integrator step size collapsed below a usable value."""


class EnergyOutOfRange(SelftrapError):
    """Requested energy lies outside the branch's energy interval."""


class PeriodNotConverged(SelftrapError):
    """Period detection failed, typically too close to the separatrix."""


class WindowTooShort(SelftrapError):
    """Integrand tail at the window ends exceeds the allowed tolerance."""


class BracketFailed(SelftrapError):
    """Bisection bracket could not be established."""


class BadInitialRegion(SelftrapError):
    """Trajectory does not start inside a well loop."""


class DegenerateOccupancy(SelftrapError):
    """Occupancy fraction is zero; transfer time undefined."""


class CutoffAboveNyquist(SelftrapError):
    """Noise cutoff frequency at or above the sampling Nyquist limit."""


class CFLViolation(SelftrapError):
    """Explicit diffusion step exceeds the stability bound."""


class RootNotBracketed(SelftrapError):
    """Root finding interval does not bracket a sign change."""


class DegenerateProfile(SelftrapError):
    """Diffusion profile averages to zero; estimator undefined."""


class AliasWarning(UserWarning):
    """Highest retained harmonic carries a non-negligible share of power."""
