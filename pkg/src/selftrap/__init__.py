"""selftrap: two-mode double-well dynamics toolkit.

Simulation of the reduced (population difference, relative phase) model of a
particle in a symmetric double well with a weak nonlinearity: harmonic-drive
separatrix-crossing thresholds, chaotic-layer energy statistics, and
noise-driven energy diffusion between the self-trapped states.
"""

from ._backend import BACKEND
from .model import (
    ModelParams,
    OverlapInputs,
    PhaseState,
    derive_model_params,
    standard_params,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ModelParams",
    "OverlapInputs",
    "PhaseState",
    "derive_model_params",
    "standard_params",
    "__version__",
]
