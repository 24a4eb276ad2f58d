from .special import (
    AccuracyError,
    KummerPoleError,
    hyperu,
    kummer_m,
    kummer_m_crosscheck,
    psi_at_zero,
    tricomi_psi,
)
from .steady import SteadyValues, steady_residual, steady_solution, steady_value, wall_limit
from .manufactured import REGISTRY, ManufacturedSolution, manufactured_solution

__all__ = [
    "AccuracyError",
    "KummerPoleError",
    "hyperu",
    "kummer_m",
    "kummer_m_crosscheck",
    "psi_at_zero",
    "tricomi_psi",
    "SteadyValues",
    "steady_residual",
    "steady_solution",
    "steady_value",
    "wall_limit",
    "REGISTRY",
    "ManufacturedSolution",
    "manufactured_solution",
]
