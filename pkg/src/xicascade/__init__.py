"""Exact dynamics of a cascade three-level atom in a two-mode field with
time-modulated coupling, detuning, Kerr nonlinearity and phase damping."""

from .analytic import propagate_block, solve_block
from .config import ConfigError, RunConfig, parse_config
from .cubic import CubicRoots, solve_cubic
from .model import BlockIndex, ModelParams, block_coefficients, coherent_weight, derive_slow_detunings
from .numeric import cross_validate, integrate_block
from .observables import concurrence, population_inversion, reduced_density_matrix
from .presets import FigurePreset, load_preset, preset_ids
from .pipeline import ObservableSeries, simulate, write_csv

__version__ = "0.1.0"

__all__ = [
    "BlockIndex", "ConfigError", "CubicRoots", "FigurePreset", "ModelParams", "ObservableSeries",
    "RunConfig", "block_coefficients", "coherent_weight", "concurrence", "cross_validate",
    "derive_slow_detunings", "integrate_block", "load_preset", "parse_config", "population_inversion",
    "preset_ids", "propagate_block", "reduced_density_matrix", "simulate", "solve_block",
    "solve_cubic", "write_csv",
]
