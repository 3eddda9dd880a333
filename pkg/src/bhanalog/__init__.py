"""Bose-Hubbard mean-field dynamics, hydrodynamics and analog spacetime metrics."""

from .dynamics import EvolutionState, IntegratorConfig, Snapshot, energy, evolve, fluct_rhs, gpe_rhs, number
from .geometry import (
    HorizonReport,
    MetricField,
    flrw_metric,
    gw_metric,
    homogeneous_metric,
    horizon_scan,
    kg_residual,
    line_element,
    perturbation_metric,
    superfluid_metric,
)
from .hydro import HydroState, fluct_to_hydro, hydro_to_fluct, to_density_phase
from .lattice import LatticeGrid, divergence, gradient, laplacian, weighted_laplacian
from .params import BHParams, Schedule
from .runner import RunManifest, run
from .scenarios import Scenario, list_presets, load_scenario, preset, preset_dict
from .spectra import bdg_oracle, bogoliubov_limit, extract_dispersion, lattice_dispersion

__all__ = [
    "BHParams", "EvolutionState", "HorizonReport", "HydroState", "IntegratorConfig", "LatticeGrid",
    "MetricField", "RunManifest", "Scenario", "Schedule", "Snapshot", "bdg_oracle", "bogoliubov_limit",
    "divergence", "energy", "evolve", "extract_dispersion", "flrw_metric", "fluct_rhs", "fluct_to_hydro",
    "gpe_rhs", "gradient", "gw_metric", "homogeneous_metric", "horizon_scan", "hydro_to_fluct",
    "kg_residual", "laplacian", "lattice_dispersion", "line_element", "list_presets", "load_scenario",
    "number", "perturbation_metric", "preset", "preset_dict", "run", "superfluid_metric", "to_density_phase",
    "weighted_laplacian",
]
