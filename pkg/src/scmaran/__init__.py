"""Worst-case robust scheduling and beamforming for sparse-code multiple
access over a cloud radio access network."""

from .asm import (
    AsmOptions,
    ScenarioInfeasible,
    Solution,
    check_feasibility,
    constraint_counts,
    initial_point,
    run_asm,
)
from .assign import AssignInfeasible, build_assignment_problem, solve_bnb, solve_exhaustive
from .beamform import build_subproblem, init_beamformers, solve_subproblem
from .channel import ChannelSet, FadingModel, generate_channels, uncertainty_bound
from .harness import (
    ExperimentSpec,
    ResultTable,
    compare_access,
    compare_association,
    compare_channels,
    load_spec,
    run_experiment,
    run_point,
    save_spec,
)
from .rate import Assignment, BeamformerSet, RateReport, aggregate_report, sinr_tables
from .scma import CodebookMap, build_codebook_map, ofdma_map
from .topology import NetworkConfig, Topology, generate_topology, validate_config

__version__ = "0.1.0"

__all__ = [
    "AsmOptions",
    "AssignInfeasible",
    "Assignment",
    "BeamformerSet",
    "ChannelSet",
    "CodebookMap",
    "ExperimentSpec",
    "FadingModel",
    "NetworkConfig",
    "RateReport",
    "ResultTable",
    "ScenarioInfeasible",
    "Solution",
    "Topology",
    "aggregate_report",
    "build_assignment_problem",
    "build_codebook_map",
    "build_subproblem",
    "check_feasibility",
    "compare_access",
    "compare_association",
    "compare_channels",
    "constraint_counts",
    "generate_channels",
    "generate_topology",
    "init_beamformers",
    "initial_point",
    "load_spec",
    "ofdma_map",
    "run_asm",
    "run_experiment",
    "run_point",
    "save_spec",
    "sinr_tables",
    "solve_bnb",
    "solve_exhaustive",
    "solve_subproblem",
    "uncertainty_bound",
    "validate_config",
]
