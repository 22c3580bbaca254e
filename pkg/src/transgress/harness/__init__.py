"""Scenario registry, verifiers, reports and the ``transgress`` command line."""
from .checks import (run_scenario, sweep_quantity, verify_boundary_index_identity, verify_closedness,
                     verify_fiber_normalization, verify_frame_equivariance, verify_gauss_bonnet,
                     verify_odd_transgression, verify_section_properties, verify_thom_shadow,
                     verify_transgression_properties)
from .cli import run_all, run_cli
from .report import Check, Report, report_schema
from .scenarios import Expectation, Scenario, ScenarioError, builtin_scenarios, get_scenario

__all__ = [
    "Check", "Expectation", "Report", "Scenario", "ScenarioError", "builtin_scenarios", "get_scenario",
    "report_schema", "run_all", "run_cli", "run_scenario", "sweep_quantity",
    "verify_boundary_index_identity", "verify_closedness", "verify_fiber_normalization",
    "verify_frame_equivariance", "verify_gauss_bonnet", "verify_odd_transgression",
    "verify_section_properties", "verify_thom_shadow", "verify_transgression_properties",
]
