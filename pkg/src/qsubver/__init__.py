"""Verification of quantum error-correction code subspaces.

Pauli algebra, code construction, verification strategies and their spectra,
sample-size planning, dense Monte Carlo simulation, and logical fidelity
estimation.
"""

from .codes import (
    LocalProjector,
    ProjectorCode,
    StabilizerCode,
    builtin_code,
    logical_paulis,
    logical_state,
    rotated_projector_code,
)
from .dfe import LogicalTarget, composite_verify, dfe_estimate, logical_fidelity_exact
from .graphs import bitwise_graph, color, color_exact, color_greedy, support_graph
from .pauli import PauliOperator, bitwise_commutes, commutes, merge_setting
from .simulate import NoisySource, error_rate_experiment, prepare_state, run_campaign
from .stats import decide, infidelity_interval, make_plan, plan_firstorder
from .strategies import build_strategy, dense_operator, spectral_summary

__version__ = "0.1.0"
