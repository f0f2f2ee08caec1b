"""Quantum sampling on distributed multiset databases.

The package simulates a coordinator that samples an element with
probability proportional to its total multiplicity across ``n`` machines,
using counting-oracle queries only.  It provides the register-level
simulator, the two distributing-operator constructions (sequential and
parallel), the zero-error amplification schedule, and a replay harness
that bounds how much a query-limited run can depend on any one machine's
contents.
"""

from __future__ import annotations

from .adversary import (
    AdversaryReport,
    BoundCheck,
    BoundsReport,
    HardInputCheck,
    HardInputFamily,
    HardInputParams,
    PairTrajectories,
    PotentialTrace,
    UhlmannFidelity,
    check_hard_input,
    enumerate_family,
    fidelity_eigen,
    fidelity_uhlmann,
    potential_Dt,
    run_adversary,
    simulate_pair,
    verify_bounds,
)
from .database import (
    DatabaseStats,
    DistributedDatabase,
    load_scenario,
    target_state,
    to_document,
    update_multiplicity,
)
from .errors import QdsError
from .oracles import (
    QueryCounter,
    apply_controlled_oracle,
    apply_parallel_oracle,
    apply_sequential_oracle,
)
from .registers import (
    BasisIndex,
    RegisterLayout,
    StateVector,
    apply_basis_map,
    apply_conditioned_rotation,
    branch_norms_by_elem,
    inner_product,
    prepare_uniform,
)
from .sampler import (
    AASchedule,
    OracleStep,
    SamplerReport,
    UnitaryStep,
    apply_D_parallel,
    apply_D_sequential,
    apply_S_chi,
    apply_S_pi,
    build_schedule,
    build_trace,
    build_truncated_trace,
    closing_phases,
    run_sampling,
    steps_from_json,
    steps_to_json,
)

__version__ = "0.1.0"

__all__ = [
    "AASchedule",
    "AdversaryReport",
    "BasisIndex",
    "BoundCheck",
    "BoundsReport",
    "DatabaseStats",
    "DistributedDatabase",
    "HardInputCheck",
    "HardInputFamily",
    "HardInputParams",
    "OracleStep",
    "PairTrajectories",
    "PotentialTrace",
    "QdsError",
    "QueryCounter",
    "RegisterLayout",
    "SamplerReport",
    "StateVector",
    "UhlmannFidelity",
    "UnitaryStep",
    "apply_D_parallel",
    "apply_D_sequential",
    "apply_S_chi",
    "apply_S_pi",
    "apply_basis_map",
    "apply_conditioned_rotation",
    "apply_controlled_oracle",
    "apply_parallel_oracle",
    "apply_sequential_oracle",
    "branch_norms_by_elem",
    "build_schedule",
    "build_trace",
    "build_truncated_trace",
    "check_hard_input",
    "closing_phases",
    "enumerate_family",
    "fidelity_eigen",
    "fidelity_uhlmann",
    "inner_product",
    "load_scenario",
    "potential_Dt",
    "prepare_uniform",
    "run_adversary",
    "run_sampling",
    "simulate_pair",
    "steps_from_json",
    "steps_to_json",
    "target_state",
    "to_document",
    "update_multiplicity",
    "verify_bounds",
    "__version__",
]
