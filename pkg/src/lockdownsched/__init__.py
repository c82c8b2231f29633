"""Lockdown visit scheduling: simulation and evolutionary optimisation.

The package models a short lockdown week in which residents request visits
to shops, parks and surgeries.  Two infection models score how a given
time-slot allocation spreads disease, round-robin baselines and an
evolutionary search produce allocations, and the experiment layer writes
reproducible reports.
"""

from .allocation import (
    AllocationPlan,
    bound_value,
    bound_vector,
    decode,
    read_plan_csv,
    round_robin,
    write_plan_csv,
)
from .dataset import (
    AGE_GROUPS,
    Dataset,
    DatasetFormatError,
    Person,
    VisitRequest,
    generate_dataset,
    load_dataset,
    mark_apriori_infection,
    parse_dataset,
    parse_priors,
    save_dataset,
    serialize_dataset,
)
from .experiment import ExperimentSpec, compare, run_experiment, run_from_manifest
from .full_infection import (
    InfectionStatus,
    PnTable,
    Status,
    analytic_pn,
    build_pn_table,
    load_or_build_pn_table,
    transmit,
)
from .gp_engine import (
    Archive,
    GpConfig,
    SolutionRecord,
    config_from_file,
    evolve_pir,
    run_pirs,
)
from .gp_tree import GpNode, eval_tree, genotype_to_vector, run_machine
from .partial_infection import (
    EncounterGroup,
    apply_update,
    brute_force_pressure,
    encounter_pressure,
    g_factor,
)
from .simulator import (
    MODEL_FULL,
    MODEL_PARTIAL,
    SimOutcome,
    fitness,
    fitness_value,
    simulate,
)

__version__ = "0.1.0"

__all__ = [
    "AGE_GROUPS",
    "AllocationPlan",
    "Archive",
    "Dataset",
    "DatasetFormatError",
    "EncounterGroup",
    "ExperimentSpec",
    "GpConfig",
    "GpNode",
    "InfectionStatus",
    "MODEL_FULL",
    "MODEL_PARTIAL",
    "Person",
    "PnTable",
    "SimOutcome",
    "SolutionRecord",
    "Status",
    "VisitRequest",
    "analytic_pn",
    "apply_update",
    "bound_value",
    "bound_vector",
    "brute_force_pressure",
    "build_pn_table",
    "compare",
    "config_from_file",
    "decode",
    "encounter_pressure",
    "eval_tree",
    "evolve_pir",
    "fitness",
    "fitness_value",
    "g_factor",
    "generate_dataset",
    "genotype_to_vector",
    "load_dataset",
    "load_or_build_pn_table",
    "mark_apriori_infection",
    "parse_dataset",
    "parse_priors",
    "read_plan_csv",
    "round_robin",
    "run_experiment",
    "run_from_manifest",
    "run_machine",
    "run_pirs",
    "save_dataset",
    "serialize_dataset",
    "simulate",
    "transmit",
    "write_plan_csv",
]
