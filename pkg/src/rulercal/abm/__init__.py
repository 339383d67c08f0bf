from .model import (
    HcvSimulation,
    SimOutcome,
    SimulationError,
    make_abm_run_fn,
    run_replication,
)
from .params import (
    District,
    InfeasibleParamsError,
    ModelParams,
    YEAR_DAYS,
    idu_visit_prob,
    medical_infection_prob,
    medical_visit_prob,
    needle_share_reference,
    solve_influence_probs,
)

__all__ = [
    "HcvSimulation", "SimOutcome", "SimulationError", "make_abm_run_fn",
    "run_replication", "District", "InfeasibleParamsError", "ModelParams",
    "YEAR_DAYS", "idu_visit_prob", "medical_infection_prob",
    "medical_visit_prob", "needle_share_reference", "solve_influence_probs",
]
