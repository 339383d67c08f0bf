"""HCV simulation parameters and the probabilities derived from them.

The model year is 360 days. Three inputs are calibrated: the per-event
infection probability in the medical environment (x1), the per-injecting-
event needle sharing probability (x2), and the per-event influence
probability that converts a non-injector into an injector (x3). Everything
else is estimated from survey data and fixed in configuration.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

YEAR_DAYS = 360

__all__ = [
    "YEAR_DAYS",
    "District",
    "ModelParams",
    "medical_visit_prob",
    "medical_infection_prob",
    "idu_visit_prob",
    "needle_share_reference",
    "solve_influence_probs",
    "InfeasibleParamsError",
]


class InfeasibleParamsError(ValueError):
    """Parameter combination has no valid probability solution."""


@dataclass(frozen=True)
class District:
    """Survey district: population, weekly injecting frequency among IDUs,
    and the proportion of IDUs reporting needle sharing."""

    population: float
    weekly_injecting_freq: float
    needle_share_prop: float = 0.0


@dataclass(frozen=True)
class ModelParams:
    """All simulator inputs. x1/x2/x3 are the calibration parameters."""

    # Calibration parameters
    x1: float = 0.036    # per-event medical infection probability
    x2: float = 0.3      # per-injecting-event needle sharing probability
    x3: float = 2.1e-5   # per-event influence (IDU conversion) probability

    # Annual per-person counts of medical events
    n_inj: float = 2.9
    n_bt: float = 0.05
    n_sur: float = 0.1
    n_dp: float = 0.55

    # Needle-stick / injection infection probability inside sharing groups
    p_inj: float = 0.025

    # District survey data driving the IDU visit probability
    district_data: tuple[District, ...] = (
        District(population=1_000_000, weekly_injecting_freq=5.6, needle_share_prop=0.55),
        District(population=500_000, weekly_injecting_freq=4.2, needle_share_prop=0.40),
    )

    # Unemployment proportions (IDU vs general population)
    p_ue_idu: float = 0.4
    p_ue_gen: float = 0.1

    non_idu_visit_prob: float = 1.0 / 7.0
    idu_group_size: int = 3
    education_fraction: float = 0.20
    sexual_transmission_prob: float = 1e-5  # daily, per discordant pair

    population_size: int = 5000
    horizon_days: int = 10 * YEAR_DAYS
    year_length_days: int = YEAR_DAYS

    # Initialization and demography (burn-in is meant to wash these out)
    init_rna_prevalence: float = 0.005
    init_idu_prevalence: float = 0.0005
    init_idu_rna_frac: float = 0.3   # HCV runs far higher among injectors
    rna_clearance_prob: float = 0.26
    clearance_window_days: int = 180
    max_age_years: int = 75

    def __post_init__(self):
        for name in ("x1", "x2", "x3", "p_inj", "p_ue_idu", "p_ue_gen",
                     "non_idu_visit_prob", "education_fraction",
                     "sexual_transmission_prob", "init_rna_prevalence",
                     "init_idu_prevalence", "init_idu_rna_frac", "rna_clearance_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be a probability in [0, 1], got {v}")
        for name in ("n_inj", "n_bt", "n_sur", "n_dp"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.year_length_days != YEAR_DAYS:
            raise ValueError(f"year_length_days is fixed at {YEAR_DAYS}")
        if self.population_size < 0 or self.horizon_days < 0:
            raise ValueError("population_size and horizon_days must be >= 0")
        if self.idu_group_size < 2:
            raise ValueError("idu_group_size must be >= 2 for sharing to occur")
        if not self.district_data:
            raise ValueError("district_data must be non-empty")

    def with_x(self, x) -> "ModelParams":
        """Copy with the calibration triple replaced."""
        x1, x2, x3 = (float(v) for v in x)
        return replace(self, x1=x1, x2=x2, x3=x3)


def medical_visit_prob(params: ModelParams) -> float:
    """Daily probability of any agent visiting the medical environment:
    total annual medical events spread over the 360-day year."""
    total = params.n_inj + params.n_bt + params.n_sur + params.n_dp
    if min(params.n_inj, params.n_bt, params.n_sur, params.n_dp) < 0:
        raise ValueError("annual event counts must be >= 0")
    p = total / YEAR_DAYS
    if p > 1.0:
        raise ValueError(f"annual medical events {total} exceed one visit per day")
    return p


def medical_infection_prob(n_inj, n_bt, n_sur, n_dp, p_inj, p_bt, p_sur, p_dp) -> float:
    """Count-weighted mean of the four per-event infection probabilities.

    This is the initial estimate for x1; the calibration overrides it
    because the dental per-event probability is not reliably known.
    """
    counts = (n_inj, n_bt, n_sur, n_dp)
    probs = (p_inj, p_bt, p_sur, p_dp)
    if any(c < 0 for c in counts) or any(not 0 <= p <= 1 for p in probs):
        raise ValueError("counts must be >= 0 and probabilities in [0, 1]")
    total = sum(counts)
    if total == 0:
        raise ValueError("all event counts are zero; weighted mean undefined")
    return sum(c * p for c, p in zip(counts, probs)) / total


def idu_visit_prob(district_data) -> float:
    """Daily probability of an active IDU visiting the social environment.

    Population-weighted mean of the districts' weekly injecting frequencies,
    converted to a daily probability (divide by 7, clamp to 1).
    """
    districts = tuple(district_data)
    if not districts:
        raise ValueError("district list is empty")
    if any(d.population <= 0 for d in districts):
        raise ValueError("district populations must be positive")
    if any(d.weekly_injecting_freq < 0 for d in districts):
        raise ValueError("injecting frequencies must be >= 0")
    weekly = sum(d.population * d.weekly_injecting_freq for d in districts) \
        / sum(d.population for d in districts)
    return min(1.0, weekly / 7.0)


def needle_share_reference(district_data) -> float:
    """Population-weighted proportion of IDUs reporting needle sharing.

    An upper reference for the calibrated per-event sharing probability x2,
    not a value used inside the simulation.
    """
    districts = tuple(district_data)
    if not districts or any(d.population <= 0 for d in districts):
        raise ValueError("district list must be non-empty with positive populations")
    return sum(d.population * d.needle_share_prop for d in districts) \
        / sum(d.population for d in districts)


def solve_influence_probs(p_inf: float, p_ue_idu: float, p_ue_gen: float) -> tuple[float, float]:
    """Split the overall influence probability into employed/unemployed parts.

    Solves the pair of conditions: the population-weighted average of the two
    parts equals p_inf, and their ratio equals the ratio of unemployment
    proportions among IDUs versus the general population. Returns
    (p_inf_employed, p_inf_unemployed).
    """
    if not 0 < p_ue_gen < 1:
        raise InfeasibleParamsError(f"p_ue_gen must be in (0, 1), got {p_ue_gen}")
    if not 0 < p_ue_idu <= 1:
        raise InfeasibleParamsError(f"p_ue_idu must be in (0, 1], got {p_ue_idu}")
    if not 0 <= p_inf <= 1:
        raise InfeasibleParamsError(f"p_inf must be in [0, 1], got {p_inf}")
    r = p_ue_idu / p_ue_gen
    p_inf_e = p_inf / (1.0 + p_ue_gen * (r - 1.0))
    p_inf_ue = r * p_inf_e
    if p_inf_ue > 1.0:
        raise InfeasibleParamsError(
            f"unemployed influence probability {p_inf_ue} exceeds 1; "
            f"p_inf={p_inf} is infeasible for ratio {r}"
        )
    return p_inf_e, p_inf_ue
