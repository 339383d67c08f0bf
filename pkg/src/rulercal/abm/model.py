"""Daily-step agent-based HCV transmission simulation.

Agents live in family groups assigned to one of three geographical
clusters and move through three transmission settings each day:

* medical: agents visit one of 40 professionals; at the 20 contaminated
  workspaces, susceptible visitors arriving after an RNA-positive visitor
  are infected with probability x1 (workspace exposure resets overnight);
* social: active injectors visit with the survey-derived daily probability,
  everyone else about once a week; within a cluster, non-injectors meeting
  injectors take up injecting with the influence probability (split by
  employment status), and injecting groups of three share a needle with
  probability x2, transmitting per susceptible sharer with the
  per-injection infection probability;
* education: enrolled 18-24-year-olds repeat the conversion and sharing
  processes on weekdays without cluster restriction.

Sexual transmission between cohabiting pairs uses a small fixed daily
probability and is excluded from calibration. State is held in flat numpy
arrays; one replicate is strictly single-threaded and deterministic given
(params, seed).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..seeding import generator
from .params import (
    YEAR_DAYS,
    ModelParams,
    idu_visit_prob,
    medical_visit_prob,
    solve_influence_probs,
)

__all__ = [
    "HCV_SUSCEPTIBLE", "HCV_RNA_POSITIVE", "HCV_CLEARED",
    "IDU_NON", "IDU_ACTIVE", "IDU_FORMER",
    "SimOutcome", "HcvSimulation", "run_replication", "SimulationError",
]

HCV_SUSCEPTIBLE = 0
HCV_RNA_POSITIVE = 1
HCV_CLEARED = 2          # antibody-positive, RNA-negative

IDU_NON = 0
IDU_ACTIVE = 1
IDU_FORMER = 2

N_PROFESSIONALS = 40
N_CONTAMINATED = 20
N_CLUSTERS = 3

IDU_MIN_AGE = 18 * YEAR_DAYS
IDU_MAX_AGE = 32 * YEAR_DAYS
IDU_MAX_DURATION = 3 * YEAR_DAYS
EDU_MIN_AGE = 18 * YEAR_DAYS
EDU_MAX_AGE = 25 * YEAR_DAYS
GROUP_BASE_SIZE = 6      # older pair + young pair + two children


class SimulationError(RuntimeError):
    """The simulation reached an unusable state."""


@dataclass(frozen=True)
class SimOutcome:
    """Prevalence triple, each in percent of the living population."""

    y1: float  # HCV antibody prevalence (ever infected)
    y2: float  # HCV RNA prevalence (currently infected)
    y3: float  # active injecting drug use prevalence

    def __post_init__(self):
        if not (0.0 <= self.y2 <= self.y1 <= 100.0):
            raise ValueError(f"need 0 <= y2 <= y1 <= 100, got y1={self.y1}, y2={self.y2}")
        if not 0.0 <= self.y3 <= 100.0:
            raise ValueError(f"y3 out of range: {self.y3}")

    def as_array(self) -> np.ndarray:
        return np.array([self.y1, self.y2, self.y3], dtype=float)


class HcvSimulation:
    """Mutable simulation state plus the per-day update.

    Every random process draws from its own named stream derived from the
    replicate seed, with state-independent streams consuming a fixed number
    of draws per day. That keeps paired runs (same seed, different
    calibration parameters) tightly coupled, which is what makes the
    monotone response of outcomes to parameters visible at desk scale.
    """

    def __init__(self, params: ModelParams, seed: int):
        if params.population_size < GROUP_BASE_SIZE:
            raise SimulationError(
                f"population_size must be at least {GROUP_BASE_SIZE} to form a family group"
            )
        self.params = params
        self.seed = int(seed)
        self.day = 0
        self.n = params.population_size

        self.p1 = medical_visit_prob(params)
        self.p3 = idu_visit_prob(params.district_data)
        self.p_inf_e, self.p_inf_ue = solve_influence_probs(
            params.x3, params.p_ue_idu, params.p_ue_gen)
        self.max_age_days = params.max_age_years * YEAR_DAYS

        names = ["init", "medical-presence", "medical-visit", "medical-infect",
                 "social-presence", "conversion", "needle",
                 "edu-conversion", "edu-needle", "sexual", "demography"]
        self._streams = {name: generator(self.seed, "abm", name) for name in names}

        # Professionals: fixed count, half with contaminated workspaces.
        self.contaminated = np.zeros(N_PROFESSIONALS, dtype=bool)
        self.contaminated[:N_CONTAMINATED] = True

        self._ids = np.arange(self.n)
        self._init_population()

    # ------------------------------------------------------------------ setup

    def _init_population(self):
        p = self.params
        n = self.n
        rng = self._streams["init"]

        n_groups = n // GROUP_BASE_SIZE
        remainder = n - n_groups * GROUP_BASE_SIZE

        age = np.empty(n, dtype=np.int64)
        group = np.empty(n, dtype=np.int64)
        spouse = np.full(n, -1, dtype=np.int64)

        pos = 0
        for g in range(n_groups):
            size = GROUP_BASE_SIZE + (1 if g < remainder else 0)
            old = rng.integers(48 * YEAR_DAYS, 70 * YEAR_DAYS, size=2)
            young = rng.integers(23 * YEAR_DAYS, 48 * YEAR_DAYS, size=2)
            kids = rng.integers(0, 23 * YEAR_DAYS, size=size - 4)
            age[pos:pos + size] = np.concatenate([old, young, kids])
            group[pos:pos + size] = g
            spouse[pos], spouse[pos + 1] = pos + 1, pos
            spouse[pos + 2], spouse[pos + 3] = pos + 3, pos + 2
            pos += size

        self.age = age
        self.group = group
        self.spouse = spouse
        group_cluster = rng.integers(0, N_CLUSTERS, size=n_groups)
        self.cluster = group_cluster[group].astype(np.int8)

        self.hcv = np.full(n, HCV_SUSCEPTIBLE, dtype=np.int8)
        self.idu = np.full(n, IDU_NON, dtype=np.int8)
        self.idu_expiry = np.full(n, -1, dtype=np.int64)
        self.idu_init_age = np.full(n, -1, dtype=np.int64)
        self.clearance_day = np.full(n, -1, dtype=np.int64)
        self.unemployed = rng.random(n) < p.p_ue_gen
        self.enrolled = ((age >= EDU_MIN_AGE) & (age < EDU_MAX_AGE)
                         & (rng.random(n) < p.education_fraction))

        # Per-agent clearance fate, fixed up front: whether an infection will
        # clear (antibody-positive, RNA-negative) and after how many days.
        # Agents infect at most once, so one draw per agent suffices.
        self.clear_fate = rng.random(n) < p.rna_clearance_prob
        self.clear_delay = 1 + (rng.random(n) * p.clearance_window_days).astype(np.int64)

        n_rna = int(round(p.init_rna_prevalence * n))
        if n_rna > 0:
            seeded = rng.choice(n, size=n_rna, replace=False)
            seeded.sort()
            self.hcv[seeded] = HCV_RNA_POSITIVE
            self._schedule_clearance(seeded)

        eligible = np.flatnonzero((age >= IDU_MIN_AGE) & (age <= IDU_MAX_AGE))
        n_idu = min(int(round(p.init_idu_prevalence * n)), eligible.size)
        if n_idu > 0:
            chosen = rng.choice(eligible, size=n_idu, replace=False)
            chosen.sort()
            tenure_cap = np.minimum(IDU_MAX_DURATION, age[chosen] - IDU_MIN_AGE + 1)
            tenure = (rng.random(n_idu) * tenure_cap).astype(np.int64)
            self.idu[chosen] = IDU_ACTIVE
            self.idu_expiry[chosen] = IDU_MAX_DURATION - tenure
            self.idu_init_age[chosen] = age[chosen] - tenure
            # HCV prevalence among injectors far exceeds the general
            # population's; seed the injecting pool accordingly.
            uninfected = chosen[self.hcv[chosen] == HCV_SUSCEPTIBLE]
            n_idu_rna = min(int(round(p.init_idu_rna_frac * n_idu)), uninfected.size)
            if n_idu_rna > 0:
                idu_seeded = rng.choice(uninfected, size=n_idu_rna, replace=False)
                idu_seeded.sort()
                self.hcv[idu_seeded] = HCV_RNA_POSITIVE
                self._schedule_clearance(idu_seeded)

    # ------------------------------------------------------------- transitions

    def _schedule_clearance(self, agents: np.ndarray):
        """Some newly RNA-positive agents clear the virus within six months,
        remaining antibody-positive."""
        chosen = agents[self.clear_fate[agents]]
        self.clearance_day[chosen] = self.day + self.clear_delay[chosen]

    def _infect(self, agents):
        agents = np.unique(np.asarray(agents, dtype=np.int64))
        if agents.size == 0:
            return
        self.hcv[agents] = HCV_RNA_POSITIVE
        self._schedule_clearance(agents)

    def _convert_to_idu(self, agents):
        agents = np.unique(np.asarray(agents, dtype=np.int64))
        if agents.size == 0:
            return
        self.idu[agents] = IDU_ACTIVE
        self.idu_expiry[agents] = self.day + IDU_MAX_DURATION
        self.idu_init_age[agents] = self.age[agents]

    # ------------------------------------------------------------ environments

    def _medical_step(self):
        p = self.params
        u = self._streams["medical-presence"].random(self.n)
        visitors = np.flatnonzero(u < self.p1)
        if visitors.size == 0:
            return
        vstream = self._streams["medical-visit"]
        visitors = visitors[vstream.permutation(visitors.size)]
        profs = vstream.integers(0, N_PROFESSIONALS, size=visitors.size)
        u_inf = self._streams["medical-infect"].random(visitors.size)

        exposed = np.zeros(N_PROFESSIONALS, dtype=bool)  # resets every day
        hcv = self.hcv
        newly = []
        for agent, prof, u_i in zip(visitors, profs, u_inf):
            if hcv[agent] == HCV_RNA_POSITIVE:
                exposed[prof] = True
            elif (hcv[agent] == HCV_SUSCEPTIBLE and exposed[prof]
                  and self.contaminated[prof] and u_i < p.x1):
                newly.append(agent)
        self._infect(newly)

    def _needle_sharing(self, members: np.ndarray, u_share: np.ndarray,
                        u_inf: np.ndarray, infections: list):
        """Partition present injectors (in agent-id order, so groups are
        stable day to day) into groups; each group shares one needle with
        probability x2, infecting susceptible sharers with the per-injection
        probability when any member is RNA-positive."""
        p = self.params
        for start in range(0, members.size, p.idu_group_size):
            g = members[start:start + p.idu_group_size]
            if g.size < 2:
                continue
            if u_share[g[0]] >= p.x2:
                continue
            if not np.any(self.hcv[g] == HCV_RNA_POSITIVE):
                continue
            sus = g[self.hcv[g] == HCV_SUSCEPTIBLE]
            infections.extend(sus[u_inf[sus] < p.p_inj].tolist())

    def _social_step(self):
        p = self.params
        u_pres = self._streams["social-presence"].random(self.n)
        u_conv = self._streams["conversion"].random(self.n)
        u_share = self._streams["needle"].random(self.n)
        u_ninf = self._streams["needle"].random(self.n)
        active = self.idu == IDU_ACTIVE
        present = np.where(active, u_pres < self.p3, u_pres < p.non_idu_visit_prob)
        thr = np.where(self.unemployed, self.p_inf_ue, self.p_inf_e)
        convertible = (present & (self.idu == IDU_NON)
                       & (self.age >= IDU_MIN_AGE) & (self.age <= IDU_MAX_AGE)
                       & (u_conv < thr))

        converts = []
        infections: list = []
        for c in range(N_CLUSTERS):
            in_cluster = self.cluster == c
            idus_present = np.flatnonzero(in_cluster & present & active)
            if idus_present.size == 0:
                continue
            converts.append(np.flatnonzero(convertible & in_cluster))
            self._needle_sharing(idus_present, u_share, u_ninf, infections)
        if converts:
            self._convert_to_idu(np.concatenate(converts))
        self._infect(infections)

    def _education_step(self):
        u_conv = self._streams["edu-conversion"].random(self.n)
        u_share = self._streams["edu-needle"].random(self.n)
        u_ninf = self._streams["edu-needle"].random(self.n)
        active = self.idu == IDU_ACTIVE
        present = self.enrolled
        idus_present = np.flatnonzero(present & active)
        if idus_present.size == 0:
            return
        thr = np.where(self.unemployed, self.p_inf_ue, self.p_inf_e)
        convertible = (present & (self.idu == IDU_NON)
                       & (self.age >= IDU_MIN_AGE) & (self.age <= IDU_MAX_AGE)
                       & (u_conv < thr))
        self._convert_to_idu(np.flatnonzero(convertible))
        infections: list = []
        self._needle_sharing(idus_present, u_share, u_ninf, infections)
        self._infect(infections)

    def _sexual_step(self):
        p = self.params
        if p.sexual_transmission_prob <= 0.0:
            return
        first = np.flatnonzero((self.spouse >= 0) & (self._ids < self.spouse))
        if first.size == 0:
            return
        partner = self.spouse[first]
        a_rna = self.hcv[first] == HCV_RNA_POSITIVE
        b_rna = self.hcv[partner] == HCV_RNA_POSITIVE
        a_sus = self.hcv[first] == HCV_SUSCEPTIBLE
        b_sus = self.hcv[partner] == HCV_SUSCEPTIBLE
        at_risk_b = a_rna & b_sus
        at_risk_a = b_rna & a_sus
        risk_targets = np.concatenate([partner[at_risk_b], first[at_risk_a]])
        if risk_targets.size == 0:
            return
        risk_targets.sort()
        u = self._streams["sexual"].random(risk_targets.size)
        self._infect(risk_targets[u < p.sexual_transmission_prob])

    # -------------------------------------------------------------- demography

    def _progress_start_of_day(self):
        due = ((self.hcv == HCV_RNA_POSITIVE) & (self.clearance_day >= 0)
               & (self.clearance_day <= self.day))
        self.hcv[due] = HCV_CLEARED
        expired = (self.idu == IDU_ACTIVE) & (self.idu_expiry <= self.day)
        self.idu[expired] = IDU_FORMER

    def _demography_end_of_day(self):
        rng = self._streams["demography"]
        self.age += 1

        turning18 = np.flatnonzero(self.age == EDU_MIN_AGE)
        if turning18.size > 0:
            self.enrolled[turning18] = rng.random(turning18.size) < self.params.education_fraction
        self.enrolled[self.age >= EDU_MAX_AGE] = False

        # Replacement: agents past the maximum age restart as newborn
        # susceptibles in the same group, keeping the population constant.
        old = np.flatnonzero(self.age > self.max_age_days)
        if old.size == 0:
            return
        partners = self.spouse[old]
        widowed = partners[partners >= 0]
        self.spouse[widowed] = -1
        self.spouse[old] = -1
        self.age[old] = 0
        self.hcv[old] = HCV_SUSCEPTIBLE
        self.idu[old] = IDU_NON
        self.idu_expiry[old] = -1
        self.idu_init_age[old] = -1
        self.clearance_day[old] = -1
        self.enrolled[old] = False
        self.unemployed[old] = rng.random(old.size) < self.params.p_ue_gen
        self.clear_fate[old] = rng.random(old.size) < self.params.rna_clearance_prob
        self.clear_delay[old] = 1 + (rng.random(old.size)
                                     * self.params.clearance_window_days).astype(np.int64)

    # -------------------------------------------------------------------- run

    def step(self):
        """Advance one simulated day."""
        self._progress_start_of_day()
        self._medical_step()
        self._social_step()
        if self.day % 7 < 5:
            self._education_step()
        self._sexual_step()
        self._demography_end_of_day()
        self.day += 1

    def assert_invariants(self):
        """Verification hook: raise AssertionError if structural invariants
        are violated. Call between steps; costs a few array scans."""
        assert np.all((self.hcv >= HCV_SUSCEPTIBLE) & (self.hcv <= HCV_CLEARED))
        assert np.all((self.idu >= IDU_NON) & (self.idu <= IDU_FORMER))
        active = self.idu == IDU_ACTIVE
        # No agent stays active past its expiry day.
        assert not np.any(active & (self.idu_expiry < self.day))
        started = self.idu_init_age >= 0
        assert np.all(self.idu_init_age[started] >= IDU_MIN_AGE)
        assert np.all(self.idu_init_age[started] <= IDU_MAX_AGE)
        enrolled = np.flatnonzero(self.enrolled)
        assert np.all(self.age[enrolled] >= EDU_MIN_AGE)
        assert np.all(self.age[enrolled] < EDU_MAX_AGE)
        assert np.all((self.age >= 0) & (self.age <= self.max_age_days))
        paired = np.flatnonzero(self.spouse >= 0)
        assert np.array_equal(self.spouse[self.spouse[paired]], paired)
        assert self.hcv.size == self.n
        assert int(np.count_nonzero(self.hcv == HCV_RNA_POSITIVE)) <= \
            int(np.count_nonzero(self.hcv != HCV_SUSCEPTIBLE))

    def outcome(self) -> SimOutcome:
        if self.n == 0:
            raise SimulationError("population is extinct; prevalences undefined")
        rna = int(np.count_nonzero(self.hcv == HCV_RNA_POSITIVE))
        antibody = rna + int(np.count_nonzero(self.hcv == HCV_CLEARED))
        idus = int(np.count_nonzero(self.idu == IDU_ACTIVE))
        return SimOutcome(y1=100.0 * antibody / self.n,
                          y2=100.0 * rna / self.n,
                          y3=100.0 * idus / self.n)

    def run(self, horizon_days: int, collect_daily: bool = False):
        """Run for the given horizon and return the final outcome.

        With ``collect_daily`` the per-day outcome triples are kept in
        ``self.history`` (one entry per completed day).
        """
        if horizon_days < 0:
            raise ValueError("horizon_days must be >= 0")
        self.history: list[SimOutcome] = []
        for _ in range(horizon_days):
            self.step()
            if collect_daily:
                self.history.append(self.outcome())
        return self.outcome()


def run_replication(params: ModelParams, seed: int,
                    horizon_days: int | None = None) -> SimOutcome:
    """One full replicate: initialize, run the burn-in horizon, report
    prevalences. Deterministic given (params, seed)."""
    sim = HcvSimulation(params, seed)
    horizon = params.horizon_days if horizon_days is None else horizon_days
    return sim.run(horizon)


def make_abm_run_fn(params: ModelParams, horizon_days: int | None = None):
    """Adapter for the oracle layer: maps a calibration point x = (x1, x2, x3)
    and a replicate seed to the outcome array."""

    def run_fn(x, seed):
        return run_replication(params.with_x(x), seed, horizon_days).as_array()

    return run_fn
