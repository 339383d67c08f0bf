import numpy as np
import pytest

from rulercal.abm.params import (
    District,
    InfeasibleParamsError,
    ModelParams,
    idu_visit_prob,
    medical_infection_prob,
    medical_visit_prob,
    needle_share_reference,
    solve_influence_probs,
)


def test_medical_visit_prob():
    assert medical_visit_prob(ModelParams(n_inj=0, n_bt=0, n_sur=0, n_dp=0)) == 0.0
    assert medical_visit_prob(ModelParams(n_inj=3.0, n_bt=0.1, n_sur=0.2, n_dp=0.3)) \
        == pytest.approx(0.01)
    # the shipped defaults also sum to 3.6 events/year -> 0.01/day
    assert medical_visit_prob(ModelParams(n_inj=2.9, n_bt=0.05, n_sur=0.1, n_dp=0.55)) \
        == pytest.approx(0.01)
    with pytest.raises(ValueError):
        ModelParams(n_inj=-1.0)
    with pytest.raises(ValueError):
        medical_visit_prob(ModelParams(n_inj=400.0))


def test_medical_infection_prob():
    assert medical_infection_prob(1, 2, 3, 4, 0.3, 0.3, 0.3, 0.3) == pytest.approx(0.3)
    assert medical_infection_prob(1, 1, 1, 1, 0.1, 0.2, 0.3, 0.4) == pytest.approx(0.25)
    assert medical_infection_prob(2, 1, 0, 1, 0.03, 0.9, 0.05, 0.2) == pytest.approx(0.29)
    lo, hi = 0.03, 0.9
    assert lo <= medical_infection_prob(2, 1, 0, 1, 0.03, 0.9, 0.05, 0.2) <= hi
    with pytest.raises(ValueError):
        medical_infection_prob(0, 0, 0, 0, 0.1, 0.1, 0.1, 0.1)


def test_idu_visit_prob():
    assert idu_visit_prob([District(100, 7.0)]) == pytest.approx(1.0)
    assert idu_visit_prob([District(100, 7.0), District(100, 0.0)]) == pytest.approx(0.5)
    # population-weighted: (100*3.5 + 300*7)/400 = 6.125 per week -> 0.875 per day
    assert idu_visit_prob([District(100, 3.5), District(300, 7.0)]) == pytest.approx(0.875)
    with pytest.raises(ValueError):
        idu_visit_prob([])
    with pytest.raises(ValueError):
        idu_visit_prob([District(-5, 3.0)])
    # clamp: more than daily injecting still yields a probability
    assert idu_visit_prob([District(100, 21.0)]) == 1.0


def test_needle_share_reference():
    districts = [District(100, 3.0, 0.6), District(300, 3.0, 0.4)]
    assert needle_share_reference(districts) == pytest.approx(0.45)
    with pytest.raises(ValueError):
        needle_share_reference([])


def test_solve_influence_probs_examples():
    # ratio one: both sides equal the overall probability
    e, ue = solve_influence_probs(0.3, 0.2, 0.2)
    assert e == pytest.approx(0.3) and ue == pytest.approx(0.3)
    # hand-solved 2x2 system
    e, ue = solve_influence_probs(2e-5, 0.4, 0.1)
    assert e == pytest.approx(2e-5 / 1.3, rel=1e-12)
    assert ue == pytest.approx(4 * 2e-5 / 1.3, rel=1e-12)
    assert solve_influence_probs(0.0, 0.4, 0.1) == (0.0, 0.0)


def test_solve_influence_probs_errors():
    with pytest.raises(InfeasibleParamsError):
        solve_influence_probs(0.5, 0.4, 0.0)
    with pytest.raises(InfeasibleParamsError):
        solve_influence_probs(0.9, 0.9, 0.01)  # unemployed share would exceed 1


def test_influence_recombination_randomized():
    rng = np.random.default_rng(11)
    checked = 0
    while checked < 1000:
        p_ue_gen = rng.uniform(0.01, 0.9)
        p_ue_idu = rng.uniform(0.01, 1.0)
        r = p_ue_idu / p_ue_gen
        bound = min(1.0, (1.0 + p_ue_gen * (r - 1.0)) / r)
        p_inf = rng.uniform(0.0, bound * 0.999)
        e, ue = solve_influence_probs(p_inf, p_ue_idu, p_ue_gen)
        recombined = ue * p_ue_gen + e * (1.0 - p_ue_gen)
        assert recombined == pytest.approx(p_inf, rel=1e-12, abs=1e-300)
        assert ue <= 1.0
        checked += 1


def test_model_params_validation():
    with pytest.raises(ValueError):
        ModelParams(x1=1.5)
    with pytest.raises(ValueError):
        ModelParams(year_length_days=365)
    with pytest.raises(ValueError):
        ModelParams(district_data=())
    with pytest.raises(ValueError):
        ModelParams(idu_group_size=1)
    p = ModelParams()
    q = p.with_x((0.035, 0.2, 1.9e-5))
    assert (q.x1, q.x2, q.x3) == (0.035, 0.2, 1.9e-5)
    assert q.n_inj == p.n_inj
