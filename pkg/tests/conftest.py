import pytest

from rulercal.abm.params import ModelParams

# Lattice extremes used throughout: the preliminary-experiment bounds.
X_LOW = (0.035, 0.2, 1.9e-5)
X_HIGH = (0.037, 0.4, 2.3e-5)


def verification_params(population: int, years: int) -> ModelParams:
    """Desk-scale configuration used to verify ordering properties.

    Initial prevalences are seeded well above the full-scale targets so the
    transmission channels carry measurable signal at a few thousand agents;
    only orderings are asserted against this configuration, never absolute
    prevalence levels.
    """
    return ModelParams(
        population_size=population,
        horizon_days=years * 360,
        init_rna_prevalence=0.02,
        init_idu_prevalence=0.01,
        init_idu_rna_frac=0.3,
        non_idu_visit_prob=0.5,
    )


@pytest.fixture
def desk_params() -> ModelParams:
    return verification_params(5000, 10)


@pytest.fixture
def small_params() -> ModelParams:
    return verification_params(600, 1)
