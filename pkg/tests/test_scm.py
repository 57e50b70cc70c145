"""Cohort generation: latent structure, censoring, serialization."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from aftsim.distributions import (
    BHN,
    Degenerate,
    GammaEffect,
    GammaFrailty,
    InverseGaussianFrailty,
)
from aftsim.scm import (
    CensoringSpec,
    ConfoundedTreatment,
    Dataset,
    RandomizedTreatment,
    ScmConfig,
    WeibullBaseline,
    WeibullMixtureBaseline,
    apply_censoring,
    config_from_dict,
    config_to_dict,
    generate_cohort,
    generate_confounded_cohort,
    load_config,
    save_config,
)

THETA_B = 3.0 ** (1.0 / 3.0)


def homogeneous_config(frailty=None, effect_value=THETA_B, censoring=None):
    return ScmConfig(
        baseline=WeibullBaseline(),
        frailty=GammaFrailty(1.0) if frailty is None else frailty,
        effect=Degenerate(effect_value),
        treatment=RandomizedTreatment(0.5),
        censoring=censoring,
    )


def kendall_tau_a(l, a):
    """Untied Kendall correlation of a continuous score with a binary flag."""
    n = len(l)
    ranks = np.argsort(np.argsort(l)) + 1
    concordant_minus_discordant = np.sum(a * (2.0 * ranks - n - 1.0))
    return concordant_minus_discordant / (n * (n - 1) / 2.0)


# ---------------------------------------------------------------------------
# structural relations of a generated cohort
# ---------------------------------------------------------------------------

def test_cohort_columns_and_dtypes():
    data = generate_cohort(homogeneous_config(), 500, 0)
    assert len(data) == 500
    for col in ("u0", "u1", "l", "a", "t0", "ta", "t_obs", "d"):
        values = getattr(data, col)
        assert values.shape == (500,)
        assert values.dtype == np.float64
    assert set(np.unique(data.a)) == {0.0, 1.0}
    assert np.all(data.d == 1.0)  # no censoring requested
    assert np.all(np.isnan(data.l))  # no confounder under randomization


def test_potential_times_satisfy_the_time_scale_relation():
    config = ScmConfig(
        baseline=WeibullBaseline(),
        frailty=GammaFrailty(1.0),
        effect=BHN(p1=0.05, mu1=0.5, p2=0.18, mu2=3.53),
        treatment=RandomizedTreatment(0.5),
    )
    data = generate_cohort(config, 10_000, 1)
    assert data.ta == pytest.approx(data.t0 / data.u1, rel=1e-12)
    observed = np.where(data.a == 1.0, data.ta, data.t0)
    assert np.array_equal(data.factual_time(), observed)
    assert np.array_equal(data.t_obs, observed)


def test_control_survival_matches_closed_form():
    # Gamma frailty with unit variance gives P(T0 > t) = 1/(1 + t^3/60)
    data = generate_cohort(homogeneous_config(), 1_000_000, 2)
    for t in (2.0, 3.9149, 8.0):
        expected = 1.0 / (1.0 + t**3 / 60.0)
        assert (data.t0 > t).mean() == pytest.approx(expected, abs=0.003)
    assert np.median(data.t0) == pytest.approx(60.0 ** (1.0 / 3.0), abs=0.02)


def test_control_log_time_mean():
    data = generate_cohort(homogeneous_config(), 1_000_000, 3)
    assert np.log(data.t0).mean() == pytest.approx(np.log(60.0) / 3.0, abs=0.01)


def test_homogeneous_effect_scales_times_exactly():
    data = generate_cohort(homogeneous_config(), 50_000, 4)
    assert np.all(data.u1 == THETA_B)
    assert data.t0.mean() / data.ta.mean() == pytest.approx(THETA_B, rel=1e-12)


def test_mixture_baseline_component_means():
    config = ScmConfig(
        baseline=WeibullMixtureBaseline(),
        frailty=Degenerate(1.0),
        effect=Degenerate(1.0),
        treatment=RandomizedTreatment(0.5),
    )
    data = generate_cohort(config, 1_000_000, 5)
    assert set(np.unique(data.u0)) == {1.0, 10.0}
    for value in (1.0, 10.0):
        subset = data.t0[data.u0 == value]
        assert subset.mean() == pytest.approx(value, rel=0.01)
    assert data.t0.mean() == pytest.approx(5.5, rel=0.01)


def test_randomized_assignment_fraction():
    n = 200_000
    data = generate_cohort(homogeneous_config(), n, 6)
    assert data.a.mean() == pytest.approx(0.5, abs=3.0 * np.sqrt(0.25 / n))


# ---------------------------------------------------------------------------
# confounded designs
# ---------------------------------------------------------------------------

def test_propensity_values_by_hand():
    treatment = ConfoundedTreatment(beta_la=0.25, tau0=0.5, tau1=0.0)
    assert treatment.propensity(0.0) == pytest.approx(0.25)
    assert treatment.propensity(0.5) == pytest.approx(0.5)
    assert treatment.propensity(1.0) == pytest.approx(0.75)


def test_confounded_treatment_validation():
    with pytest.raises(ValueError):
        ConfoundedTreatment(beta_la=0.6)
    with pytest.raises(ValueError):
        ConfoundedTreatment(beta_la=0.25, tau0=1.5)


def test_confounder_treatment_rank_correlation():
    # for L ~ Uniform(0,1) and P(A=1|L) = 0.5 + beta(2L-1), the untied
    # Kendall correlation is 2*beta*E|L-L'| = (2/3)*beta
    config = ScmConfig(
        baseline=WeibullBaseline(),
        frailty=GammaFrailty(1.0),
        effect=Degenerate(THETA_B),
        treatment=ConfoundedTreatment(beta_la=0.25, tau0=0.0, tau1=0.0),
    )
    data = generate_confounded_cohort(config, 100_000, 7)
    assert kendall_tau_a(data.l, data.a) == pytest.approx(2.0 * 0.25 / 3.0, abs=0.02)


def test_confounder_latent_rank_correlations():
    from scipy.stats import kendalltau

    config = ScmConfig(
        baseline=WeibullBaseline(),
        frailty=GammaFrailty(1.0),
        effect=BHN(p1=0.05, mu1=0.5, p2=0.18, mu2=3.53),
        treatment=ConfoundedTreatment(beta_la=0.25, tau0=0.5, tau1=0.0),
    )
    data = generate_confounded_cohort(config, 100_000, 8)
    assert kendalltau(data.l, data.u0).statistic == pytest.approx(0.5, abs=0.02)
    # u1 has atoms, so compare through the treated time instead of ranks of u1
    assert data.u0.mean() == pytest.approx(1.0, abs=0.02)
    assert data.u0.var() == pytest.approx(1.0, abs=0.05)
    assert np.all((data.l > 0.0) & (data.l < 1.0))


def test_confounded_generator_requires_confounded_treatment():
    with pytest.raises(ValueError, match="ConfoundedTreatment"):
        generate_confounded_cohort(homogeneous_config(), 100, 9)


# ---------------------------------------------------------------------------
# censoring
# ---------------------------------------------------------------------------

def test_administrative_cutoff_is_exact():
    config = homogeneous_config(censoring=CensoringSpec(t_max=3.0))
    data = generate_cohort(config, 20_000, 10)
    factual = data.factual_time()
    assert np.array_equal(data.d == 1.0, factual <= 3.0)
    assert np.array_equal(data.t_obs, np.minimum(factual, 3.0))


def test_exponential_censoring_event_fraction():
    mean = 100.0

    def s_obs(t):
        # equal-weight mix of the control and treated survival curves
        s0 = 1.0 / (1.0 + t**3 / 60.0)
        s1 = 1.0 / (1.0 + (THETA_B * t) ** 3 / 60.0)
        return 0.5 * (s0 + s1)

    censored_frac = quad(lambda t: np.exp(-t / mean) * s_obs(t) / mean, 0.0, np.inf)[0]
    config = homogeneous_config(censoring=CensoringSpec(exponential_mean=mean))
    data = generate_cohort(config, 200_000, 11)
    assert 1.0 - data.d.mean() == pytest.approx(censored_frac, abs=0.005)


def test_apply_censoring_keeps_latents_and_recomputes_observables():
    base = generate_cohort(homogeneous_config(), 5_000, 12)
    censored = apply_censoring(base, CensoringSpec(exponential_mean=5.0), 13)
    assert np.array_equal(censored.t0, base.t0)
    assert np.array_equal(censored.ta, base.ta)
    assert np.array_equal(censored.a, base.a)
    assert censored.d.mean() < 1.0
    assert np.all(censored.t_obs <= base.t_obs + 1e-15)
    again = apply_censoring(base, CensoringSpec(exponential_mean=5.0), 13)
    assert np.array_equal(censored.t_obs, again.t_obs)


def test_zero_cutoff_warns():
    with pytest.warns(UserWarning, match="censors every record"):
        generate_cohort(homogeneous_config(censoring=CensoringSpec(t_max=0.0)), 100, 14)


def test_censoring_spec_validation():
    with pytest.raises(ValueError):
        CensoringSpec(exponential_mean=-1.0)
    with pytest.raises(ValueError):
        CensoringSpec(t_max=-0.5)
    assert CensoringSpec().is_none


# ---------------------------------------------------------------------------
# reproducibility
# ---------------------------------------------------------------------------

def test_same_seed_reproduces_bitwise():
    a = generate_cohort(homogeneous_config(), 1_000, 42)
    b = generate_cohort(homogeneous_config(), 1_000, 42)
    c = generate_cohort(homogeneous_config(), 1_000, 43)
    assert np.array_equal(
        a.to_frame().to_numpy(), b.to_frame().to_numpy(), equal_nan=True
    )
    assert not np.array_equal(a.t0, c.t0)


def test_seed_kinds_are_equivalent():
    by_int = generate_cohort(homogeneous_config(), 200, 5)
    by_seq = generate_cohort(homogeneous_config(), 200, np.random.SeedSequence(5))
    by_gen = generate_cohort(
        homogeneous_config(), 200, np.random.default_rng(np.random.SeedSequence(5))
    )
    assert np.array_equal(by_int.t_obs, by_seq.t_obs)
    assert np.array_equal(by_int.t_obs, by_gen.t_obs)


def test_cohort_size_must_be_positive():
    with pytest.raises(ValueError):
        generate_cohort(homogeneous_config(), 0, 1)


# ---------------------------------------------------------------------------
# dataset containers
# ---------------------------------------------------------------------------

def test_take_and_arm_views():
    data = generate_cohort(homogeneous_config(), 1_000, 15)
    sub = data.take(np.arange(10))
    assert len(sub) == 10
    treated = data.arm(1)
    assert np.all(treated.a == 1.0)
    assert len(treated) + len(data.arm(0)) == len(data)


def test_dataset_shape_validation():
    with pytest.raises(ValueError, match="shape"):
        Dataset(
            u0=np.ones(3),
            u1=np.ones(3),
            l=np.ones(3),
            a=np.ones(3),
            t0=np.ones(3),
            ta=np.ones(3),
            t_obs=np.ones(4),
            d=np.ones(3),
        )


def test_csv_round_trip_is_exact(tmp_path):
    data = generate_cohort(homogeneous_config(), 500, 16)
    path = tmp_path / "cohort.csv"
    data.to_csv(path)
    back = Dataset.from_csv(path)
    for col in ("u0", "u1", "l", "a", "t0", "ta", "t_obs", "d"):
        got, want = getattr(back, col), getattr(data, col)
        assert np.array_equal(got, want, equal_nan=True), col


def test_csv_missing_column_raises(tmp_path):
    data = generate_cohort(homogeneous_config(), 50, 17)
    frame = data.to_frame().drop(columns=["d"])
    path = tmp_path / "broken.csv"
    frame.to_csv(path, index=False)
    with pytest.raises(ValueError, match="missing columns"):
        Dataset.from_csv(path)


def test_npz_round_trip_is_exact(tmp_path):
    data = generate_cohort(homogeneous_config(), 500, 18)
    path = tmp_path / "cohort.npz"
    data.to_npz(path)
    back = Dataset.from_npz(path)
    for col in ("u0", "u1", "l", "a", "t0", "ta", "t_obs", "d"):
        assert np.array_equal(getattr(back, col), getattr(data, col), equal_nan=True)


# ---------------------------------------------------------------------------
# configuration objects and files
# ---------------------------------------------------------------------------

def test_config_validation():
    with pytest.raises(TypeError, match="frailty"):
        ScmConfig(
            baseline=WeibullBaseline(),
            frailty=GammaEffect(1.0, 1.0),
            effect=Degenerate(1.0),
            treatment=RandomizedTreatment(0.5),
        )
    with pytest.raises(ValueError, match="point mass"):
        ScmConfig(
            baseline=WeibullBaseline(),
            frailty=Degenerate(2.0),
            effect=Degenerate(1.0),
            treatment=RandomizedTreatment(0.5),
        )
    with pytest.raises(ValueError, match="mixture"):
        ScmConfig(
            baseline=WeibullMixtureBaseline(),
            frailty=GammaFrailty(1.0),
            effect=Degenerate(1.0),
            treatment=RandomizedTreatment(0.5),
        )


def test_confounded_flag():
    assert not homogeneous_config().confounded
    confounded = ScmConfig(
        baseline=WeibullBaseline(),
        frailty=GammaFrailty(1.0),
        effect=Degenerate(THETA_B),
        treatment=ConfoundedTreatment(beta_la=0.25),
    )
    assert confounded.confounded


EXAMPLE_CONFIGS = [
    homogeneous_config(),
    homogeneous_config(frailty=InverseGaussianFrailty(2.0)),
    homogeneous_config(censoring=CensoringSpec(exponential_mean=100.0, t_max=8.0)),
    ScmConfig(
        baseline=WeibullMixtureBaseline(),
        frailty=Degenerate(1.0),
        effect=BHN(p1=0.7, mu1=0.3, p2=0.05, mu2=5.10),
        treatment=RandomizedTreatment(0.4),
    ),
    ScmConfig(
        baseline=WeibullBaseline(sigma=0.5, kappa=0.1),
        frailty=GammaFrailty(0.5),
        effect=GammaEffect(1.4, 2.0),
        treatment=ConfoundedTreatment(beta_la=0.25, tau0=0.5, tau1=0.25),
    ),
]


@pytest.mark.parametrize("config", EXAMPLE_CONFIGS)
def test_config_dict_round_trip(config):
    assert config_from_dict(config_to_dict(config)) == config


def test_config_file_round_trip(tmp_path):
    config = EXAMPLE_CONFIGS[-1]
    path = tmp_path / "config.json"
    save_config(config, path)
    assert load_config(path) == config


def test_config_from_dict_rejects_unknown_kinds():
    spec = config_to_dict(homogeneous_config())
    spec["frailty"]["kind"] = "student_t"
    with pytest.raises(ValueError, match="unknown frailty"):
        config_from_dict(spec)


# ---------------------------------------------------------------------------
# property-based invariants
# ---------------------------------------------------------------------------

@settings(max_examples=25, deadline=None)
@given(value=st.floats(0.2, 5.0), seed=st.integers(0, 2**31))
def test_homogeneous_effects_preserve_ranks(value, seed):
    config = homogeneous_config(effect_value=value)
    data = generate_cohort(config, 200, seed)
    assert np.array_equal(np.argsort(data.t0), np.argsort(data.ta))
    assert np.all(data.t0 > 0) and np.all(data.ta > 0)


@settings(max_examples=25, deadline=None)
@given(
    beta=st.floats(0.0, 0.5),
    l=st.floats(0.0, 1.0),
)
def test_propensity_stays_in_unit_interval(beta, l):
    treatment = ConfoundedTreatment(beta_la=beta)
    assert 0.0 <= treatment.propensity(l) <= 1.0
