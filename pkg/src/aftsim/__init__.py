"""Causal accelerated-failure-time simulation and estimation toolkit.

Simulates survival cohorts with shared frailty, heterogeneous treatment
effects, censoring and copula-driven confounding; computes the causal
acceleration curve analytically for those generating mechanisms; estimates
observed and adjusted acceleration curves and Cox hazard ratios from
cohorts; and reproduces a fixed set of tables and figures as deterministic
CSV artifacts through a small CLI.
"""

__version__ = "0.1.0"

from .distributions import (
    BHN,
    Degenerate,
    GammaEffect,
    GammaFrailty,
    InverseGaussianFrailty,
    WeibullMixtureScale,
    gaussian_copula_sample,
    laplace_transform,
    sample,
    sample_standard_extreme_value,
)
from .scm import (
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
from .oracle import (
    AccelCurve,
    Lemma1Contrasts,
    SmoothSurvival,
    causal_eta,
    causal_theta,
    conditional_theta,
    lemma1_contrasts,
    mixture_survival,
    mixture_theta,
    quantile,
    reverse_theta,
    survival_control,
    survival_treated,
)
from .estimators import (
    CoxFit,
    StepSurvival,
    adjusted_survival,
    adjusted_theta,
    bootstrap_band,
    cox_fit,
    kaplan_meier,
    logT_regression,
    median_level_theta,
    observed_theta,
)
from .scenarios import (
    REGISTRY,
    CheckResult,
    Scenario,
    run_config_file,
    run_scenario,
    verify_scenario,
)

__all__ = [
    "__version__",
    # distributions
    "BHN",
    "Degenerate",
    "GammaEffect",
    "GammaFrailty",
    "InverseGaussianFrailty",
    "WeibullMixtureScale",
    "gaussian_copula_sample",
    "laplace_transform",
    "sample",
    "sample_standard_extreme_value",
    # generating mechanisms
    "CensoringSpec",
    "ConfoundedTreatment",
    "Dataset",
    "RandomizedTreatment",
    "ScmConfig",
    "WeibullBaseline",
    "WeibullMixtureBaseline",
    "apply_censoring",
    "config_from_dict",
    "config_to_dict",
    "generate_cohort",
    "generate_confounded_cohort",
    "load_config",
    "save_config",
    # analytic ground truth
    "AccelCurve",
    "Lemma1Contrasts",
    "SmoothSurvival",
    "causal_eta",
    "causal_theta",
    "conditional_theta",
    "lemma1_contrasts",
    "mixture_survival",
    "mixture_theta",
    "quantile",
    "reverse_theta",
    "survival_control",
    "survival_treated",
    # estimators
    "CoxFit",
    "StepSurvival",
    "adjusted_survival",
    "adjusted_theta",
    "bootstrap_band",
    "cox_fit",
    "kaplan_meier",
    "logT_regression",
    "median_level_theta",
    "observed_theta",
    # scenarios
    "REGISTRY",
    "CheckResult",
    "Scenario",
    "run_config_file",
    "run_scenario",
    "verify_scenario",
]
