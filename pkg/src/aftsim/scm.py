"""Structural cohort generator for causal accelerated-failure-time studies.

The generating mechanism draws, per subject, a baseline frailty ``U0``, a
multiplicative time-scale effect ``U1``, optionally a confounder ``L`` tied to
``(U0, U1)`` through a Gaussian copula, a treatment indicator ``A``, latent
event times under both arms, and an observed (possibly censored) follow-up.

Conventions
-----------
* The untreated event time solves ``U0 * kappa * t**(1/sigma) = E`` with
  ``E ~ Exp(1)``, i.e. ``T0 = (E / (U0*kappa))**sigma``; equivalently
  ``log T0 = -sigma*log(kappa*U0) + sigma*W`` with ``W`` minimum-type Gumbel.
* Treatment contracts or dilates time at a constant rate: ``Ta = T0 / U1``
  with ``U1 > 0`` the subject's time-scale multiplier (``U1 > 1`` means
  earlier events under treatment).
* Censoring composes an exponential censoring time and an administrative
  cutoff by taking minima; ``d = 1`` exactly when the factual event time is
  observed.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, replace
from math import gamma as gamma_function

import numpy as np
import pandas as pd

from .distributions import (
    BHN,
    Degenerate,
    GammaEffect,
    GammaFrailty,
    InverseGaussianFrailty,
    WeibullMixtureScale,
    gaussian_copula_sample,
)

__all__ = [
    "WeibullBaseline",
    "WeibullMixtureBaseline",
    "RandomizedTreatment",
    "ConfoundedTreatment",
    "CensoringSpec",
    "ScmConfig",
    "Dataset",
    "generate_cohort",
    "generate_confounded_cohort",
    "apply_censoring",
    "config_to_dict",
    "config_from_dict",
    "load_config",
    "save_config",
]

_FRAILTY_LAWS = (Degenerate, GammaFrailty, InverseGaussianFrailty)
_EFFECT_LAWS = (Degenerate, BHN, GammaEffect)


@dataclass(frozen=True)
class WeibullBaseline:
    """Baseline clock with cumulative hazard ``kappa * t**(1/sigma)`` at unit frailty."""

    sigma: float = 1.0 / 3.0
    kappa: float = 1.0 / 60.0

    def __post_init__(self):
        if not self.sigma > 0 or not self.kappa > 0:
            raise ValueError(f"sigma and kappa must be positive, got {self.sigma}, {self.kappa}")

    @property
    def time_scale(self):
        """Time at which the unit-frailty cumulative hazard reaches 1."""
        return (1.0 / self.kappa) ** self.sigma

    def sample_t0(self, rng, u0):
        """Draw untreated event times given frailty draws ``u0``."""
        e = rng.exponential(1.0, np.shape(u0))
        return (e / (u0 * self.kappa)) ** self.sigma


@dataclass(frozen=True)
class WeibullMixtureBaseline:
    """Two-point mixture of Weibull(scale, shape) clocks with unit component means.

    Each subject draws a scale atom ``X`` and an event time
    ``T0 = Lambda * E**(1/shape)`` with ``Lambda = X / Gamma(1 + 1/shape)``,
    so the component means are exactly the atoms of ``scale_law``.  The drawn
    atom is stored in the ``u0`` column of the dataset.
    """

    shape: float = 2.0
    scale_law: WeibullMixtureScale = field(default_factory=WeibullMixtureScale)

    def __post_init__(self):
        if not self.shape > 0:
            raise ValueError(f"shape must be positive, got {self.shape}")

    @property
    def mean_factor(self):
        return gamma_function(1.0 + 1.0 / self.shape)

    @property
    def time_scale(self):
        return max(self.scale_law.values) / self.mean_factor

    def sample_t0(self, rng, x):
        e = rng.exponential(1.0, np.shape(x))
        return (x / self.mean_factor) * e ** (1.0 / self.shape)


@dataclass(frozen=True)
class RandomizedTreatment:
    """Bernoulli treatment assignment independent of everything else."""

    p_treat: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.p_treat <= 1.0:
            raise ValueError(f"p_treat must lie in [0, 1], got {self.p_treat}")


@dataclass(frozen=True)
class ConfoundedTreatment:
    """Treatment depending on a Uniform(0,1) confounder ``L``.

    ``P(A=1 | L=l) = 0.5 + beta_la*(2l - 1)``; the propensity swings by
    ``2*beta_la`` across the range of ``L``, and Kendall's tau (a-variant)
    between ``L`` and ``A`` is ``2*beta_la*E|L - L'| = (2/3)*beta_la``.
    ``tau0``/``tau1`` are the copula Kendall taus linking ``L`` to the
    frailty and to the effect multiplier.
    """

    beta_la: float = 0.25
    tau0: float = 0.0
    tau1: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.beta_la <= 0.5:
            raise ValueError(f"beta_la must lie in [0, 0.5], got {self.beta_la}")
        if not (abs(self.tau0) < 1 and abs(self.tau1) < 1):
            raise ValueError(f"|tau| must be < 1, got {(self.tau0, self.tau1)}")

    def propensity(self, l):
        """P(A=1 | L=l) under the design."""
        return 0.5 + self.beta_la * (2.0 * np.asarray(l, dtype=float) - 1.0)


@dataclass(frozen=True)
class CensoringSpec:
    """Independent censoring: exponential, administrative, both, or none."""

    exponential_mean: float | None = None
    t_max: float | None = None

    def __post_init__(self):
        if self.exponential_mean is not None and not self.exponential_mean > 0:
            raise ValueError(f"exponential_mean must be positive, got {self.exponential_mean}")
        if self.t_max is not None and self.t_max < 0:
            raise ValueError(f"t_max must be nonnegative, got {self.t_max}")

    @property
    def is_none(self):
        return self.exponential_mean is None and self.t_max is None


@dataclass(frozen=True)
class ScmConfig:
    """Full description of one generating mechanism."""

    baseline: WeibullBaseline | WeibullMixtureBaseline = field(default_factory=WeibullBaseline)
    frailty: object = field(default_factory=lambda: Degenerate(1.0))
    effect: object = field(default_factory=lambda: Degenerate(1.0))
    treatment: RandomizedTreatment | ConfoundedTreatment = field(
        default_factory=RandomizedTreatment
    )
    censoring: CensoringSpec = field(default_factory=CensoringSpec)

    def __post_init__(self):
        if self.censoring is None:
            object.__setattr__(self, "censoring", CensoringSpec())
        if not isinstance(self.frailty, _FRAILTY_LAWS):
            raise TypeError(f"unsupported frailty law {self.frailty!r}")
        if not isinstance(self.effect, _EFFECT_LAWS):
            raise TypeError(f"unsupported effect law {self.effect!r}")
        if isinstance(self.frailty, Degenerate) and self.frailty.value != 1.0:
            raise ValueError("frailty point mass must sit at 1")
        if isinstance(self.baseline, WeibullMixtureBaseline) and not isinstance(
            self.frailty, Degenerate
        ):
            raise ValueError(
                "the Weibull-mixture baseline already carries its scale mixture; "
                "combine it only with Degenerate frailty"
            )

    @property
    def confounded(self):
        return isinstance(self.treatment, ConfoundedTreatment)


_COLUMNS = ("u0", "u1", "l", "a", "t0", "ta", "t_obs", "d")


@dataclass
class Dataset:
    """Column store for one generated cohort.

    ``u0``/``u1`` are the latent frailty and effect multipliers, ``l`` the
    confounder (NaN when the design is unconfounded), ``a`` the treatment arm,
    ``t0``/``ta`` the latent event times under control and treatment, and
    ``t_obs``/``d`` the observed follow-up and event indicator.
    """

    u0: np.ndarray
    u1: np.ndarray
    l: np.ndarray
    a: np.ndarray
    t0: np.ndarray
    ta: np.ndarray
    t_obs: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        n = len(self.u0)
        for name in _COLUMNS:
            col = np.asarray(getattr(self, name), dtype=float)
            if col.shape != (n,):
                raise ValueError(f"column {name} has shape {col.shape}, expected ({n},)")
            setattr(self, name, col)

    def __len__(self):
        return len(self.u0)

    def take(self, idx):
        """Row subset (used by arm splits and bootstrap resampling)."""
        return Dataset(*(getattr(self, name)[idx] for name in _COLUMNS))

    def arm(self, value):
        return self.take(self.a == value)

    def factual_time(self):
        """Event time actually realized under the assigned arm."""
        return np.where(self.a == 1, self.ta, self.t0)

    def to_frame(self):
        return pd.DataFrame({name: getattr(self, name) for name in _COLUMNS})

    def to_csv(self, path):
        """Write the cohort with a fixed header; floats survive a round trip exactly."""
        self.to_frame().to_csv(path, index=False, float_format="%.17g")

    @classmethod
    def from_csv(cls, path):
        # the default fast parser can drop the last significant digit
        frame = pd.read_csv(path, float_precision="round_trip")
        missing = [name for name in _COLUMNS if name not in frame.columns]
        if missing:
            raise ValueError(f"cohort file {path} is missing columns {missing}")
        return cls(*(frame[name].to_numpy(dtype=float) for name in _COLUMNS))

    def to_npz(self, path):
        np.savez_compressed(path, **{name: getattr(self, name) for name in _COLUMNS})

    @classmethod
    def from_npz(cls, path):
        with np.load(path) as archive:
            return cls(*(archive[name] for name in _COLUMNS))


def _draw_latents(config, n, rng):
    """Draw (u0, u1, l, a) respecting the treatment design."""
    treatment = config.treatment
    if isinstance(treatment, ConfoundedTreatment):
        ul, uu0, uu1 = gaussian_copula_sample((treatment.tau0, treatment.tau1), rng, n)
        l = ul  # the confounder is Uniform(0,1) by construction
        if isinstance(config.baseline, WeibullMixtureBaseline):
            u0 = config.baseline.scale_law.ppf(uu0)
        else:
            u0 = config.frailty.ppf(uu0)
        u1 = config.effect.ppf(uu1)
        a = (rng.random(n) < treatment.propensity(l)).astype(float)
    else:
        if isinstance(config.baseline, WeibullMixtureBaseline):
            u0 = config.baseline.scale_law.sample(rng, n)
        else:
            u0 = config.frailty.sample(rng, n)
        u1 = config.effect.sample(rng, n)
        l = np.full(n, np.nan)
        a = (rng.random(n) < treatment.p_treat).astype(float)
    return np.asarray(u0, dtype=float), np.asarray(u1, dtype=float), l, a


def _censor(t, spec, rng):
    """Return (t_obs, d) from factual times and a censoring spec."""
    t_obs = np.array(t, dtype=float)
    cutoff = np.full_like(t_obs, np.inf)
    if spec.exponential_mean is not None:
        cutoff = np.minimum(cutoff, rng.exponential(spec.exponential_mean, t_obs.shape))
    if spec.t_max is not None:
        if spec.t_max == 0:
            warnings.warn("administrative cutoff at 0 censors every record", stacklevel=3)
        cutoff = np.minimum(cutoff, spec.t_max)
    d = (t_obs <= cutoff).astype(float)
    return np.minimum(t_obs, cutoff), d


def generate_cohort(config, n, seed):
    """Generate a cohort of ``n`` subjects under ``config``.

    Draw order is fixed (latents, baseline exponentials, censoring) so the
    same seed always yields the same cohort, and so two configs differing only
    in censoring share identical latent times under the same seed.

    Parameters
    ----------
    config : ScmConfig
    n : int
    seed : int or numpy.random.SeedSequence or numpy.random.Generator

    Returns
    -------
    Dataset
    """
    if n <= 0:
        raise ValueError(f"cohort size must be positive, got {n}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    u0, u1, l, a = _draw_latents(config, n, rng)
    t0 = config.baseline.sample_t0(rng, u0)
    ta = t0 / u1
    t_obs, d = _censor(np.where(a == 1, ta, t0), config.censoring, rng)
    return Dataset(u0, u1, l, a, t0, ta, t_obs, d)


def generate_confounded_cohort(config, n, seed):
    """Generate a cohort under a confounded design (validates the treatment kind)."""
    if not config.confounded:
        raise ValueError("config.treatment must be ConfoundedTreatment")
    return generate_cohort(config, n, seed)


def apply_censoring(dataset, spec, seed):
    """Re-censor a cohort's factual times under a new censoring spec.

    Latent columns are preserved; only ``t_obs`` and ``d`` change.  Fresh
    exponential censoring draws come from ``seed``.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    t_obs, d = _censor(dataset.factual_time(), spec, rng)
    return replace(dataset, t_obs=t_obs, d=d)


# ---------------------------------------------------------------------------
# Config (de)serialization: plain JSON with a documented schema.
# ---------------------------------------------------------------------------

def _law_to_dict(law):
    if isinstance(law, Degenerate):
        return {"kind": "degenerate", "value": law.value}
    if isinstance(law, GammaFrailty):
        return {"kind": "gamma", "variance": law.variance}
    if isinstance(law, InverseGaussianFrailty):
        return {"kind": "inverse_gaussian", "variance": law.variance}
    if isinstance(law, GammaEffect):
        return {"kind": "gamma", "mean": law.mean_value, "variance": law.variance}
    if isinstance(law, BHN):
        out = {"kind": "bhn", "p1": law.p1, "mu1": law.mu1, "p2": law.p2, "mu2": law.mu2}
        if law.target_mean is not None:
            out["target_mean"] = law.target_mean
        return out
    raise TypeError(f"cannot serialize law {law!r}")


def _frailty_from_dict(spec):
    kind = spec.get("kind")
    if kind == "degenerate":
        return Degenerate(spec.get("value", 1.0))
    if kind == "gamma":
        return GammaFrailty(spec["variance"])
    if kind == "inverse_gaussian":
        return InverseGaussianFrailty(spec["variance"])
    raise ValueError(f"unknown frailty kind {kind!r}")


def _effect_from_dict(spec):
    kind = spec.get("kind")
    if kind == "degenerate":
        return Degenerate(spec["value"])
    if kind == "gamma":
        return GammaEffect(spec["mean"], spec["variance"])
    if kind == "bhn":
        return BHN(
            spec["p1"], spec["mu1"], spec["p2"], spec["mu2"], spec.get("target_mean")
        )
    raise ValueError(f"unknown effect kind {kind!r}")


def config_to_dict(config):
    """Serialize an ``ScmConfig`` to the documented JSON-ready dictionary."""
    if isinstance(config.baseline, WeibullMixtureBaseline):
        baseline = {
            "kind": "weibull_mixture",
            "shape": config.baseline.shape,
            "scale_values": list(config.baseline.scale_law.values),
            "scale_probs": list(config.baseline.scale_law.probs),
        }
    else:
        baseline = {
            "kind": "weibull",
            "sigma": config.baseline.sigma,
            "kappa": config.baseline.kappa,
        }
    if isinstance(config.treatment, ConfoundedTreatment):
        treatment = {
            "kind": "confounded",
            "beta_la": config.treatment.beta_la,
            "tau0": config.treatment.tau0,
            "tau1": config.treatment.tau1,
        }
    else:
        treatment = {"kind": "randomized", "p_treat": config.treatment.p_treat}
    censoring = {}
    if config.censoring.exponential_mean is not None:
        censoring["exponential_mean"] = config.censoring.exponential_mean
    if config.censoring.t_max is not None:
        censoring["t_max"] = config.censoring.t_max
    return {
        "baseline": baseline,
        "frailty": _law_to_dict(config.frailty),
        "effect": _law_to_dict(config.effect),
        "treatment": treatment,
        "censoring": censoring,
    }


def config_from_dict(spec):
    """Inverse of :func:`config_to_dict`; validates through the dataclasses."""
    baseline_spec = spec.get("baseline", {"kind": "weibull"})
    kind = baseline_spec.get("kind", "weibull")
    if kind == "weibull":
        baseline = WeibullBaseline(
            baseline_spec.get("sigma", 1.0 / 3.0), baseline_spec.get("kappa", 1.0 / 60.0)
        )
    elif kind == "weibull_mixture":
        baseline = WeibullMixtureBaseline(
            baseline_spec.get("shape", 2.0),
            WeibullMixtureScale(
                tuple(baseline_spec.get("scale_values", (1.0, 10.0))),
                tuple(baseline_spec.get("scale_probs", (0.5, 0.5))),
            ),
        )
    else:
        raise ValueError(f"unknown baseline kind {kind!r}")
    treatment_spec = spec.get("treatment", {"kind": "randomized"})
    if treatment_spec.get("kind", "randomized") == "randomized":
        treatment = RandomizedTreatment(treatment_spec.get("p_treat", 0.5))
    elif treatment_spec["kind"] == "confounded":
        treatment = ConfoundedTreatment(
            treatment_spec.get("beta_la", 0.25),
            treatment_spec.get("tau0", 0.0),
            treatment_spec.get("tau1", 0.0),
        )
    else:
        raise ValueError(f"unknown treatment kind {treatment_spec['kind']!r}")
    censoring_spec = spec.get("censoring", {})
    censoring = CensoringSpec(
        censoring_spec.get("exponential_mean"), censoring_spec.get("t_max")
    )
    return ScmConfig(
        baseline=baseline,
        frailty=_frailty_from_dict(spec.get("frailty", {"kind": "degenerate", "value": 1.0})),
        effect=_effect_from_dict(spec.get("effect", {"kind": "degenerate", "value": 1.0})),
        treatment=treatment,
        censoring=censoring,
    )


def load_config(path):
    """Read an ``ScmConfig`` from a JSON file (schema in docs/scenarios.md)."""
    with open(path, encoding="utf-8") as handle:
        return config_from_dict(json.load(handle))


def save_config(config, path):
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(config_to_dict(config), handle, indent=2, sort_keys=True)
        handle.write("\n")
