"""Built-in experiment scenarios, their artifacts, and verification rules.

Each scenario reproduces one exhibit at desk scale from a fixed seed and
writes three CSV artifacts plus a manifest into ``<out>/<name>/``:

``estimates.csv``
    simulation-based estimates (per replication, per gridpoint, or per cell),
``oracle.csv``
    the analytic ground truth for the same cells or gridpoints,
``summary.csv``
    the aggregate quantities that the verify rules grade.

Re-running a scenario with the same inputs reproduces the artifacts byte for
byte, whether executed serially or across worker processes.
"""

from __future__ import annotations

import hashlib
import json
import subprocess
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .distributions import (
    BHN,
    Degenerate,
    GammaEffect,
    GammaFrailty,
    InverseGaussianFrailty,
)
from .estimators import (
    adjusted_survival,
    adjusted_theta,
    bootstrap_band,
    cox_fit,
    kaplan_meier,
    median_level_theta,
    observed_theta,
)
from .oracle import (
    SmoothSurvival,
    causal_theta,
    lemma1_contrasts,
    mixture_survival,
    mixture_theta,
    survival_control,
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
    config_to_dict,
    generate_cohort,
    generate_confounded_cohort,
)

__all__ = [
    "Scenario",
    "CheckResult",
    "ArtifactsMissing",
    "REGISTRY",
    "run_scenario",
    "verify_scenario",
    "run_config_file",
]

# the two homogeneous time-scale factors used throughout: hazard ratios 1/3
# and 3 on a sigma = 1/3 baseline give theta = (1/3)^(1/3) and 3^(1/3)
THETA_A = (1.0 / 3.0) ** (1.0 / 3.0)
THETA_B = 3.0 ** (1.0 / 3.0)

# three-atom effect laws: one with mean near THETA_B, one near THETA_A
BHN_B = BHN(p1=0.05, mu1=0.5, p2=0.18, mu2=3.53, target_mean=THETA_B)
BHN_A = BHN(p1=0.7, mu1=0.3, p2=0.05, mu2=5.10, target_mean=THETA_A)

_FRAILTY_KINDS = ("gamma", "inverse_gaussian")
_FRAILTY_VARIANCES = (0.5, 1.0, 2.0)


def _frailty(kind, variance):
    if kind == "gamma":
        return GammaFrailty(variance)
    if kind == "inverse_gaussian":
        return InverseGaussianFrailty(variance)
    raise ValueError(f"unknown frailty kind {kind!r}")


def _cdf_grid(lo, hi, step):
    return np.round(np.arange(lo, hi + 1e-9, step), 10)


FIG2_CDF = _cdf_grid(0.05, 0.95, 0.05)
FIG5_CDF = _cdf_grid(0.10, 0.90, 0.05)


# ---------------------------------------------------------------------------
# printed reference values the verify rules grade against
# ---------------------------------------------------------------------------

# per cell: (theta_hat_mean, theta interval, cox_mean, cox interval)
TABLE1A_REFERENCE = {
    ("gamma", 0.5): (0.692, (0.690, 0.694), 0.471, (0.461, 0.482)),
    ("gamma", 1.0): (0.694, (0.692, 0.696), 0.574, (0.554, 0.594)),
    ("gamma", 2.0): (0.692, (0.689, 0.696), 0.689, (0.658, 0.722)),
    ("inverse_gaussian", 0.5): (0.693, (0.691, 0.695), 0.419, (0.413, 0.426)),
    ("inverse_gaussian", 1.0): (0.693, (0.691, 0.695), 0.458, (0.448, 0.468)),
    ("inverse_gaussian", 2.0): (0.694, (0.691, 0.696), 0.494, (0.482, 0.507)),
}
TABLE1B_REFERENCE = {
    ("gamma", 0.5): (1.437, (1.433, 1.441), 2.102, (2.053, 2.151)),
    ("gamma", 1.0): (1.444, (1.439, 1.449), 1.746, (1.687, 1.808)),
    ("gamma", 2.0): (1.445, (1.438, 1.452), 1.451, (1.386, 1.520)),
    ("inverse_gaussian", 0.5): (1.440, (1.436, 1.444), 2.372, (2.335, 2.411)),
    ("inverse_gaussian", 1.0): (1.443, (1.439, 1.447), 2.189, (2.144, 2.236)),
    ("inverse_gaussian", 2.0): (1.440, (1.436, 1.444), 2.022, (1.971, 2.075)),
}

# reference values for the large-cohort contrast table; the log-contrast
# cells for the three-atom law are reproduced as printed even though the
# estimand exp(E[log T0] - E[log T1]) cannot depend on the baseline and both
# rows evaluate to about 1.212 -- see the repository notes for the analysis
SUPP_RATIO_REFERENCE = {"fig2L_b": 1.090, "fig2R_b": 1.090, "fig2L_a": 0.385, "fig2R_a": 0.385}
SUPP_LOG_REFERENCE = {"fig2L_b": 1.477, "fig2R_b": 1.572}


class ArtifactsMissing(FileNotFoundError):
    """Raised when verify cannot find a scenario's artifact files."""


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    n_obs: int
    n_sim: int
    seed: int
    runner: callable
    verifier: callable


@dataclass(frozen=True)
class CheckResult:
    label: str
    passed: bool
    detail: str

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'}  {self.label}: {self.detail}"


# ---------------------------------------------------------------------------
# artifact plumbing
# ---------------------------------------------------------------------------

def _write_csv(frame, path):
    frame.to_csv(path, index=False, float_format="%.12g", lineterminator="\n")


def _read_artifact(directory, name):
    path = Path(directory) / name
    if not path.exists():
        raise ArtifactsMissing(f"missing artifact {path}")
    return pd.read_csv(path)


def _git_describe():
    try:
        proc = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True,
            text=True,
            cwd=Path(__file__).resolve().parent,
            timeout=10,
        )
        if proc.returncode == 0:
            return proc.stdout.strip()
    except OSError:
        pass
    return "unknown"


def _write_manifest(out_dir, scenario, n_obs, n_sim, seed, params):
    payload = {
        "scenario": scenario,
        "n_obs": n_obs,
        "n_sim": n_sim,
        "seed": seed,
        "params": params,
    }
    digest = hashlib.sha256(
        json.dumps(payload, sort_keys=True).encode("utf-8")
    ).hexdigest()
    manifest = dict(payload)
    manifest["config_hash"] = digest
    manifest["package_version"] = __version__
    manifest["git_describe"] = _git_describe()
    with open(Path(out_dir) / "manifest.json", "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _map_tasks(fn, tasks, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, tasks))
    return [fn(task) for task in tasks]


def _arm_curves(data):
    c0, c1 = data.arm(0), data.arm(1)
    return (
        kaplan_meier(c0.t_obs, c0.d, arm=0),
        kaplan_meier(c1.t_obs, c1.d, arm=1),
    )


def _mean_interval(values):
    values = np.asarray(values, dtype=float)
    mean = float(values.mean())
    if len(values) < 2:
        return mean, mean, mean
    half = 1.96 * float(values.std(ddof=1)) / np.sqrt(len(values))
    return mean, mean - half, mean + half


# ---------------------------------------------------------------------------
# replication tables (two homogeneous-effect subtables)
# ---------------------------------------------------------------------------

def _table1_config(kind, variance, theta):
    return ScmConfig(
        baseline=WeibullBaseline(),
        frailty=_frailty(kind, variance),
        effect=Degenerate(theta),
        treatment=RandomizedTreatment(0.5),
    )


def _table1_cell_task(task):
    config, n_obs, n_sim, cell_seed = task
    thetas = np.empty(n_sim)
    hazards = np.empty(n_sim)
    converged = np.empty(n_sim, dtype=bool)
    for rep, child in enumerate(cell_seed.spawn(n_sim)):
        data = generate_cohort(config, n_obs, np.random.default_rng(child))
        km0, km1 = _arm_curves(data)
        thetas[rep] = median_level_theta(km0, km1)
        fit = cox_fit(data.t_obs, data.d, data.a)
        hazards[rep] = fit.hazard_ratio
        converged[rep] = fit.converged
    return thetas, hazards, converged


def _make_table1_runner(theta):
    def runner(out_dir, n_obs, n_sim, seed, workers):
        cells = [(k, v) for k in _FRAILTY_KINDS for v in _FRAILTY_VARIANCES]
        seeds = np.random.SeedSequence(seed).spawn(len(cells))
        tasks = [
            (_table1_config(kind, var, theta), n_obs, n_sim, cell_seed)
            for (kind, var), cell_seed in zip(cells, seeds)
        ]
        results = _map_tasks(_table1_cell_task, tasks, workers)

        est_rows, summary_rows, oracle_rows = [], [], []
        for (kind, var), (thetas, hazards, conv) in zip(cells, results):
            for rep in range(n_sim):
                est_rows.append(
                    {
                        "frailty": kind,
                        "variance": var,
                        "rep": rep,
                        "theta_m": thetas[rep],
                        "cox_hr": hazards[rep],
                        "cox_converged": int(conv[rep]),
                    }
                )
            t_mean, t_lo, t_hi = _mean_interval(thetas)
            c_mean, c_lo, c_hi = _mean_interval(hazards)
            summary_rows.append(
                {
                    "frailty": kind,
                    "variance": var,
                    "theta_m_mean": t_mean,
                    "theta_m_lo": t_lo,
                    "theta_m_hi": t_hi,
                    "cox_mean": c_mean,
                    "cox_lo": c_lo,
                    "cox_hi": c_hi,
                    "n_rep": n_sim,
                }
            )
            oracle_rows.append(
                {
                    "frailty": kind,
                    "variance": var,
                    "theta_true": theta,
                    "conditional_hazard_ratio": theta ** 3,
                }
            )
        _write_csv(pd.DataFrame(est_rows), Path(out_dir) / "estimates.csv")
        _write_csv(pd.DataFrame(summary_rows), Path(out_dir) / "summary.csv")
        _write_csv(pd.DataFrame(oracle_rows), Path(out_dir) / "oracle.csv")
        return {"theta": theta, "cells": [list(c) for c in cells]}

    return runner


def _make_table1_verifier(theta, reference):
    def verifier(directory):
        summary = _read_artifact(directory, "summary.csv")
        checks = []
        for _, row in summary.iterrows():
            key = (row["frailty"], float(row["variance"]))
            _, _, _, cox_interval = reference[key]
            tag = f"{key[0]} var={key[1]:g}"
            gap = abs(row["theta_m_mean"] - theta)
            checks.append(
                CheckResult(
                    f"theta_m mean [{tag}]",
                    gap <= 0.01,
                    f"mean {row['theta_m_mean']:.4f} vs true {theta:.4f} (|gap| {gap:.4f}, tol 0.01)",
                )
            )
            lo, hi = cox_interval[0] - 0.01, cox_interval[1] + 0.01
            checks.append(
                CheckResult(
                    f"cox mean [{tag}]",
                    lo <= row["cox_mean"] <= hi,
                    f"mean {row['cox_mean']:.4f} vs reference interval "
                    f"({cox_interval[0]:.3f}, {cox_interval[1]:.3f}) widened by 0.01",
                )
            )
        return checks

    return verifier


# ---------------------------------------------------------------------------
# censoring sensitivity of the hazard ratio vs the acceleration summary
# ---------------------------------------------------------------------------

# follow-up cutoffs as multiples of the control median; the short end is
# where the hazard-ratio estimate visibly drifts, because truncation there
# reweights the fit toward the early, least-attenuated hazard ratios
FIG1_TMAX_FACTORS = (1.0, 2.0, 3.0, 5.0, 8.0)
FIG1_CENS_MEANS = (50.0, 100.0, 200.0)


def _fig1_runner(out_dir, n_obs, n_sim, seed, workers):
    config = _table1_config("gamma", 1.0, THETA_B)
    median0 = survival_control(config).quantile(0.5)
    root = np.random.SeedSequence(seed)
    cohort_seed, *censor_seeds = root.spawn(1 + len(FIG1_TMAX_FACTORS) * len(FIG1_CENS_MEANS))
    base = generate_cohort(config, n_obs, np.random.default_rng(cohort_seed))

    def summarize(data):
        km0, km1 = _arm_curves(data)
        fit = cox_fit(data.t_obs, data.d, data.a)
        return median_level_theta(km0, km1), fit.hazard_ratio, float(data.d.mean())

    rows = []
    theta_m, hr, events = summarize(base)
    rows.append(
        {
            "t_max_factor": np.nan,
            "t_max": np.nan,
            "censoring_mean": np.nan,
            "theta_m": theta_m,
            "cox_hr": hr,
            "event_fraction": events,
        }
    )
    pair_seeds = iter(censor_seeds)
    for factor in FIG1_TMAX_FACTORS:
        for mean in FIG1_CENS_MEANS:
            spec = CensoringSpec(exponential_mean=mean, t_max=factor * median0)
            data = apply_censoring(base, spec, np.random.default_rng(next(pair_seeds)))
            theta_m, hr, events = summarize(data)
            rows.append(
                {
                    "t_max_factor": factor,
                    "t_max": factor * median0,
                    "censoring_mean": mean,
                    "theta_m": theta_m,
                    "cox_hr": hr,
                    "event_fraction": events,
                }
            )
    frame = pd.DataFrame(rows)
    _write_csv(frame, Path(out_dir) / "estimates.csv")
    censored = frame.dropna(subset=["censoring_mean"])
    mean_swings = censored.groupby("t_max_factor")["cox_hr"].agg(lambda h: h.max() - h.min())
    _write_csv(
        pd.DataFrame(
            [
                {
                    "theta_m_range": frame["theta_m"].max() - frame["theta_m"].min(),
                    "cox_range": frame["cox_hr"].max() - frame["cox_hr"].min(),
                    "cox_swing_across_means": float(mean_swings.max()),
                    "theta_m_max_dev": (frame["theta_m"] - THETA_B).abs().max(),
                }
            ]
        ),
        Path(out_dir) / "summary.csv",
    )
    _write_csv(
        pd.DataFrame(
            [{"theta_true": THETA_B, "conditional_hazard_ratio": 3.0, "control_median": median0}]
        ),
        Path(out_dir) / "oracle.csv",
    )
    return {"config": config_to_dict(config), "t_max_factors": list(FIG1_TMAX_FACTORS),
            "censoring_means": list(FIG1_CENS_MEANS)}


def _fig1_verifier(directory):
    est = _read_artifact(directory, "estimates.csv")
    checks = []
    theta_range = est["theta_m"].max() - est["theta_m"].min()
    checks.append(
        CheckResult(
            "acceleration summary is censoring-insensitive",
            theta_range < 0.03,
            f"range {theta_range:.4f} across follow-up/censoring settings (tol 0.03)",
        )
    )
    cox_range = est["cox_hr"].max() - est["cox_hr"].min()
    checks.append(
        CheckResult(
            "hazard ratio moves with the censoring scheme",
            cox_range > 0.1,
            f"range {cox_range:.4f} across the follow-up/censoring grid (needs > 0.1)",
        )
    )
    return checks


# ---------------------------------------------------------------------------
# acceleration curves for three-atom effects (two baselines)
# ---------------------------------------------------------------------------

def _fig2_config(variant, mixture_baseline):
    effect = BHN_A if variant == "a" else BHN_B
    if mixture_baseline:
        return ScmConfig(
            baseline=WeibullMixtureBaseline(),
            frailty=Degenerate(1.0),
            effect=effect,
            treatment=RandomizedTreatment(0.5),
        )
    return ScmConfig(
        baseline=WeibullBaseline(),
        frailty=GammaFrailty(1.0),
        effect=effect,
        treatment=RandomizedTreatment(0.5),
    )


def _make_fig2_runner(mixture_baseline):
    def runner(out_dir, n_obs, n_sim, seed, workers):
        seeds = np.random.SeedSequence(seed).spawn(2)
        oracle_rows, est_rows, summary_rows = [], [], []
        for variant, child in zip(("a", "b"), seeds):
            config = _fig2_config(variant, mixture_baseline)
            truth = causal_theta(config, grid=FIG2_CDF, axis="treated-cdf")
            data = generate_cohort(config, n_obs, np.random.default_rng(child))
            km0, km1 = _arm_curves(data)
            est = observed_theta(km0, km1, levels=(1.0 - FIG2_CDF)[::-1])
            for q, truth_v, est_v in zip(FIG2_CDF, truth.value, est.value):
                oracle_rows.append({"variant": variant, "cdf_level": q, "theta_true": truth_v})
                est_rows.append({"variant": variant, "cdf_level": q, "theta_m": est_v})
            gap = float(np.nanmax(np.abs(est.value - truth.value)))
            atoms = (BHN_A if variant == "a" else BHN_B).atoms[0]
            summary_rows.append(
                {
                    "variant": variant,
                    "sup_gap": gap,
                    "theta_low_cdf": truth.value[0],
                    "theta_high_cdf": truth.value[-1],
                    "atom_min": min(atoms),
                    "atom_max": max(atoms),
                }
            )
        _write_csv(pd.DataFrame(oracle_rows), Path(out_dir) / "oracle.csv")
        _write_csv(pd.DataFrame(est_rows), Path(out_dir) / "estimates.csv")
        _write_csv(pd.DataFrame(summary_rows), Path(out_dir) / "summary.csv")
        return {
            "mixture_baseline": mixture_baseline,
            "cdf_grid": [float(q) for q in FIG2_CDF],
        }

    return runner


def _fig2_verifier(directory):
    summary = _read_artifact(directory, "summary.csv")
    checks = []
    for _, row in summary.iterrows():
        variant = row["variant"]
        checks.append(
            CheckResult(
                f"estimate tracks oracle [{variant}]",
                row["sup_gap"] < 0.02,
                f"sup gap {row['sup_gap']:.4f} over CDF grid 0.05-0.95 (tol 0.02)",
            )
        )
        checks.append(
            CheckResult(
                f"early acceleration exceeds late [{variant}]",
                row["theta_low_cdf"] > row["theta_high_cdf"],
                f"theta(0.05) {row['theta_low_cdf']:.4f} vs theta(0.95) {row['theta_high_cdf']:.4f}",
            )
        )
        inside = (
            row["atom_min"] - 1e-9 <= row["theta_high_cdf"]
            and row["theta_low_cdf"] <= row["atom_max"] + 1e-9
        )
        checks.append(
            CheckResult(
                f"curve bounded by atoms [{variant}]",
                bool(inside),
                f"curve in [{row['theta_high_cdf']:.4f}, {row['theta_low_cdf']:.4f}], "
                f"atoms [{row['atom_min']:.2f}, {row['atom_max']:.2f}]",
            )
        )
    return checks


# ---------------------------------------------------------------------------
# acceleration curves for Gamma effects of increasing heterogeneity
# ---------------------------------------------------------------------------

FIG3_VARIANCES = (0.5, 1.0, 2.0)


def _fig3_config(variant, variance):
    mean = THETA_A if variant == "a" else THETA_B
    return ScmConfig(
        baseline=WeibullBaseline(),
        frailty=GammaFrailty(1.0),
        effect=GammaEffect(mean, variance),
        treatment=RandomizedTreatment(0.5),
    )


def _fig3_runner(out_dir, n_obs, n_sim, seed, workers):
    combos = [(v, var) for v in ("a", "b") for var in FIG3_VARIANCES]
    seeds = np.random.SeedSequence(seed).spawn(len(combos))
    oracle_rows, est_rows, summary_rows = [], [], []
    for (variant, variance), child in zip(combos, seeds):
        config = _fig3_config(variant, variance)
        truth = causal_theta(config, grid=FIG2_CDF, axis="treated-cdf")
        data = generate_cohort(config, n_obs, np.random.default_rng(child))
        km0, km1 = _arm_curves(data)
        est = observed_theta(km0, km1, levels=(1.0 - FIG2_CDF)[::-1])
        for q, truth_v, est_v in zip(FIG2_CDF, truth.value, est.value):
            oracle_rows.append(
                {"variant": variant, "variance": variance, "cdf_level": q, "theta_true": truth_v}
            )
            est_rows.append(
                {"variant": variant, "variance": variance, "cdf_level": q, "theta_m": est_v}
            )
        summary_rows.append(
            {
                "variant": variant,
                "variance": variance,
                "theta_range": float(truth.value.max() - truth.value.min()),
                "sup_gap": float(np.nanmax(np.abs(est.value - truth.value))),
            }
        )
    _write_csv(pd.DataFrame(oracle_rows), Path(out_dir) / "oracle.csv")
    _write_csv(pd.DataFrame(est_rows), Path(out_dir) / "estimates.csv")
    _write_csv(pd.DataFrame(summary_rows), Path(out_dir) / "summary.csv")
    return {"variances": list(FIG3_VARIANCES), "cdf_grid": [float(q) for q in FIG2_CDF]}


def _fig3_verifier(directory):
    summary = _read_artifact(directory, "summary.csv")
    checks = []
    for variant, group in summary.groupby("variant"):
        ranges = group.sort_values("variance")["theta_range"].to_numpy()
        checks.append(
            CheckResult(
                f"heterogeneity widens the curve [{variant}]",
                bool(np.all(np.diff(ranges) > 0)),
                "oracle curve range over CDF grid: "
                + ", ".join(f"{r:.4f}" for r in ranges)
                + " for variances 0.5, 1, 2",
            )
        )
        worst = group["sup_gap"].max()
        # the tight 0.02 gate at n = 1e6 lives in the acceptance suite; this
        # exhibit runs at a tenth of that size, so the gate here is loose
        checks.append(
            CheckResult(
                f"estimates track oracle [{variant}]",
                worst < 0.10,
                f"worst sup gap {worst:.4f} (tol 0.10 at exhibit scale)",
            )
        )
    return checks


# ---------------------------------------------------------------------------
# confounded designs: naive vs adjusted acceleration curves
# ---------------------------------------------------------------------------

def _confounded_config(beta_la, tau0, tau1):
    return ScmConfig(
        baseline=WeibullBaseline(),
        frailty=GammaFrailty(1.0),
        effect=BHN_B,
        treatment=ConfoundedTreatment(beta_la=beta_la, tau0=tau0, tau1=tau1),
    )


def _confounded_panel(config, n_obs, child_seed):
    """One confounded cohort -> (theta_m values, theta_adj values) on FIG5_CDF."""
    data = generate_confounded_cohort(config, n_obs, np.random.default_rng(child_seed))
    levels = (1.0 - FIG5_CDF)[::-1]
    km0, km1 = _arm_curves(data)
    naive = observed_theta(km0, km1, levels=levels)
    adj0 = adjusted_survival(data, 0, config.treatment, method="ipw")
    adj1 = adjusted_survival(data, 1, config.treatment, method="ipw")
    adjusted = adjusted_theta(adj0, adj1, levels=levels)
    return naive.value, adjusted.value


def _fig5_panel_task(task):
    beta_la, tau0, tau1, n_obs, child = task
    return _confounded_panel(_confounded_config(beta_la, tau0, tau1), n_obs, child)


FIG5_PANELS = (("left", 0.5, 0.0), ("middle", 0.0, 0.5), ("right", 0.5, 0.5))


def _fig5_runner(out_dir, n_obs, n_sim, seed, workers):
    truth = causal_theta(_confounded_config(0.25, 0.0, 0.0), grid=FIG5_CDF, axis="treated-cdf")
    seeds = np.random.SeedSequence(seed).spawn(len(FIG5_PANELS))
    tasks = [
        (0.25, tau0, tau1, n_obs, child)
        for (_, tau0, tau1), child in zip(FIG5_PANELS, seeds)
    ]
    results = _map_tasks(_fig5_panel_task, tasks, workers)
    oracle_rows, est_rows, summary_rows = [], [], []
    for (panel, tau0, tau1), (naive, adjusted) in zip(FIG5_PANELS, results):
        for q, t_v, m_v, a_v in zip(FIG5_CDF, truth.value, naive, adjusted):
            oracle_rows.append({"panel": panel, "cdf_level": q, "theta_true": t_v})
            est_rows.append(
                {"panel": panel, "cdf_level": q, "theta_m": m_v, "theta_adj": a_v}
            )
        summary_rows.append(
            {
                "panel": panel,
                "tau0": tau0,
                "tau1": tau1,
                "gap_m": float(np.nanmax(np.abs(naive - truth.value))),
                "gap_adj": float(np.nanmax(np.abs(adjusted - truth.value))),
            }
        )
    _write_csv(pd.DataFrame(oracle_rows), Path(out_dir) / "oracle.csv")
    _write_csv(pd.DataFrame(est_rows), Path(out_dir) / "estimates.csv")
    _write_csv(pd.DataFrame(summary_rows), Path(out_dir) / "summary.csv")
    return {"beta_la": 0.25, "panels": [list(p) for p in FIG5_PANELS],
            "cdf_grid": [float(q) for q in FIG5_CDF]}


def _fig5_verifier(directory):
    summary = _read_artifact(directory, "summary.csv").set_index("panel")
    checks = []
    for panel in ("left", "middle", "right"):
        row = summary.loc[panel]
        checks.append(
            CheckResult(
                f"adjusted curve recovers truth [{panel}]",
                row["gap_adj"] < 0.03,
                f"max |theta_adj - theta| = {row['gap_adj']:.4f} (tol 0.03)",
            )
        )
        checks.append(
            CheckResult(
                f"naive curve is more biased [{panel}]",
                row["gap_m"] > row["gap_adj"],
                f"gap_m {row['gap_m']:.4f} vs gap_adj {row['gap_adj']:.4f}",
            )
        )
    right, left, middle = (summary.loc[p, "gap_m"] for p in ("right", "left", "middle"))
    checks.append(
        CheckResult(
            "double confounding dominates",
            right >= left and right >= middle,
            f"gap_m right {right:.4f} vs left {left:.4f}, middle {middle:.4f}",
        )
    )
    return checks


# ---------------------------------------------------------------------------
# appendix grids over confounding strength
# ---------------------------------------------------------------------------

FIGA_LEVELS = (0.0, 0.25, 0.45)


def _figa_taus(tag, tau):
    if tag == "figA1":
        return tau, 0.0
    if tag == "figA2":
        return 0.0, tau
    if tag == "figA3":
        return tau, tau
    raise ValueError(f"unknown appendix grid {tag!r}")


def _figa_panel_task(task):
    beta_la, tau0, tau1, n_obs, child = task
    return _confounded_panel(_confounded_config(beta_la, tau0, tau1), n_obs, child)


def _make_figa_runner(tag):
    def runner(out_dir, n_obs, n_sim, seed, workers):
        truth = causal_theta(
            _confounded_config(0.25, 0.0, 0.0), grid=FIG5_CDF, axis="treated-cdf"
        )
        combos = [(b, t) for b in FIGA_LEVELS for t in FIGA_LEVELS]
        seeds = np.random.SeedSequence(seed).spawn(len(combos))
        tasks = []
        for (beta_la, tau), child in zip(combos, seeds):
            tau0, tau1 = _figa_taus(tag, tau)
            tasks.append((beta_la, tau0, tau1, n_obs, child))
        results = _map_tasks(_figa_panel_task, tasks, workers)
        oracle_rows = [
            {"cdf_level": q, "theta_true": v} for q, v in zip(FIG5_CDF, truth.value)
        ]
        est_rows, summary_rows = [], []
        for (beta_la, tau), (naive, adjusted) in zip(combos, results):
            for q, m_v, a_v in zip(FIG5_CDF, naive, adjusted):
                est_rows.append(
                    {
                        "beta_la": beta_la,
                        "tau": tau,
                        "cdf_level": q,
                        "theta_m": m_v,
                        "theta_adj": a_v,
                    }
                )
            summary_rows.append(
                {
                    "beta_la": beta_la,
                    "tau": tau,
                    "gap_m": float(np.nanmax(np.abs(naive - truth.value))),
                    "gap_adj": float(np.nanmax(np.abs(adjusted - truth.value))),
                }
            )
        _write_csv(pd.DataFrame(oracle_rows), Path(out_dir) / "oracle.csv")
        _write_csv(pd.DataFrame(est_rows), Path(out_dir) / "estimates.csv")
        _write_csv(pd.DataFrame(summary_rows), Path(out_dir) / "summary.csv")
        return {"grid_levels": list(FIGA_LEVELS), "tau_mode": tag}

    return runner


def _figa_verifier(directory):
    summary = _read_artifact(directory, "summary.csv")
    checks = []
    nulls = summary[(summary["beta_la"] == 0.0) | (summary["tau"] == 0.0)]
    worst_null = nulls["gap_m"].max()
    checks.append(
        CheckResult(
            "no bias without an open confounding path",
            worst_null < 0.03,
            f"worst naive gap over null panels {worst_null:.4f} (tol 0.03)",
        )
    )
    indexed = summary.set_index(["beta_la", "tau"])
    strong = indexed.loc[(0.45, 0.45), "gap_m"]
    mild = indexed.loc[(0.25, 0.25), "gap_m"]
    checks.append(
        CheckResult(
            "stronger confounding biases more",
            strong >= mild,
            f"gap_m at (0.45, 0.45) = {strong:.4f} vs (0.25, 0.25) = {mild:.4f}",
        )
    )
    worst_adj = summary["gap_adj"].max()
    checks.append(
        CheckResult(
            "adjustment stays calibrated",
            worst_adj < 0.04,
            f"worst adjusted gap {worst_adj:.4f} (tol 0.04)",
        )
    )
    return checks


# ---------------------------------------------------------------------------
# mean and log-mean contrast table across all designs
# ---------------------------------------------------------------------------

def _supp_rows():
    rows = []
    for block, theta in (("a", THETA_A), ("b", THETA_B)):
        for kind in _FRAILTY_KINDS:
            for var in _FRAILTY_VARIANCES:
                rows.append(
                    (
                        f"table1{block}_{kind}_{var:g}",
                        block,
                        f"table1{block}",
                        _table1_config(kind, var, theta),
                    )
                )
        rows.append((f"fig2L_{block}", block, f"fig2L_{block}", _fig2_config(block, False)))
        rows.append((f"fig2R_{block}", block, f"fig2R_{block}", _fig2_config(block, True)))
        for var in FIG3_VARIANCES:
            rows.append(
                (f"fig3_{block}_{var:g}", block, "fig3", _fig3_config(block, var))
            )
    return rows


def _supp_row_task(task):
    row_id, config, n_obs, child = task
    data = generate_cohort(config, n_obs, np.random.default_rng(child))
    ratio_emp = float(data.t0.mean() / data.ta.mean())
    log_emp = float(np.exp(np.mean(np.log(data.t0)) - np.mean(np.log(data.ta))))
    contrasts = lemma1_contrasts(config)
    return {
        "row": row_id,
        "ratio_emp": ratio_emp,
        "log_emp": log_emp,
        "ratio_true": 1.0 / contrasts.mean_ratio,
        "log_true": float(np.exp(-contrasts.log_diff)),
        "mean_diverged": int(contrasts.mean_diverged),
        "horizon": contrasts.horizon if contrasts.horizon is not None else np.nan,
    }


def _supp_runner(out_dir, n_obs, n_sim, seed, workers):
    rows = _supp_rows()
    seeds = np.random.SeedSequence(seed).spawn(len(rows))
    tasks = [
        (row_id, config, n_obs, child)
        for (row_id, _, _, config), child in zip(rows, seeds)
    ]
    results = _map_tasks(_supp_row_task, tasks, workers)
    meta = {row_id: (block, source) for row_id, block, source, _ in rows}
    est_rows, oracle_rows, summary_rows = [], [], []
    for rec in results:
        block, source = meta[rec["row"]]
        est_rows.append(
            {
                "row": rec["row"],
                "block": block,
                "source": source,
                "ratio_emp": rec["ratio_emp"],
                "log_emp": rec["log_emp"],
            }
        )
        oracle_rows.append(
            {
                "row": rec["row"],
                "block": block,
                "source": source,
                "ratio_true": rec["ratio_true"],
                "log_true": rec["log_true"],
                "mean_diverged": rec["mean_diverged"],
                "horizon": rec["horizon"],
            }
        )
        summary_rows.append(
            {
                "row": rec["row"],
                "block": block,
                "source": source,
                "ratio_emp": rec["ratio_emp"],
                "ratio_true": rec["ratio_true"],
                "log_emp": rec["log_emp"],
                "log_true": rec["log_true"],
                "mean_diverged": rec["mean_diverged"],
            }
        )
    _write_csv(pd.DataFrame(est_rows), Path(out_dir) / "estimates.csv")
    _write_csv(pd.DataFrame(oracle_rows), Path(out_dir) / "oracle.csv")
    _write_csv(pd.DataFrame(summary_rows), Path(out_dir) / "summary.csv")
    return {"rows": [r[0] for r in rows]}


def _supp_verifier(directory):
    summary = _read_artifact(directory, "summary.csv").set_index("row")
    checks = []
    for row_id, rec in summary.iterrows():
        if rec["source"].startswith("table1"):
            theta = THETA_A if rec["block"] == "a" else THETA_B
            target = round(theta, 3)
            for col, label in (("ratio_emp", "mean ratio"), ("log_emp", "log contrast")):
                gap = abs(rec[col] - target)
                checks.append(
                    CheckResult(
                        f"homogeneous {label} [{row_id}]",
                        gap <= 0.01,
                        f"{rec[col]:.4f} vs {target:.3f} (tol 0.01)",
                    )
                )
    for row_id, target in SUPP_RATIO_REFERENCE.items():
        value = summary.loc[row_id, "ratio_emp"]
        checks.append(
            CheckResult(
                f"three-atom mean ratio [{row_id}]",
                abs(value - target) <= 0.02,
                f"{value:.4f} vs reference {target:.3f} (tol 0.02)",
            )
        )
    for row_id, target in SUPP_LOG_REFERENCE.items():
        value = summary.loc[row_id, "log_emp"]
        checks.append(
            CheckResult(
                f"three-atom log contrast [{row_id}]",
                abs(value - target) <= 0.02,
                f"{value:.4f} vs reference {target:.3f} (tol 0.02); the estimand "
                "is baseline-free, so both rows evaluate near 1.212",
            )
        )
    for row_id in summary.index:
        expected = row_id.startswith("fig3_a")
        flagged = bool(summary.loc[row_id, "mean_diverged"])
        if expected or flagged:
            checks.append(
                CheckResult(
                    f"divergent mean flag [{row_id}]",
                    flagged == expected,
                    f"flag {flagged}, expected {expected} "
                    "(infinite E[1/U1] exactly when the Gamma effect shape is at most 1)",
                )
            )
    return checks


# ---------------------------------------------------------------------------
# case-study-style mixture curve with a bootstrap band
# ---------------------------------------------------------------------------

CASE_COMPONENTS = ((0.5, 0.9), (0.5, 0.45))
CASE_SCALE = 200.0


def _case_control_survival():
    return SmoothSurvival(
        lambda t: np.exp(-((np.asarray(t, dtype=float) / CASE_SCALE) ** 2)),
        CASE_SCALE,
        "case-study control",
    )


def _case_cohort(n_obs, rng):
    t0 = CASE_SCALE * np.sqrt(rng.exponential(1.0, n_obs))
    u1 = np.where(rng.random(n_obs) < CASE_COMPONENTS[0][0], CASE_COMPONENTS[0][1],
                  CASE_COMPONENTS[1][1])
    a = (rng.random(n_obs) < 0.5).astype(float)
    ta = t0 / u1
    t_obs = np.where(a == 1, ta, t0)
    return Dataset(
        u0=np.ones(n_obs),
        u1=u1,
        l=np.full(n_obs, np.nan),
        a=a,
        t0=t0,
        ta=ta,
        t_obs=t_obs,
        d=np.ones(n_obs),
    )


def _case_estimator(data):
    km0, km1 = _arm_curves(data)
    return observed_theta(km0, km1, levels=(1.0 - FIG5_CDF)[::-1])


def _case_runner(out_dir, n_obs, n_sim, seed, workers):
    s0 = _case_control_survival()
    truth_time = mixture_theta(s0, CASE_COMPONENTS)
    s1 = mixture_survival(s0, CASE_COMPONENTS)
    levels = (1.0 - FIG5_CDF)[::-1]
    truth_levels = (s0.quantile_grid(levels) / s1.quantile_grid(levels))[::-1]

    cohort_seed, boot_seed = np.random.SeedSequence(seed).spawn(2)
    data = _case_cohort(n_obs, np.random.default_rng(cohort_seed))
    banded = bootstrap_band(data, _case_estimator, n_boot=200, seed=boot_seed)

    oracle_rows = [
        {"axis": "time", "grid": t, "theta_true": v}
        for t, v in zip(truth_time.grid, truth_time.value)
    ] + [
        {"axis": "treated-cdf", "grid": q, "theta_true": v}
        for q, v in zip(FIG5_CDF, truth_levels)
    ]
    est_rows = [
        {"cdf_level": q, "theta_m": v, "band_lo": lo, "band_hi": hi}
        for q, v, lo, hi in zip(banded.grid, banded.value, banded.lo, banded.hi)
    ]
    factors = [f for _, f in CASE_COMPONENTS]
    summary = pd.DataFrame(
        [
            {
                "theta_min": float(truth_time.value.min()),
                "theta_max": float(truth_time.value.max()),
                "factor_min": min(factors),
                "factor_max": max(factors),
                "sup_gap_est": float(np.nanmax(np.abs(banded.value - truth_levels))),
                "band_covers_truth_frac": float(
                    np.mean(
                        (banded.lo <= truth_levels) & (truth_levels <= banded.hi)
                    )
                ),
            }
        ]
    )
    _write_csv(pd.DataFrame(oracle_rows), Path(out_dir) / "oracle.csv")
    _write_csv(pd.DataFrame(est_rows), Path(out_dir) / "estimates.csv")
    _write_csv(summary, Path(out_dir) / "summary.csv")
    return {"components": [list(c) for c in CASE_COMPONENTS], "scale": CASE_SCALE}


def _case_verifier(directory):
    oracle = _read_artifact(directory, "oracle.csv")
    summary = _read_artifact(directory, "summary.csv").iloc[0]
    checks = []
    inside = (
        summary["theta_min"] >= summary["factor_min"] - 1e-9
        and summary["theta_max"] <= summary["factor_max"] + 1e-9
    )
    checks.append(
        CheckResult(
            "mixture curve bounded by its factors",
            bool(inside),
            f"curve in [{summary['theta_min']:.4f}, {summary['theta_max']:.4f}], "
            f"factors [{summary['factor_min']:.2f}, {summary['factor_max']:.2f}]",
        )
    )
    time_rows = oracle[oracle["axis"] == "time"]
    s0 = _case_control_survival()
    s1 = mixture_survival(s0, CASE_COMPONENTS)
    # closed-form inversion of the control survival checks the generic solver
    t = time_rows["grid"].to_numpy()
    closed = CASE_SCALE * np.sqrt(-np.log(s1(t))) / t
    worst = float(np.max(np.abs(closed - time_rows["theta_true"].to_numpy())))
    checks.append(
        CheckResult(
            "curve matches closed-form inversion",
            worst < 1e-4,
            f"max deviation {worst:.2e} (tol 1e-4)",
        )
    )
    checks.append(
        CheckResult(
            "cohort estimate tracks the curve",
            summary["sup_gap_est"] < 0.05,
            f"sup gap {summary['sup_gap_est']:.4f} (tol 0.05)",
        )
    )
    return checks


# ---------------------------------------------------------------------------
# registry and entry points
# ---------------------------------------------------------------------------

REGISTRY = {
    "table1a": Scenario(
        "table1a",
        "Replication table, decelerating homogeneous effect: acceleration "
        "summary and hazard ratio across frailty laws and variances.",
        500,
        1000,
        20260823,
        _make_table1_runner(THETA_A),
        _make_table1_verifier(THETA_A, TABLE1A_REFERENCE),
    ),
    "table1b": Scenario(
        "table1b",
        "Replication table, accelerating homogeneous effect: acceleration "
        "summary and hazard ratio across frailty laws and variances.",
        500,
        1000,
        20260824,
        _make_table1_runner(THETA_B),
        _make_table1_verifier(THETA_B, TABLE1B_REFERENCE),
    ),
    "fig1": Scenario(
        "fig1",
        "Censoring sensitivity on one large cohort: the acceleration summary "
        "is stable while the hazard ratio drifts with follow-up and censoring.",
        1_000_000,
        1,
        20260825,
        _fig1_runner,
        _fig1_verifier,
    ),
    "fig2L": Scenario(
        "fig2L",
        "Acceleration curves for three-atom effects on the Weibull-Gamma "
        "baseline, oracle vs large-cohort estimate.",
        1_000_000,
        1,
        20260826,
        _make_fig2_runner(False),
        _fig2_verifier,
    ),
    "fig2R": Scenario(
        "fig2R",
        "Acceleration curves for three-atom effects on the two-component "
        "Weibull-mixture baseline, oracle vs large-cohort estimate.",
        1_000_000,
        1,
        20260827,
        _make_fig2_runner(True),
        _fig2_verifier,
    ),
    "fig3": Scenario(
        "fig3",
        "Oracle acceleration curves for Gamma effects of increasing variance, "
        "with moderate-cohort estimates.",
        100_000,
        1,
        20260828,
        _fig3_runner,
        _fig3_verifier,
    ),
    "fig5": Scenario(
        "fig5",
        "Confounded designs: naive vs inverse-probability-weighted "
        "acceleration curves against the causal curve.",
        100_000,
        1,
        20260848,
        _fig5_runner,
        _fig5_verifier,
    ),
    "figA1": Scenario(
        "figA1",
        "Appendix grid: confounding through the frailty channel only.",
        100_000,
        1,
        20260830,
        _make_figa_runner("figA1"),
        _figa_verifier,
    ),
    "figA2": Scenario(
        "figA2",
        "Appendix grid: confounding through the effect channel only.",
        100_000,
        1,
        20260831,
        _make_figa_runner("figA2"),
        _figa_verifier,
    ),
    "figA3": Scenario(
        "figA3",
        "Appendix grid: confounding through both channels.",
        100_000,
        1,
        20260901,
        _make_figa_runner("figA3"),
        _figa_verifier,
    ),
    "suppTable": Scenario(
        "suppTable",
        "Mean-ratio and log-contrast table across all designs, empirical vs "
        "analytic with divergence flags.",
        1_000_000,
        1,
        20260902,
        _supp_runner,
        _supp_verifier,
    ),
    "caseMixture": Scenario(
        "caseMixture",
        "Two-component mixture acceleration curve with a bootstrap band on a "
        "synthetic cohort.",
        20_000,
        1,
        20260903,
        _case_runner,
        _case_verifier,
    ),
}


def run_scenario(name, out_root, n_obs=None, n_sim=None, seed=None, workers=1):
    """Run one scenario and write its artifacts under ``<out_root>/<name>``."""
    if name not in REGISTRY:
        raise KeyError(f"unknown scenario {name!r}; available: {', '.join(REGISTRY)}")
    scenario = REGISTRY[name]
    n_obs = scenario.n_obs if n_obs is None else int(n_obs)
    n_sim = scenario.n_sim if n_sim is None else int(n_sim)
    seed = scenario.seed if seed is None else int(seed)
    out_dir = Path(out_root) / name
    out_dir.mkdir(parents=True, exist_ok=True)
    params = scenario.runner(out_dir, n_obs, n_sim, seed, workers)
    _write_manifest(out_dir, name, n_obs, n_sim, seed, params)
    return out_dir


def verify_scenario(name, out_root):
    """Evaluate a scenario's verify rules against artifacts under ``out_root``."""
    if name not in REGISTRY:
        raise KeyError(f"unknown scenario {name!r}; available: {', '.join(REGISTRY)}")
    directory = Path(out_root) / name
    if not directory.exists():
        raise ArtifactsMissing(f"no artifacts for {name!r} under {out_root}")
    return REGISTRY[name].verifier(directory)


def run_config_file(path, out_root, n_obs=None, n_sim=None, seed=None, workers=1):
    """Run the generic single-config pipeline described by a JSON file.

    The file holds the generating-mechanism schema (see docs/scenarios.md)
    plus optional ``name``, ``n_obs`` and ``seed`` keys.  Artifacts mirror the
    built-in curve scenarios: estimated and oracle acceleration curves on the
    standard CDF grid plus a gap summary.
    """
    from .scm import config_from_dict

    with open(path, encoding="utf-8") as handle:
        raw = json.load(handle)
    name = raw.pop("name", Path(path).stem)
    n_obs = int(raw.pop("n_obs", 100_000) if n_obs is None else n_obs)
    seed = int(raw.pop("seed", 0) if seed is None else seed)
    raw.pop("n_sim", None)
    config = config_from_dict(raw)
    out_dir = Path(out_root) / name
    out_dir.mkdir(parents=True, exist_ok=True)
    truth = causal_theta(config, grid=FIG2_CDF, axis="treated-cdf")
    data = generate_cohort(config, n_obs, np.random.default_rng(np.random.SeedSequence(seed)))
    km0, km1 = _arm_curves(data)
    est = observed_theta(km0, km1, levels=(1.0 - FIG2_CDF)[::-1])
    _write_csv(
        pd.DataFrame({"cdf_level": FIG2_CDF, "theta_true": truth.value}),
        out_dir / "oracle.csv",
    )
    _write_csv(
        pd.DataFrame({"cdf_level": FIG2_CDF, "theta_m": est.value}),
        out_dir / "estimates.csv",
    )
    _write_csv(
        pd.DataFrame(
            [{"sup_gap": float(np.nanmax(np.abs(est.value - truth.value)))}]
        ),
        out_dir / "summary.csv",
    )
    _write_manifest(out_dir, name, n_obs, 1, seed, config_to_dict(config))
    return out_dir
