"""Nonparametric and semiparametric estimators for simulated cohorts.

The centrepiece is the acceleration-curve estimator: plug Kaplan-Meier
survivals of the two arms into ``theta(t) = S0^{-1}(Sa(t)) / t`` using the
supremum-quantile convention on step functions.  Around it sit a weighted
product-limit estimator, a Breslow-ties Cox partial-likelihood fit for a
binary arm indicator, an uncensored log-time contrast, confounder-adjusted
survival curves (inverse-probability weighting with the known design
propensity, or equal-mass stratification), and a percentile bootstrap band.

Estimates are reported only where identified: quantiles beyond the observed
range of a step curve are NaN, never extrapolated.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .oracle import AccelCurve

__all__ = [
    "StepSurvival",
    "CoxFit",
    "kaplan_meier",
    "observed_theta",
    "median_level_theta",
    "cox_fit",
    "logT_regression",
    "adjusted_survival",
    "adjusted_theta",
    "bootstrap_band",
]

#: default treated-survival levels for scalar acceleration summaries
SUMMARY_LEVELS = (0.3, 0.4, 0.5, 0.6, 0.7)


@dataclass
class StepSurvival:
    """Right-continuous step survival with jumps at event times.

    ``values[i]`` is the survival just after ``times[i]``; the curve is 1
    before the first jump and flat after the last.  ``n_risk``/``n_event``
    hold the (weighted) at-risk and event masses at each jump, and
    ``t_max_observed`` the largest follow-up (event or censored), beyond
    which nothing is identified.
    """

    times: np.ndarray
    values: np.ndarray
    n_risk: np.ndarray
    n_event: np.ndarray
    t_max_observed: float
    arm: int | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape or self.times.ndim != 1:
            raise ValueError("times and values must be 1-d arrays of equal length")
        if len(self.times) > 1:
            if not np.all(np.diff(self.times) > 0):
                raise ValueError("jump times must be strictly increasing")
            if np.any(np.diff(self.values) > 1e-12):
                raise ValueError("survival values must be nonincreasing")
        if len(self.values) and (self.values[0] > 1.0 + 1e-12 or self.values[-1] < -1e-12):
            raise ValueError("survival values must lie in [0, 1]")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if len(self.times) == 0:
            out = np.ones_like(t)
            return float(out) if out.ndim == 0 else out
        idx = np.searchsorted(self.times, t, side="right") - 1
        out = np.where(idx < 0, 1.0, self.values[np.clip(idx, 0, len(self.values) - 1)])
        return float(out) if out.ndim == 0 else out

    def quantile(self, p):
        """Supremum-quantile on the step curve: the first jump taking S below p.

        Returns NaN where the curve never drops below ``p`` within the
        observed range (the level is not identified from the data).
        """
        p_arr = np.asarray(p, dtype=float)
        if np.any((p_arr <= 0) | (p_arr > 1)):
            raise ValueError("quantile levels must lie in (0, 1]")
        if len(self.times) == 0:
            out = np.full_like(p_arr, np.nan)
            return float(out) if out.ndim == 0 else out
        # values are nonincreasing, so -values is sorted ascending
        idx = np.searchsorted(-self.values, -p_arr, side="right")
        inside = idx < len(self.times)
        out = np.where(inside, self.times[np.minimum(idx, len(self.times) - 1)], np.nan)
        return float(out) if out.ndim == 0 else out


def kaplan_meier(time, event, weights=None, arm=None):
    """Weighted product-limit estimate of the survival of ``time``.

    Parameters
    ----------
    time, event : array_like
        Follow-up times and event indicators (1 = event, 0 = censored).
    weights : array_like, optional
        Positive subject weights; omitting them is identical to passing 1s.
    arm : int, optional
        Label carried on the result for bookkeeping.
    """
    t = np.asarray(time, dtype=float)
    d = np.asarray(event, dtype=float)
    if t.ndim != 1 or t.shape != d.shape:
        raise ValueError("time and event must be 1-d arrays of equal length")
    if len(t) == 0:
        raise ValueError("cannot estimate survival from zero records")
    if not np.all((d == 0) | (d == 1)):
        raise ValueError("event indicators must be 0 or 1")
    w = np.ones_like(t) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != t.shape or np.any(w <= 0):
        raise ValueError("weights must be positive and match time's shape")

    order = np.argsort(t, kind="stable")
    t, d, w = t[order], d[order], w[order]
    unique_t, inverse = np.unique(t, return_inverse=True)
    event_mass = np.bincount(inverse, weights=w * d, minlength=len(unique_t))
    total_mass = np.bincount(inverse, weights=w, minlength=len(unique_t))
    # weight at risk just before each unique time
    at_risk = w.sum() - np.concatenate(([0.0], np.cumsum(total_mass)[:-1]))
    jumps = event_mass > 0
    if not jumps.any():
        warnings.warn("no events observed; survival estimate is flat at 1", stacklevel=2)
    values = np.cumprod(1.0 - event_mass[jumps] / at_risk[jumps])
    return StepSurvival(
        times=unique_t[jumps],
        values=values,
        n_risk=at_risk[jumps],
        n_event=event_mass[jumps],
        t_max_observed=float(t[-1]),
        arm=arm,
    )


def _thin(values, max_points):
    if len(values) <= max_points:
        return values
    idx = np.unique(np.round(np.linspace(0, len(values) - 1, max_points)).astype(int))
    return values[idx]


def observed_theta(curve0, curve_a, grid=None, levels=None, provenance="estimated",
                   max_grid=200):
    """Acceleration-curve estimate from two arm survival curves.

    Time mode (default): evaluate ``theta(t) = Q0(Sa(t)) / t`` on ``grid``
    (default: the treated curve's jump times, thinned to ``max_grid``
    points), with ``Q0`` the control sup-quantile.  Values are NaN wherever
    the needed level lies beyond the control curve's observed range or ``t``
    exceeds the treated follow-up.

    Level mode: with ``levels`` given (treated-survival levels in (0,1)),
    estimate ``theta = Q0(p) / Qa(p)`` per level and return the curve on the
    treated-CDF axis ``1 - p``.
    """
    if levels is not None:
        p = np.asarray(levels, dtype=float)
        if np.any((p <= 0) | (p >= 1)):
            raise ValueError("levels must lie strictly inside (0, 1)")
        if len(p) > 1 and not np.all(np.diff(p) > 0):
            raise ValueError("levels must be strictly increasing")
        ratio = curve0.quantile(p) / curve_a.quantile(p)
        return AccelCurve(
            grid=(1.0 - p)[::-1],
            value=np.asarray(ratio)[::-1],
            axis="treated-cdf",
            provenance=provenance,
        )
    if grid is None:
        grid = _thin(curve_a.times, max_grid)
    grid = np.asarray(grid, dtype=float)
    if np.any(grid <= 0):
        raise ValueError("time grid must be positive")
    levels_at_t = curve_a(grid)
    # where the treated curve has already hit zero the level is unreachable
    value = np.full(grid.shape, np.nan)
    positive = levels_at_t > 0
    value[positive] = curve0.quantile(levels_at_t[positive]) / grid[positive]
    value = np.where(grid > curve_a.t_max_observed, np.nan, value)
    return AccelCurve(
        grid=grid,
        value=value,
        axis="time",
        provenance=provenance,
        treated_cdf=1.0 - levels_at_t,
    )


def median_level_theta(curve0, curve_a, levels=SUMMARY_LEVELS):
    """Scalar acceleration summary: median of ``Q0(p)/Qa(p)`` over ``levels``.

    Unidentified levels are dropped; the summary is NaN only if every level
    is unidentified.
    """
    p = np.asarray(levels, dtype=float)
    ratio = curve0.quantile(p) / curve_a.quantile(p)
    if np.all(np.isnan(ratio)):
        return float("nan")
    return float(np.nanmedian(ratio))


@dataclass(frozen=True)
class CoxFit:
    """Result of a proportional-hazards partial-likelihood fit."""

    log_hr: float
    standard_error: float
    iterations: int
    converged: bool
    diverged: bool = False

    @property
    def hazard_ratio(self):
        return float(np.exp(self.log_hr))


def cox_fit(time, event, arm, max_iter=50, tol=1e-10):
    """Cox partial-likelihood fit of a single binary covariate, Breslow ties.

    Newton-Raphson on the profile score; tied event times contribute their
    full tie group to the risk set.  ``converged`` requires the final Newton
    step below ``tol``; monotone-likelihood divergence (|log HR| running
    away) is flagged instead of looping.
    """
    t = np.asarray(time, dtype=float)
    d = np.asarray(event, dtype=float)
    a = np.asarray(arm, dtype=float)
    if not (t.shape == d.shape == a.shape) or t.ndim != 1:
        raise ValueError("time, event and arm must be 1-d arrays of equal length")
    if not np.all((a == 0) | (a == 1)):
        raise ValueError("arm must be binary")
    if d.sum() == 0:
        raise ValueError("no events: the partial likelihood is flat")
    if np.all(a == a[0]):
        raise ValueError("both arms are required for a hazard-ratio fit")

    order = np.argsort(-t, kind="stable")
    t, d, a = t[order], d[order], a[order]
    # descending times: first occurrence of each unique value starts its tie
    # group, and the group's last row closes the risk-set cumulative sums
    _, group_start = np.unique(-t, return_index=True)
    group_end = np.append(group_start[1:], len(t)) - 1
    d_group = np.add.reduceat(d, group_start)
    da_group = np.add.reduceat(d * a, group_start)
    has_events = d_group > 0

    beta = 0.0
    diverged = False
    converged = False
    iterations = 0
    info = np.nan
    for iterations in range(1, max_iter + 1):
        w = np.exp(beta * a)
        risk0 = np.cumsum(w)[group_end]
        risk1 = np.cumsum(w * a)[group_end]
        r = risk1[has_events] / risk0[has_events]
        score = np.sum(da_group[has_events] - d_group[has_events] * r)
        info = np.sum(d_group[has_events] * r * (1.0 - r))
        if info <= 0:
            diverged = True
            break
        step = score / info
        beta += step
        if abs(beta) > 50.0:
            diverged = True
            break
        if abs(step) < tol:
            converged = True
            break
    se = float(1.0 / np.sqrt(info)) if info > 0 else float("nan")
    return CoxFit(
        log_hr=float(beta),
        standard_error=se,
        iterations=iterations,
        converged=converged and not diverged,
        diverged=diverged,
    )


def logT_regression(time, event, arm):
    """Acceleration estimate from the uncensored log-time contrast.

    Returns ``exp(mean log T | arm 0  -  mean log T | arm 1)``, the
    log-linear-regression estimate of the time-scale factor.  Any censored
    record makes the contrast unestimable and raises.
    """
    t = np.asarray(time, dtype=float)
    d = np.asarray(event, dtype=float)
    a = np.asarray(arm, dtype=float)
    if np.any(d == 0):
        raise ValueError(
            "log-time contrast requires fully observed event times; censor-free data only"
        )
    if not ((a == 1).any() and (a == 0).any()):
        raise ValueError("both arms are required")
    return float(np.exp(np.mean(np.log(t[a == 0])) - np.mean(np.log(t[a == 1]))))


def adjusted_survival(data, arm, treatment, method="ipw", n_bins=20):
    """Confounder-adjusted survival of one arm.

    ``method="ipw"`` reweights the arm's records by the inverse of the known
    design propensity ``P(A=arm | L)`` taken from ``treatment`` and requires
    positivity (propensity at least 0.01 everywhere).  ``method="stratify"``
    splits the confounder into ``n_bins`` equal-mass bins, estimates a
    per-bin Kaplan-Meier within the arm, and averages the curves with the
    bin masses.
    """
    from .scm import ConfoundedTreatment, Dataset  # local import to avoid a cycle

    if not isinstance(data, Dataset):
        raise TypeError("data must be a Dataset")
    if np.any(np.isnan(data.l)):
        raise ValueError("adjustment requires the confounder column")
    if arm not in (0, 1):
        raise ValueError("arm must be 0 or 1")
    if method == "ipw":
        if not isinstance(treatment, ConfoundedTreatment):
            raise TypeError("ipw adjustment needs the design's ConfoundedTreatment")
        p_treat = treatment.propensity(data.l)
        p_arm = p_treat if arm == 1 else 1.0 - p_treat
        if p_arm.min() < 0.01:
            raise ValueError(
                f"positivity violated: min propensity {p_arm.min():.4f} below 0.01"
            )
        sub = data.arm(arm)
        sub_p = treatment.propensity(sub.l)
        w = 1.0 / (sub_p if arm == 1 else 1.0 - sub_p)
        return kaplan_meier(sub.t_obs, sub.d, weights=w, arm=arm)
    if method == "stratify":
        edges = np.quantile(data.l, np.linspace(0.0, 1.0, n_bins + 1))
        bins = np.clip(
            np.searchsorted(edges[1:-1], data.l, side="right"), 0, n_bins - 1
        )
        pooled_times, pooled_values = [], None
        curves, masses = [], []
        for b in range(n_bins):
            in_bin = bins == b
            rows = in_bin & (data.a == arm)
            if not rows.any():
                raise ValueError(f"stratum {b} has no records in arm {arm}")
            curves.append(kaplan_meier(data.t_obs[rows], data.d[rows], arm=arm))
            masses.append(in_bin.mean())
        masses = np.asarray(masses)
        times = np.unique(np.concatenate([c.times for c in curves]))
        values = sum(m * c(times) for m, c in zip(masses, curves))
        # per-jump risk/event masses have no single-sample meaning for an
        # averaged curve; carry NaNs rather than misleading counts
        return StepSurvival(
            times=times,
            values=np.minimum.accumulate(np.asarray(values)),
            n_risk=np.full(len(times), np.nan),
            n_event=np.full(len(times), np.nan),
            t_max_observed=float(min(c.t_max_observed for c in curves)),
            arm=arm,
        )
    raise ValueError(f"unknown adjustment method {method!r}")


def adjusted_theta(curve0, curve_a, grid=None, levels=None):
    """Acceleration curve from two adjusted survival curves."""
    return observed_theta(curve0, curve_a, grid=grid, levels=levels, provenance="adjusted")


def bootstrap_band(data, estimator, n_boot=200, seed=0):
    """Pointwise 95% percentile band around an acceleration-curve estimator.

    ``estimator`` maps a dataset to an ``AccelCurve`` on a fixed grid; the
    band resamples subjects with replacement ``n_boot`` times (at least 100)
    and takes pointwise 2.5/97.5 percentiles over replicates.  A gridpoint
    whose value is unidentified in more than 20% of replicates gets no band.
    """
    if n_boot < 100:
        raise ValueError(f"at least 100 bootstrap replicates are required, got {n_boot}")
    base = estimator(data)
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    children = seed.spawn(n_boot)
    samples = np.full((n_boot, len(base.grid)), np.nan)
    n = len(data)
    for b, child in enumerate(children):
        rng = np.random.default_rng(child)
        resampled = estimator(data.take(rng.integers(0, n, n)))
        if resampled.grid.shape != base.grid.shape or not np.allclose(
            resampled.grid, base.grid
        ):
            raise ValueError("estimator must return curves on a fixed grid")
        samples[b] = resampled.value
    valid = np.isfinite(samples)
    ok = valid.mean(axis=0) >= 0.8
    lo = np.full(len(base.grid), np.nan)
    hi = np.full(len(base.grid), np.nan)
    if ok.any():
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            lo[ok] = np.nanpercentile(samples[:, ok], 2.5, axis=0)
            hi[ok] = np.nanpercentile(samples[:, ok], 97.5, axis=0)
    return replace(base, lo=lo, hi=hi)
