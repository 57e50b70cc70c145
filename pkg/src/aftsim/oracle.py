"""Analytic ground truth for the simulated cohorts.

Marginal survival under control is the frailty Laplace transform evaluated at
the baseline cumulative hazard; under treatment it is the effect-law mixture
of time-scaled copies of the control survival.  From those two curves the
module derives the causal time-scale acceleration curve

    theta(t) = S0^{-1}(S1(t)) / t,

its local-rate counterpart ``eta(t) = d/dt S0^{-1}(S1(t))``, the reverse-time
curve, subject-level conditional multipliers, and exact mean / log-mean
contrasts of the two potential event times.

Quantiles throughout use the supremum convention
``S^{-1}(p) = sup{t : S(t) >= p}``; for the strictly decreasing smooth curves
here this is the ordinary inverse, computed by bracketed root finding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy import stats

from .distributions import BHN, Degenerate, GammaEffect
from .scm import ScmConfig, WeibullMixtureBaseline

__all__ = [
    "SmoothSurvival",
    "AccelCurve",
    "Lemma1Contrasts",
    "survival_control",
    "survival_treated",
    "mixture_survival",
    "quantile",
    "causal_theta",
    "causal_eta",
    "reverse_theta",
    "conditional_theta",
    "lemma1_contrasts",
    "mixture_theta",
    "integrate_survival",
    "mean_log_time",
]

#: horizon at which survival-mean integrals are truncated when the tail is
#: (numerically) nonintegrable; reported alongside the divergence flag.
TRUNCATION_HORIZON = 1.0e6


@dataclass
class SmoothSurvival:
    """A smooth survival curve ``t -> S(t)`` with ``S(0) = 1``.

    Parameters
    ----------
    fn : callable
        Vectorized map from nonnegative times to survival probabilities.
    t_hi : float
        Characteristic time scale; seeds quantile bracketing and sets the
        absolute root tolerance (documented bound ``1e-10 * t_hi``).
    label : str
        Free-form description used in error messages.
    """

    fn: callable
    t_hi: float
    label: str = ""

    def __call__(self, t):
        out = self.fn(np.asarray(t, dtype=float))
        return float(out) if np.ndim(out) == 0 else out

    def quantile(self, p):
        """Supremum-inverse ``sup{t : S(t) >= p}`` for scalar ``p`` in (0, 1]."""
        if not 0.0 < p <= 1.0:
            raise ValueError(f"quantile level must lie in (0, 1], got {p}")
        if p == 1.0:
            return 0.0
        hi = self.t_hi
        for _ in range(300):
            if self(hi) < p:
                break
            hi *= 2.0
        else:
            raise ValueError(
                f"survival {self.label!r} never drops below {p} within the numeric range"
            )
        return brentq(
            lambda t: self(t) - p, 0.0, hi, xtol=1e-13 * max(hi, self.t_hi)
        )

    def quantile_grid(self, ps):
        return np.array([self.quantile(p) for p in np.asarray(ps, dtype=float)])


_AXES = ("time", "treated-cdf")
_PROVENANCES = ("oracle", "estimated", "adjusted")


@dataclass
class AccelCurve:
    """An acceleration curve: positive values over a strictly increasing axis.

    ``grid`` holds times (``axis="time"``) or treated-arm CDF levels
    (``axis="treated-cdf"``).  ``value`` is NaN wherever the curve is not
    identified from the inputs.  ``lo``/``hi`` carry an optional pointwise
    95% band, and ``treated_cdf`` the companion CDF axis for time-axis curves.
    """

    grid: np.ndarray
    value: np.ndarray
    axis: str = "time"
    provenance: str = "oracle"
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None
    treated_cdf: np.ndarray | None = None

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.value = np.asarray(self.value, dtype=float)
        if self.axis not in _AXES:
            raise ValueError(f"axis must be one of {_AXES}, got {self.axis!r}")
        if self.provenance not in _PROVENANCES:
            raise ValueError(
                f"provenance must be one of {_PROVENANCES}, got {self.provenance!r}"
            )
        if self.grid.shape != self.value.shape or self.grid.ndim != 1:
            raise ValueError("grid and value must be 1-d arrays of equal length")
        if len(self.grid) > 1 and not np.all(np.diff(self.grid) > 0):
            raise ValueError("grid must be strictly increasing")
        finite = np.isfinite(self.value)
        if np.any(self.value[finite] <= 0):
            raise ValueError("acceleration values must be positive where defined")
        for name in ("lo", "hi", "treated_cdf"):
            band = getattr(self, name)
            if band is not None:
                band = np.asarray(band, dtype=float)
                if band.shape != self.grid.shape:
                    raise ValueError(f"{name} must match the grid shape")
                setattr(self, name, band)

    @property
    def identified(self):
        return np.isfinite(self.value)


def _as_components(components):
    pairs = [(float(w), float(f)) for w, f in components]
    if any(w < 0 for w, _ in pairs) or abs(sum(w for w, _ in pairs) - 1.0) > 1e-9:
        raise ValueError("component weights must be nonnegative and sum to 1")
    if any(f <= 0 for _, f in pairs):
        raise ValueError("time-scale factors must be positive")
    return pairs


def mixture_survival(s0, components):
    """Survival of a time-scale mixture ``S(t) = sum_k w_k * S0(f_k * t)``.

    Parameters
    ----------
    s0 : SmoothSurvival
    components : iterable of (weight, factor)
        Mixture weights (summing to 1) and positive time-scale factors.
    """
    pairs = _as_components(components)
    weights = np.array([w for w, _ in pairs])
    factors = np.array([f for _, f in pairs])
    base = s0.fn

    def fn(t):
        t = np.asarray(t, dtype=float)
        scaled = t.reshape(t.shape + (1,)) * factors
        return np.sum(base(scaled) * weights, axis=-1)

    label = f"mixture of {len(pairs)} scaled copies of {s0.label or 'S0'}"
    return SmoothSurvival(fn, s0.t_hi / factors.min(), label)


def survival_control(config):
    """Marginal survival of the untreated event time under ``config``."""
    baseline = config.baseline
    if isinstance(baseline, WeibullMixtureBaseline):
        lam = np.asarray(baseline.scale_law.values) / baseline.mean_factor
        probs = np.asarray(baseline.scale_law.probs)
        shape = baseline.shape

        def fn(t):
            t = np.asarray(t, dtype=float)
            scaled = t.reshape(t.shape + (1,)) / lam
            # inf**shape overflows harmlessly: exp(-inf) is the correct 0
            with np.errstate(over="ignore"):
                return np.sum(probs * np.exp(-(scaled**shape)), axis=-1)

        return SmoothSurvival(fn, lam.max(), "control (Weibull mixture)")

    frailty = config.frailty
    sigma, kappa = baseline.sigma, baseline.kappa

    def fn(t):
        t = np.asarray(t, dtype=float)
        # the power may overflow to inf for the huge abscissae of
        # infinite-interval quadrature; every frailty transform maps inf to 0
        with np.errstate(over="ignore"):
            return frailty.laplace(kappa * np.maximum(t, 0.0) ** (1.0 / sigma))

    return SmoothSurvival(fn, baseline.time_scale, "control")


def _gamma_effect_mixture(s0, effect, n_nodes=400, tail_mass=1e-12):
    """Treated survival for a Gamma effect law by Gauss-Legendre on the log axis."""
    log_lo = math.log(effect.ppf(tail_mass))
    log_hi = math.log(effect.ppf(1.0 - tail_mass))

    def build(nodes):
        x, w = np.polynomial.legendre.leggauss(nodes)
        v = 0.5 * (x + 1.0) * (log_hi - log_lo) + log_lo
        u = np.exp(v)
        mass = w * 0.5 * (log_hi - log_lo) * stats.gamma.pdf(
            u, a=effect.shape, scale=effect.scale
        ) * u
        return u, mass / mass.sum()

    base = s0.fn

    def make_fn(u, mass):
        def fn(t):
            t = np.asarray(t, dtype=float)
            scaled = t.reshape(t.shape + (1,)) * u
            return np.sum(base(scaled) * mass, axis=-1)

        return fn

    coarse = make_fn(*build(n_nodes // 2))
    u, mass = build(n_nodes)
    fine = make_fn(u, mass)
    probe = np.geomspace(1e-2 * s0.t_hi, 1e2 * s0.t_hi, 30)
    gap = np.max(np.abs(fine(probe) - coarse(probe)))
    if gap > 1e-6:
        raise ArithmeticError(
            f"effect-law quadrature has not converged (refinement gap {gap:.2e})"
        )
    t_hi = s0.t_hi / min(1.0, effect.mean_value)
    return SmoothSurvival(fine, t_hi, "treated (Gamma effect)")


def survival_treated(config):
    """Marginal survival of the treated event time ``Ta = T0 / U1``."""
    s0 = survival_control(config)
    effect = config.effect
    if isinstance(effect, Degenerate):
        s1 = mixture_survival(s0, [(1.0, effect.value)])
    elif isinstance(effect, BHN):
        values, probs = effect.atoms
        s1 = mixture_survival(s0, list(zip(probs, values)))
    elif isinstance(effect, GammaEffect):
        s1 = _gamma_effect_mixture(s0, effect)
    else:  # pragma: no cover - ScmConfig already rejects other laws
        raise TypeError(f"unsupported effect law {effect!r}")
    s1.label = "treated"
    return s1


def quantile(surv, p):
    """Supremum-quantile ``sup{t : S(t) >= p}`` of any survival object."""
    return surv.quantile(p)


def _theta_from_survivals(s0, s1, grid, axis, provenance="oracle"):
    if axis == "time":
        grid = np.asarray(grid, dtype=float)
        if np.any(grid <= 0):
            raise ValueError("time grid must be positive")
        levels = s1(grid)
        value = s0.quantile_grid(levels) / grid
        return AccelCurve(grid, value, axis="time", provenance=provenance,
                          treated_cdf=1.0 - levels)
    if axis == "treated-cdf":
        cdf = np.asarray(grid, dtype=float)
        if np.any((cdf <= 0) | (cdf >= 1)):
            raise ValueError("treated-cdf grid must lie in (0, 1)")
        levels = 1.0 - cdf
        t1 = s1.quantile_grid(levels)
        value = s0.quantile_grid(levels) / t1
        return AccelCurve(cdf, value, axis="treated-cdf", provenance=provenance)
    raise ValueError(f"axis must be one of {_AXES}, got {axis!r}")


def default_cdf_grid(step=0.01):
    """Treated-CDF levels 0.01 .. 0.99 used by the built-in scenarios."""
    return np.round(np.arange(step, 1.0, step), 10)


def causal_theta(config, grid=None, axis="time"):
    """Population acceleration curve ``theta(t) = S0^{-1}(S1(t)) / t``.

    Parameters
    ----------
    config : ScmConfig
    grid : array_like, optional
        Times (``axis="time"``) or treated-CDF levels in (0,1)
        (``axis="treated-cdf"``).  Defaults to times covering treated-CDF
        levels 0.01 .. 0.99, or the level grid itself.
    axis : str
        Output axis; time-axis curves carry the companion treated-CDF axis.
    """
    s0, s1 = survival_control(config), survival_treated(config)
    if grid is None:
        if axis == "time":
            grid = s1.quantile_grid(1.0 - default_cdf_grid())
        else:
            grid = default_cdf_grid()
    return _theta_from_survivals(s0, s1, grid, axis)


def causal_eta(config, grid):
    """Local acceleration rate ``eta(t) = d/dt S0^{-1}(S1(t))``.

    Computed by central differences with one Richardson refinement at step
    ``h = max(1e-4 * t, 1e-6)``; for homogeneous effects it coincides with
    ``theta`` identically.
    """
    s0, s1 = survival_control(config), survival_treated(config)
    grid = np.asarray(grid, dtype=float)
    if np.any(grid <= 0):
        raise ValueError("time grid must be positive")

    def g(t):
        return s0.quantile(s1(t))

    out = np.empty_like(grid)
    for i, t in enumerate(grid):
        h = min(max(1e-4 * t, 1e-6), 0.5 * t)
        d_full = (g(t + h) - g(t - h)) / (2.0 * h)
        d_half = (g(t + h / 2.0) - g(t - h / 2.0)) / h
        out[i] = (4.0 * d_half - d_full) / 3.0
    return AccelCurve(grid, out, axis="time", provenance="oracle")


def reverse_theta(config, grid):
    """Reverse-time acceleration ``S1^{-1}(S0(s)) / s`` on a control-time grid."""
    s0, s1 = survival_control(config), survival_treated(config)
    grid = np.asarray(grid, dtype=float)
    if np.any(grid <= 0):
        raise ValueError("time grid must be positive")
    value = s1.quantile_grid(s0(grid)) / grid
    return AccelCurve(grid, value, axis="time", provenance="oracle")


def conditional_theta(config, u1, a=1):
    """Subject-level time-scale multiplier given the latent effect ``U1 = u1``.

    Under the constant-rate convention the treated clock runs ``u1`` times
    faster, so the conditional acceleration is ``u1`` itself on the treated
    arm and 1 on the control arm, for every ``config``.
    """
    u1 = np.asarray(u1, dtype=float)
    if np.any(u1 <= 0):
        raise ValueError("u1 must be positive")
    if a not in (0, 1):
        raise ValueError(f"arm must be 0 or 1, got {a}")
    out = u1 if a == 1 else np.ones_like(u1)
    return float(out) if out.ndim == 0 else out


def integrate_survival(s, horizon=TRUNCATION_HORIZON):
    """``integral of S`` (the mean event time), with a divergence flag.

    Integrates in decade panels up to ``horizon`` and closes with a local
    power-law tail estimate; a fitted tail exponent at or below 1 marks the
    mean as divergent and the truncated value is returned with the flag.

    Returns
    -------
    (float, bool)
        Value (possibly truncated at ``horizon``) and divergence flag.
    """
    total = quad(s, 0.0, s.t_hi, limit=200)[0]
    lo = s.t_hi
    while lo < horizon:
        hi = min(lo * 10.0, horizon)
        total += quad(s, lo, hi, limit=200)[0]
        lo = hi
    s_h, s_h10 = s(horizon), s(horizon / 10.0)
    if s_h <= 0.0 or s_h10 <= s_h:
        return total, False
    alpha = math.log(s_h10 / s_h) / math.log(10.0)
    if alpha <= 1.001:
        return total, True
    return total + s_h * horizon / (alpha - 1.0), False


def mean_log_time(s):
    """``E[log T]`` for an event time with survival ``s``, by quadrature."""
    # clamp the exponent: the improper-integral transform probes huge |u|
    # where the integrand has long vanished, and exp would overflow
    upper = quad(lambda u: s(np.exp(min(u, 700.0))), 0.0, np.inf, limit=400)[0]
    lower = quad(lambda u: 1.0 - s(np.exp(u)), -np.inf, 0.0, limit=400)[0]
    return upper - lower


@dataclass(frozen=True)
class Lemma1Contrasts:
    """Mean and log-mean contrasts of the two potential event times.

    ``log_diff`` is ``E[log Ta] - E[log T0]`` and ``mean_ratio`` is
    ``E[Ta] / E[T0]``.  When either mean fails to exist the ratio of
    integrals truncated at ``horizon`` is reported and flagged.
    """

    log_diff: float
    mean_ratio: float
    mean_diverged: bool
    horizon: float | None = None


def lemma1_contrasts(config):
    """Exact contrasts between treated and untreated potential event times.

    All four integrals are taken over the oracle survivals.  For a
    homogeneous effect ``Degenerate(v)`` the results are ``-log v`` and
    ``1/v`` up to quadrature error; heterogeneous Gamma effects with shape at
    most 1 have ``E[1/U1] = inf`` and come back flagged as divergent.
    """
    s0, s1 = survival_control(config), survival_treated(config)
    log_diff = mean_log_time(s1) - mean_log_time(s0)
    m0, div0 = integrate_survival(s0)
    m1, div1 = integrate_survival(s1)
    diverged = div0 or div1
    return Lemma1Contrasts(
        log_diff=log_diff,
        mean_ratio=m1 / m0,
        mean_diverged=diverged,
        horizon=TRUNCATION_HORIZON if diverged else None,
    )


def mixture_theta(s0, components, grid=None):
    """Acceleration curve when treatment mixes time-scaled copies of ``s0``.

    ``components`` lists (weight, factor) pairs; the resulting curve is
    bounded between the smallest and largest factor and crosses their range
    monotonically as the mixture's fast component exhausts.
    """
    s1 = mixture_survival(s0, components)
    if grid is None:
        grid = s1.quantile_grid(1.0 - default_cdf_grid())
    return _theta_from_survivals(s0, s1, grid, axis="time")
