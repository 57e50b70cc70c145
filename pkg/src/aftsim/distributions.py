"""Random-variate generation and analytic transforms for survival simulations.

Every law used by the cohort generator and the truth oracle lives here as a
small frozen dataclass exposing a common informal protocol:

``sample(rng, size)``
    i.i.d. draws from the law using a ``numpy.random.Generator``.
``ppf(u)``
    monotone quantile map from uniforms in (0,1), used to impose marginals on
    Gaussian-copula coordinates.
``mean`` / ``variance``
    analytic moments (properties).
``laplace(s)``
    ``E[exp(-s X)]`` in closed form, where available.

Effect laws additionally provide ``inverse_moment()`` (``E[1/X]``, possibly
infinite) and ``log_moment()`` (``E[log X]``), which the truth oracle needs for
exact mean/log-mean contrasts of event times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

__all__ = [
    "Degenerate",
    "GammaFrailty",
    "InverseGaussianFrailty",
    "GammaEffect",
    "BHN",
    "WeibullMixtureScale",
    "sample",
    "sample_standard_extreme_value",
    "laplace_transform",
    "gaussian_copula_sample",
]


@dataclass(frozen=True)
class Degenerate:
    """Point mass at ``value`` (no heterogeneity)."""

    value: float = 1.0

    def __post_init__(self):
        if not self.value > 0:
            raise ValueError(f"degenerate value must be positive, got {self.value}")

    mean = property(lambda self: self.value)
    variance = property(lambda self: 0.0)

    def sample(self, rng, size=None):
        return self.value if size is None else np.full(size, self.value)

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        if np.any((u <= 0) | (u >= 1)):
            raise ValueError("ppf argument must lie in (0, 1)")
        return np.full_like(u, self.value)

    def laplace(self, s):
        return np.exp(-self.value * np.asarray(s, dtype=float))

    def inverse_moment(self):
        return 1.0 / self.value

    def log_moment(self):
        return math.log(self.value)


@dataclass(frozen=True)
class GammaFrailty:
    """Gamma frailty with mean 1 and variance ``variance``.

    Parameterized as ``Gamma(shape=1/variance, scale=variance)`` so that the
    mean is exactly 1.  The Laplace transform is ``(1 + variance*s)^(-1/variance)``.
    """

    variance: float

    def __post_init__(self):
        if not self.variance > 0:
            raise ValueError(
                "gamma frailty variance must be positive; "
                "use Degenerate(1.0) for the zero-variance law"
            )

    shape = property(lambda self: 1.0 / self.variance)
    scale = property(lambda self: self.variance)
    mean = property(lambda self: 1.0)

    def sample(self, rng, size=None):
        return rng.gamma(self.shape, self.scale, size)

    def ppf(self, u):
        return stats.gamma.ppf(u, a=self.shape, scale=self.scale)

    def laplace(self, s):
        s = np.asarray(s, dtype=float)
        return (1.0 + self.variance * s) ** (-1.0 / self.variance)


@dataclass(frozen=True)
class InverseGaussianFrailty:
    """Inverse-Gaussian frailty with mean 1 and variance ``variance``.

    This is IG(mean=1, shape=1/variance); the variance of IG(m, l) is m^3/l.
    Sampling uses ``Generator.wald``, which implements the standard
    transformation method; distributional correctness is covered by tests
    rather than re-deriving the transformation here.
    """

    variance: float

    def __post_init__(self):
        if not self.variance > 0:
            raise ValueError(
                "inverse-Gaussian frailty variance must be positive; "
                "use Degenerate(1.0) for the zero-variance law"
            )

    ig_shape = property(lambda self: 1.0 / self.variance)
    mean = property(lambda self: 1.0)

    def sample(self, rng, size=None):
        return rng.wald(1.0, self.ig_shape, size)

    def ppf(self, u):
        # scipy's invgauss(mu, scale) is IG(mean=mu*scale, shape=scale).
        return stats.invgauss.ppf(u, mu=self.variance, scale=self.ig_shape)

    def laplace(self, s):
        s = np.asarray(s, dtype=float)
        return np.exp(self.ig_shape * (1.0 - np.sqrt(1.0 + 2.0 * self.variance * s)))


@dataclass(frozen=True)
class GammaEffect:
    """Gamma-distributed multiplicative effect with given mean and variance.

    Parameterized as ``Gamma(shape=mean^2/variance, scale=variance/mean)``.
    ``E[1/X]`` is finite only for shape > 1, which drives the divergence flags
    of the mean-contrast oracle.
    """

    mean_value: float
    variance: float

    def __post_init__(self):
        if not self.mean_value > 0:
            raise ValueError(f"gamma effect mean must be positive, got {self.mean_value}")
        if not self.variance > 0:
            raise ValueError(
                "gamma effect variance must be positive; "
                "use Degenerate for the homogeneous law"
            )

    shape = property(lambda self: self.mean_value**2 / self.variance)
    scale = property(lambda self: self.variance / self.mean_value)
    mean = property(lambda self: self.mean_value)

    def sample(self, rng, size=None):
        return rng.gamma(self.shape, self.scale, size)

    def ppf(self, u):
        return stats.gamma.ppf(u, a=self.shape, scale=self.scale)

    def laplace(self, s):
        s = np.asarray(s, dtype=float)
        return (1.0 + self.scale * s) ** (-self.shape)

    def inverse_moment(self):
        if self.shape <= 1.0:
            return math.inf
        return 1.0 / (self.scale * (self.shape - 1.0))

    def log_moment(self):
        return special.digamma(self.shape) + math.log(self.scale)


@dataclass(frozen=True)
class BHN:
    """Benefit-harm-neutral three-atom law on {mu1, 1, mu2}.

    ``mu1 < 1`` (benefit) carries probability ``p1``, ``mu2 > 1`` (harm)
    carries ``p2``, and the neutral atom 1 the remaining mass.  If
    ``target_mean`` is given, the atom mean ``p1*mu1 + p2*mu2 + (1-p1-p2)``
    must match it within a small tolerance; published parameterizations are
    rounded and can miss the nominal mean by a little over 0.02, so the
    tolerance is 0.025.
    """

    p1: float
    mu1: float
    p2: float
    mu2: float
    target_mean: float | None = None

    MEAN_TOL = 0.025

    def __post_init__(self):
        if self.p1 < 0 or self.p2 < 0 or self.p1 + self.p2 > 1:
            raise ValueError(
                f"atom probabilities must satisfy p1, p2 >= 0 and p1+p2 <= 1, "
                f"got p1={self.p1}, p2={self.p2}"
            )
        if not self.mu1 < 1 < self.mu2:
            raise ValueError(
                f"atoms must satisfy mu1 < 1 < mu2, got mu1={self.mu1}, mu2={self.mu2}"
            )
        if self.target_mean is not None and abs(self.mean - self.target_mean) > self.MEAN_TOL:
            raise ValueError(
                f"atom mean {self.mean:.4f} is farther than {self.MEAN_TOL} "
                f"from target {self.target_mean:.4f}"
            )

    p_neutral = property(lambda self: 1.0 - self.p1 - self.p2)

    @property
    def atoms(self):
        """Atoms in ascending order with their probabilities."""
        return (self.mu1, 1.0, self.mu2), (self.p1, self.p_neutral, self.p2)

    @property
    def mean(self):
        return self.p1 * self.mu1 + self.p2 * self.mu2 + self.p_neutral

    @property
    def variance(self):
        second = self.p1 * self.mu1**2 + self.p2 * self.mu2**2 + self.p_neutral
        return second - self.mean**2

    def sample(self, rng, size=None):
        return self.ppf(rng.random(size))

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        values, probs = self.atoms
        edges = np.cumsum(probs)
        idx = np.searchsorted(edges[:-1], u, side="right")
        return np.asarray(values, dtype=float)[idx]

    def laplace(self, s):
        s = np.asarray(s, dtype=float)[..., np.newaxis]
        values, probs = self.atoms
        return np.sum(np.asarray(probs) * np.exp(-s * np.asarray(values)), axis=-1)

    def inverse_moment(self):
        values, probs = self.atoms
        return sum(p / v for p, v in zip(probs, values))

    def log_moment(self):
        values, probs = self.atoms
        return sum(p * math.log(v) for p, v in zip(probs, values))


@dataclass(frozen=True)
class WeibullMixtureScale:
    """Discrete law for the scale variate of a two-component Weibull baseline.

    Handled as an explicit mixture by the oracle; it deliberately has no
    Laplace transform (it never plays the hazard-multiplier role).
    """

    values: tuple[float, ...] = (1.0, 10.0)
    probs: tuple[float, ...] = (0.5, 0.5)

    def __post_init__(self):
        if len(self.values) != len(self.probs):
            raise ValueError("values and probs must have equal length")
        if any(v <= 0 for v in self.values):
            raise ValueError("scale atoms must be positive")
        if any(p < 0 for p in self.probs) or abs(sum(self.probs) - 1.0) > 1e-12:
            raise ValueError("probs must be a probability vector")

    @property
    def mean(self):
        return sum(p * v for p, v in zip(self.probs, self.values))

    @property
    def variance(self):
        second = sum(p * v**2 for p, v in zip(self.probs, self.values))
        return second - self.mean**2

    def sample(self, rng, size=None):
        return self.ppf(rng.random(size))

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        edges = np.cumsum(self.probs)
        idx = np.searchsorted(edges[:-1], u, side="right")
        return np.asarray(self.values, dtype=float)[idx]

    def laplace(self, s):
        raise ValueError(
            "the Weibull-mixture scale law is handled as an explicit mixture, "
            "not through a Laplace transform"
        )


def sample(law, rng, size=None):
    """Draw from any supported law.

    Parameters
    ----------
    law : distribution object
        One of the dataclasses in this module.
    rng : numpy.random.Generator
        Source of randomness; two calls with generators seeded identically
        produce identical sequences.
    size : int or tuple, optional
        Output shape; ``None`` gives a scalar draw.
    """
    try:
        return law.sample(rng, size)
    except AttributeError as err:
        raise TypeError(f"{law!r} is not a supported law") from err


def sample_standard_extreme_value(rng, size=None):
    """Draw minimum-type standard Gumbel variates W with exp(W) ~ Exp(1).

    The orientation is fixed so that a log-linear event-time model
    ``log T = a + sigma*W`` has Weibull survival ``exp(-(t/e^a)^(1/sigma))``;
    the median of W is ``log(log 2)``.
    """
    return np.log(rng.exponential(1.0, size))


def laplace_transform(law, s):
    """Evaluate ``E[exp(-s X)]`` for a law with a closed-form transform.

    Parameters
    ----------
    law : distribution object
    s : float or array_like
        Nonnegative argument(s).

    Raises
    ------
    ValueError
        If ``s`` is negative or the law has no closed-form transform.
    """
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("laplace_transform requires s >= 0")
    try:
        out = law.laplace(s)
    except AttributeError as err:
        raise ValueError(f"{law!r} has no Laplace transform") from err
    return out if out.ndim else float(out)


def gaussian_copula_sample(kendall_taus, rng, size):
    """Sample (u_l, u_0, u_1) from a Gaussian copula with uniform marginals.

    The first coordinate is correlated with each of the other two; those two
    are kept independent of each other.  Kendall's tau for a bivariate
    Gaussian copula with correlation rho is ``(2/pi)*arcsin(rho)``, so the
    requested taus are mapped through ``rho = sin(pi*tau/2)``.

    Parameters
    ----------
    kendall_taus : (float, float)
        Kendall's tau between the first coordinate and coordinates 2 and 3.
    rng : numpy.random.Generator
    size : int
        Number of triples.

    Returns
    -------
    (ndarray, ndarray, ndarray)
        Three arrays of length ``size`` with Uniform(0,1) marginals.
    """
    tau0, tau1 = kendall_taus
    if not (abs(tau0) < 1 and abs(tau1) < 1):
        raise ValueError(f"|tau| must be < 1, got {kendall_taus}")
    rho0 = math.sin(math.pi * tau0 / 2.0)
    rho1 = math.sin(math.pi * tau1 / 2.0)
    corr = np.array(
        [
            [1.0, rho0, rho1],
            [rho0, 1.0, 0.0],
            [rho1, 0.0, 1.0],
        ]
    )
    # positive definite iff rho0^2 + rho1^2 < 1
    if rho0**2 + rho1**2 >= 1.0:
        raise ValueError(
            f"implied correlation matrix is not positive definite for taus {kendall_taus}"
        )
    chol = np.linalg.cholesky(corr)
    z = chol @ rng.standard_normal((3, size))
    u = special.ndtr(z)
    return u[0], u[1], u[2]
