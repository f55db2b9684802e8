"""The two benchmark generative models.

* A 5-component uniform mixture on [0, K] with simplex-valued mixing
  weights and a symmetric Dirichlet prior.
* The noisy delayed blowfly population recursion with log-normal /
  Poisson priors and the 10-value quantile-band summary vector.

Both are exposed as ``ModelSpec`` factories for the inference engines.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .engines import ModelSpec, ParamSupport

__all__ = [
    "TRUE_MIXTURE_WEIGHTS",
    "MixtureParams",
    "BlowflyParams",
    "sample_dirichlet",
    "simulate_uniform_mixture",
    "toy_summaries",
    "uniform_mixture_model",
    "sample_blowfly_prior",
    "blowfly_prior_density",
    "simulate_blowfly",
    "series_is_valid",
    "blowfly_summaries",
    "blowfly_model",
    "synthetic_blowfly_series",
]

# mixing weights the toy experiments condition on
TRUE_MIXTURE_WEIGHTS = np.array([0.25, 0.04, 0.33, 0.04, 0.34])

# populations above this are treated as numerical blow-up
BLOWFLY_OVERFLOW = 1e12

# steps discarded before the reported blowfly window
BLOWFLY_BURN_IN = 50


def _check_simplex(pi) -> np.ndarray:
    pi = np.atleast_1d(np.asarray(pi, dtype=np.float64))
    if pi.ndim != 1 or pi.size < 1 or np.any(pi < 0) or abs(pi.sum() - 1.0) > 1e-9:
        raise ValueError("mixing weights must be nonnegative and sum to 1")
    return pi


@dataclass(frozen=True)
class MixtureParams:
    """Simplex-valued mixing weights of the uniform mixture."""

    pi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "pi", _check_simplex(self.pi))

    @property
    def n_components(self) -> int:
        return self.pi.size


@dataclass(frozen=True)
class BlowflyParams:
    """Parameters of the blowfly recursion, in the order (P, N0, delta, tau, sigma_p, sigma_d)."""

    P: float
    N0: float
    delta: float
    tau: int
    sigma_p: float
    sigma_d: float

    def __post_init__(self):
        if min(self.P, self.N0, self.delta, self.sigma_p, self.sigma_d) <= 0:
            raise ValueError("blowfly parameters must be positive")
        if self.tau < 0 or self.tau != int(self.tau):
            raise ValueError("tau must be a nonnegative integer")
        object.__setattr__(self, "tau", int(self.tau))

    def as_vector(self) -> np.ndarray:
        return np.array([self.P, self.N0, self.delta, float(self.tau),
                         self.sigma_p, self.sigma_d])

    @classmethod
    def from_vector(cls, theta) -> "BlowflyParams":
        p, n0, delta, tau, sigma_p, sigma_d = np.asarray(theta, dtype=np.float64)
        return cls(P=p, N0=n0, delta=delta, tau=int(round(tau)),
                   sigma_p=sigma_p, sigma_d=sigma_d)


def sample_dirichlet(alpha: float, n_components: int, rng: np.random.Generator) -> np.ndarray:
    """One draw from a symmetric Dirichlet on the (n_components-1)-simplex."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if n_components < 1:
        raise ValueError("need at least one component")
    return rng.dirichlet(np.full(n_components, alpha))


def symmetric_dirichlet_density(pi, alpha: float) -> float:
    """Density of the symmetric Dirichlet; 0 off the simplex."""
    pi = np.atleast_1d(np.asarray(pi, dtype=np.float64))
    k = pi.size
    if np.any(pi < 0) or abs(pi.sum() - 1.0) > 1e-9:
        return 0.0
    log_norm = gammaln(k * alpha) - k * gammaln(alpha)
    if alpha == 1.0:
        return float(np.exp(log_norm))
    with np.errstate(divide="ignore"):
        log_terms = (alpha - 1.0) * np.log(pi)
    return float(np.exp(log_norm + log_terms.sum()))


def simulate_uniform_mixture(pi, n: int, rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. draws from sum_k pi_k * Uniform(k-1, k); values lie in [0, K]."""
    pi = _check_simplex(pi)
    if n < 1:
        raise ValueError("n must be positive")
    component = rng.choice(pi.size, size=n, p=pi)
    return component + rng.random(n)


def toy_summaries(samples) -> np.ndarray:
    """(sample mean, sample standard deviation) with the n-1 divisor."""
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size < 2:
        raise ValueError("summaries need at least 2 samples")
    return np.array([x.mean(), x.std(ddof=1)])


def uniform_mixture_model(n_components: int = 5, alpha: float = 1.0) -> ModelSpec:
    """ModelSpec for the uniform mixture with a symmetric Dirichlet prior."""
    return ModelSpec(
        prior_sample=lambda rng: sample_dirichlet(alpha, n_components, rng),
        prior_density=lambda theta: symmetric_dirichlet_density(theta, alpha),
        simulate=lambda theta, n, rng: simulate_uniform_mixture(theta, n, rng),
        summary=toy_summaries,
        theta_dim=n_components,
        support=ParamSupport(simplex=True),
    )


# log-space prior means and variances, plus the Poisson rate for tau
_BLOWFLY_PRIOR = {
    "P": (3.0, 0.2),
    "delta": (-1.5, 0.1),
    "N0": (6.0, 0.2),
    "sigma_d": (-0.1, 0.01),
    "sigma_p": (0.1, 0.01),
}
_TAU_RATE = 6.0


def sample_blowfly_prior(rng: np.random.Generator) -> BlowflyParams:
    """Draw blowfly parameters: log-normal components plus Poisson-distributed tau."""
    draw = {name: float(np.exp(rng.normal(m, np.sqrt(v))))
            for name, (m, v) in _BLOWFLY_PRIOR.items()}
    tau = int(rng.poisson(_TAU_RATE))
    return BlowflyParams(P=draw["P"], N0=draw["N0"], delta=draw["delta"],
                         tau=tau, sigma_p=draw["sigma_p"], sigma_d=draw["sigma_d"])


def blowfly_prior_density(theta) -> float:
    """Joint prior density; 0 outside the support (positives, integer tau >= 0)."""
    vec = np.asarray(theta, dtype=np.float64)
    p, n0, delta, tau, sigma_p, sigma_d = vec
    values = {"P": p, "N0": n0, "delta": delta, "sigma_p": sigma_p, "sigma_d": sigma_d}
    if min(values.values()) <= 0:
        return 0.0
    if tau < 0 or abs(tau - round(tau)) > 1e-9:
        return 0.0
    log_density = 0.0
    for name, (m, v) in _BLOWFLY_PRIOR.items():
        x = values[name]
        log_density += -((np.log(x) - m) ** 2) / (2.0 * v) - np.log(x) - 0.5 * np.log(2.0 * np.pi * v)
    k = int(round(tau))
    log_density += k * np.log(_TAU_RATE) - _TAU_RATE - gammaln(k + 1)
    return float(np.exp(log_density))


def simulate_blowfly(theta, n_steps: int, rng: np.random.Generator,
                     burn_in: int = BLOWFLY_BURN_IN) -> np.ndarray:
    """Simulate the delayed blowfly recursion and return the last `n_steps` values.

    N_{t+1} = P * N_{t-tau} * exp(-N_{t-tau}/N0) * e_t + N_t * exp(-delta * eps_t)
    with mean-one Gamma noise: e_t ~ G(1/sigma_p^2, rate 1/sigma_p^2) and
    eps_t ~ G(1/sigma_d^2, rate 1/sigma_d^2).  The tau+1 history slots start
    at N0 and a burn-in prefix is discarded.  Overflowing trajectories are
    returned as-is; test with ``series_is_valid``.
    """
    params = theta if isinstance(theta, BlowflyParams) else BlowflyParams.from_vector(theta)
    if n_steps < 1:
        raise ValueError("n_steps must be positive")
    total = burn_in + n_steps
    shape_p = 1.0 / params.sigma_p ** 2
    shape_d = 1.0 / params.sigma_d ** 2
    e = rng.gamma(shape_p, 1.0 / shape_p, size=total)
    eps = rng.gamma(shape_d, 1.0 / shape_d, size=total)

    tau = params.tau
    traj = np.empty(tau + 1 + total)
    traj[: tau + 1] = params.N0
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(total):
            lagged = traj[t]
            current = traj[t + tau]
            traj[t + tau + 1] = (params.P * lagged * np.exp(-lagged / params.N0) * e[t]
                                 + current * np.exp(-params.delta * eps[t]))
    return traj[-n_steps:]


def series_is_valid(series) -> bool:
    """False when the trajectory overflowed or went non-finite."""
    values = np.asarray(series, dtype=np.float64)
    return bool(np.all(np.isfinite(values)) and values.max(initial=0.0) <= BLOWFLY_OVERFLOW)


def _rank_bands(sorted_values: np.ndarray) -> list[np.ndarray]:
    # four equal-rank bands; the leading bands take the ceil when n % 4 != 0
    return np.array_split(sorted_values, 4)


def blowfly_summaries(series) -> np.ndarray:
    """10 summary statistics of a population series.

    On the /1000-scaled series: log of the mean of each of the four rank
    quartile bands, mean of each quartile band of the first differences,
    then the maximum and minimum.
    """
    values = np.asarray(series, dtype=np.float64).ravel()
    if values.size < 5:
        raise ValueError("summaries need a series of length >= 5")
    scaled = values / 1000.0
    with np.errstate(divide="ignore"):
        log_band_means = [np.log(band.mean()) for band in _rank_bands(np.sort(scaled))]
    diffs = np.diff(scaled)
    diff_band_means = [band.mean() for band in _rank_bands(np.sort(diffs))]
    return np.array(log_band_means + diff_band_means + [scaled.max(), scaled.min()])


def blowfly_model() -> ModelSpec:
    """ModelSpec for the blowfly recursion; `n` in simulate() is the series length."""
    return ModelSpec(
        prior_sample=lambda rng: sample_blowfly_prior(rng).as_vector(),
        prior_density=blowfly_prior_density,
        simulate=lambda theta, n, rng: simulate_blowfly(theta, n, rng),
        summary=blowfly_summaries,
        theta_dim=6,
        support=ParamSupport(integer_components=(3,)),
        validate=series_is_valid,
    )


# parameters of the shipped synthetic stand-in series (log-space prior medians,
# tau at its prior mean), generated with seed 0 -- NOT the original field data
SYNTHETIC_BLOWFLY_PARAMS = BlowflyParams(
    P=float(np.exp(3.0)), N0=float(np.exp(6.0)), delta=float(np.exp(-1.5)),
    tau=6, sigma_p=float(np.exp(0.1)), sigma_d=float(np.exp(-0.1)),
)
SYNTHETIC_BLOWFLY_SEED = 0
SYNTHETIC_BLOWFLY_LENGTH = 180


def synthetic_blowfly_series() -> np.ndarray:
    """Regenerate the shipped synthetic stand-in series from scratch."""
    rng = np.random.default_rng(SYNTHETIC_BLOWFLY_SEED)
    return simulate_blowfly(SYNTHETIC_BLOWFLY_PARAMS, SYNTHETIC_BLOWFLY_LENGTH, rng)


def packaged_blowfly_path():
    """Path to the synthetic stand-in CSV shipped with the package."""
    return importlib.resources.files("kernelabc.data") / "blowfly_synthetic.csv"
