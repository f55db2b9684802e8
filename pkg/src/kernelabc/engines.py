"""Inference engines: rejection ABC, soft-weighted ABC, and ABC-SMC.

All engines are deterministic for a fixed seed and independent of the worker
count: every simulation attempt gets its own counter-derived RNG stream and
results are merged in attempt order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import ndtr

from .distances import DistanceSpec, summary_distance

__all__ = [
    "ParamSupport",
    "ModelSpec",
    "WeightedPosterior",
    "SmcSchedule",
    "GenerationBudgetError",
    "substream",
    "simulation_stream",
    "smc_stream",
    "abc_rejection",
    "abc_weighted",
    "abc_smc",
    "perturb",
    "posterior_mean",
]


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent RNG stream derived from a master seed and an integer key."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


def simulation_stream(seed: int, index: int) -> np.random.Generator:
    """Stream used for the index-th simulation of a flat (non-SMC) run."""
    return substream(seed, 0, index)


def smc_stream(seed: int, generation: int, attempt: int) -> np.random.Generator:
    """Stream used for one proposal attempt of one SMC generation (0-based)."""
    return substream(seed, 1, generation, attempt)


def _map_indexed(task: Callable[[int], object], n: int, n_threads: int) -> list:
    if n_threads <= 1:
        return [task(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=n_threads) as pool:
        return list(pool.map(task, range(n)))


@dataclass(frozen=True)
class ParamSupport:
    """How the perturbation kernel keeps parameters in their support."""

    simplex: bool = False
    integer_components: tuple[int, ...] = ()


@dataclass(frozen=True)
class ModelSpec:
    """Prior, simulator, and optional summary function of a generative model.

    `simulate(theta, n, rng)` must return exactly n observations (or a
    length-n series for time-series models).  `validate`, when given, marks
    degenerate simulator output; such datasets count as infinitely distant.
    """

    prior_sample: Callable[[np.random.Generator], np.ndarray]
    prior_density: Callable[[np.ndarray], float]
    simulate: Callable[[np.ndarray, int, np.random.Generator], np.ndarray]
    theta_dim: int
    summary: Optional[Callable[[np.ndarray], np.ndarray]] = None
    support: ParamSupport = ParamSupport()
    validate: Optional[Callable[[np.ndarray], bool]] = None


@dataclass
class WeightedPosterior:
    """Parameter draws with normalized weights plus run diagnostics."""

    particles: np.ndarray
    weights: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.particles = np.atleast_2d(np.asarray(self.particles, dtype=np.float64))
        self.weights = np.atleast_1d(np.asarray(self.weights, dtype=np.float64))
        if self.particles.shape[0] != self.weights.shape[0]:
            raise ValueError("particles and weights differ in length")
        if self.weights.size:
            if np.any(self.weights < 0):
                raise ValueError("weights must be nonnegative")
            if abs(self.weights.sum() - 1.0) > 1e-9:
                raise ValueError("weights must sum to 1")

    def __len__(self) -> int:
        return self.weights.shape[0]


def posterior_mean(posterior: WeightedPosterior) -> np.ndarray:
    """Weighted average of the particles."""
    if len(posterior) == 0:
        raise ValueError("posterior is empty")
    return posterior.weights @ posterior.particles


@dataclass(frozen=True)
class SmcSchedule:
    """Strictly decreasing acceptance thresholds plus population settings."""

    thresholds: tuple
    n_particles: int = 1000
    perturb_variance: float = 1e-4

    def __post_init__(self):
        thresholds = tuple(float(t) for t in self.thresholds)
        object.__setattr__(self, "thresholds", thresholds)
        if not thresholds or any(t <= 0 for t in thresholds):
            raise ValueError("thresholds must be positive")
        if any(a <= b for a, b in zip(thresholds, thresholds[1:])):
            raise ValueError("thresholds must be strictly decreasing")
        if self.n_particles < 2:
            raise ValueError("need at least 2 particles")
        if self.perturb_variance <= 0:
            raise ValueError("perturbation variance must be positive")


class GenerationBudgetError(RuntimeError):
    """An SMC generation exhausted its proposal budget below the threshold."""

    def __init__(self, generation: int, diagnostics: dict):
        super().__init__(
            f"generation {generation + 1} exhausted its simulation budget "
            f"({diagnostics['generations'][-1]['n_attempts']} attempts, "
            f"{diagnostics['generations'][-1]['n_accepted']} accepted)"
        )
        self.generation = generation
        self.diagnostics = diagnostics


# rank anchoring the default soft-weight scale (see _soft_scale)
SOFT_SCALE_RANK = 10


def _soft_scale(finite_gammas: np.ndarray) -> float:
    """Default soft-weight scale: the distance level of the ~10 best simulations.

    Anchoring epsilon at a fixed rank rather than a fixed fraction keeps the
    effective comparison set stable as the simulation budget changes, and
    tracks the sampling-noise floor of the distance instead of its bulk.
    """
    if finite_gammas.size == 0:
        return 0.0
    q = min(1.0, SOFT_SCALE_RANK / finite_gammas.size)
    eps = float(np.quantile(finite_gammas, q))
    if eps <= 0.0:
        positive = finite_gammas[finite_gammas > 0]
        eps = float(positive.min()) if positive.size else 0.0
    return eps


def perturb(theta, variance: float, support: ParamSupport,
            rng: np.random.Generator) -> np.ndarray:
    """Isotropic Gaussian move, projected back into the parameter support.

    Simplex parameters are clipped at 0 and renormalized; integer components
    are rounded to the nearest nonnegative integer.
    """
    if variance <= 0:
        raise ValueError("perturbation variance must be positive")
    theta = np.asarray(theta, dtype=np.float64)
    sd = math.sqrt(variance)
    if support.simplex:
        for _ in range(100):
            proposal = np.clip(theta + rng.normal(0.0, sd, theta.shape), 0.0, None)
            total = proposal.sum()
            if total > 0:
                return proposal / total
        return np.full_like(theta, 1.0 / theta.size)
    proposal = theta + rng.normal(0.0, sd, theta.shape)
    for idx in support.integer_components:
        proposal[idx] = max(0.0, np.rint(proposal[idx]))
    return proposal


def _perturb_densities(theta, particles, variance: float,
                       support: ParamSupport) -> np.ndarray:
    """Perturbation-kernel density of `theta` given each row of `particles`.

    Continuous components use the Gaussian density of the raw difference;
    integer components use the mass the rounded Gaussian puts on the step.
    """
    sd = math.sqrt(variance)
    diffs = np.asarray(theta, dtype=np.float64)[None, :] - particles
    integer = set(support.integer_components)
    density = np.ones(particles.shape[0])
    for j in range(particles.shape[1]):
        d = diffs[:, j]
        if j in integer:
            density *= ndtr((d + 0.5) / sd) - ndtr((d - 0.5) / sd)
        else:
            density *= np.exp(-0.5 * (d / sd) ** 2) / (sd * math.sqrt(2.0 * math.pi))
    return density


def _simulated_distance(observed, model: ModelSpec, distance: DistanceSpec,
                        s_obs) -> Callable:
    """Build the dataset -> distance map, treating invalid output as infinite."""

    def compute(data) -> float:
        if model.validate is not None and not model.validate(data):
            return math.inf
        if distance.kind == "summary-euclidean":
            value = summary_distance(s_obs, model.summary(data))
        else:
            value = distance.compute(observed, data)
        return value if math.isfinite(value) else math.inf

    return compute


def abc_rejection(observed, model: ModelSpec, epsilon: float, n_sims: int,
                  seed: int, *, epsilon_quantile: float | None = None,
                  n_threads: int = 1) -> WeightedPosterior:
    """Classic rejection ABC on summary statistics.

    Accepts draws whose summary distance is at most `epsilon`; when
    `epsilon_quantile` is given instead, the threshold is that sample
    quantile of the observed distances.  Zero acceptances are reported via
    diagnostics["empty_posterior"] rather than raised.
    """
    if model.summary is None:
        raise ValueError("rejection ABC needs a summary function")
    if n_sims < 1:
        raise ValueError("n_sims must be positive")
    if (epsilon is None) == (epsilon_quantile is None):
        raise ValueError("give exactly one of epsilon / epsilon_quantile")
    if epsilon is not None and epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    if epsilon_quantile is not None and not 0 < epsilon_quantile <= 1:
        raise ValueError("epsilon_quantile must lie in (0, 1]")

    observed = np.asarray(observed, dtype=np.float64)
    n_obs = observed.shape[0]
    s_obs = model.summary(observed)

    def task(i: int):
        rng = simulation_stream(seed, i)
        theta = model.prior_sample(rng)
        data = model.simulate(theta, n_obs, rng)
        if model.validate is not None and not model.validate(data):
            return theta, math.inf
        dist = summary_distance(s_obs, model.summary(data))
        return theta, dist if math.isfinite(dist) else math.inf

    results = _map_indexed(task, n_sims, n_threads)
    thetas = np.array([r[0] for r in results])
    dists = np.array([r[1] for r in results])

    if epsilon is None:
        finite = dists[np.isfinite(dists)]
        epsilon = float(np.quantile(finite, epsilon_quantile)) if finite.size else 0.0
    accepted = dists <= epsilon

    n_acc = int(accepted.sum())
    diagnostics = {
        "n_sims": n_sims,
        "n_accepted": n_acc,
        "acceptance_rate": n_acc / n_sims,
        "epsilon_used": float(epsilon),
        "distances": dists,
        "empty_posterior": n_acc == 0,
    }
    if n_acc == 0:
        return WeightedPosterior(np.empty((0, model.theta_dim)), np.empty(0), diagnostics)
    return WeightedPosterior(thetas[accepted], np.full(n_acc, 1.0 / n_acc), diagnostics)


def abc_weighted(observed, model: ModelSpec, distance: DistanceSpec,
                 n_sims: int, seed: int, *, n_threads: int = 1) -> WeightedPosterior:
    """Soft-weighted ABC: every draw is kept with weight exp(-gamma / epsilon).

    gamma is the unbiased MMD (clamped at 0 before weighting) or the
    Parzen-smoothed distance between observed and simulated data.  A missing
    epsilon defaults to the clamped distance of the ~10th-closest simulation.
    """
    if distance.kind not in ("mmd-unbiased", "parzen"):
        raise ValueError("weighted ABC uses the mmd-unbiased or parzen distance")
    if n_sims < 1:
        raise ValueError("n_sims must be positive")

    observed = np.asarray(observed, dtype=np.float64)
    n_obs = observed.shape[0]
    compute = _simulated_distance(observed, model, distance, None)

    def task(i: int):
        rng = simulation_stream(seed, i)
        theta = model.prior_sample(rng)
        return theta, compute(model.simulate(theta, n_obs, rng))

    results = _map_indexed(task, n_sims, n_threads)
    thetas = np.array([r[0] for r in results])
    gammas = np.array([r[1] for r in results])

    clamped = np.where(np.isfinite(gammas), np.maximum(gammas, 0.0), np.inf)
    finite = clamped[np.isfinite(clamped)]
    epsilon = distance.epsilon
    if epsilon is None:
        epsilon = _soft_scale(finite)

    fallback = False
    if epsilon > 0 and finite.size:
        with np.errstate(over="ignore"):
            raw_weights = np.where(np.isfinite(clamped), np.exp(-clamped / epsilon), 0.0)
    else:
        raw_weights = np.zeros(n_sims)
    total = raw_weights.sum()
    if total <= 0:
        raw_weights = np.ones(n_sims)
        total = float(n_sims)
        fallback = True
    weights = raw_weights / total

    diagnostics = {
        "n_sims": n_sims,
        "gammas": gammas,
        "epsilon_used": float(epsilon),
        "n_invalid": int(np.sum(~np.isfinite(gammas))),
        "ess": float(1.0 / np.sum(weights**2)),
        "weight_fallback": fallback,
    }
    return WeightedPosterior(thetas, weights, diagnostics)


def abc_smc(observed, model: ModelSpec, distance: DistanceSpec,
            schedule: SmcSchedule, seed: int, *, n_threads: int = 1,
            budget_factor: int = 100,
            max_perturb_retries: int = 100) -> WeightedPosterior:
    """Sequential Monte Carlo ABC over a decreasing threshold schedule.

    Generation 1 draws from the prior; each later generation resamples the
    previous weighted population, perturbs, re-simulates, and keeps proposals
    whose distance meets the generation threshold.  Survivor weights follow
    the importance ratio prior(theta) / sum_j w_j K(theta | theta_j).  A
    generation that cannot fill its population within
    `budget_factor * n_particles` attempts raises ``GenerationBudgetError``.
    """
    if distance.kind == "summary-euclidean" and model.summary is None:
        raise ValueError("summary-euclidean SMC needs a summary function")

    observed = np.asarray(observed, dtype=np.float64)
    n_obs = observed.shape[0]
    s_obs = model.summary(observed) if model.summary is not None else None
    compute = _simulated_distance(observed, model, distance, s_obs)

    n_part = schedule.n_particles
    budget = budget_factor * n_part
    variance = schedule.perturb_variance
    particles = weights = None
    diagnostics = {"generations": []}

    for g, eps_t in enumerate(schedule.thresholds):

        def task(attempt: int):
            rng = smc_stream(seed, g, attempt)
            if g == 0:
                theta = model.prior_sample(rng)
            else:
                parent = rng.choice(n_part, p=weights)
                theta = None
                for _ in range(max_perturb_retries):
                    candidate = perturb(particles[parent], variance, model.support, rng)
                    if model.prior_density(candidate) > 0:
                        theta = candidate
                        break
                if theta is None:
                    raise RuntimeError(
                        f"perturbation left the prior support {max_perturb_retries} times in a row"
                    )
            return theta, compute(model.simulate(theta, n_obs, rng))

        accepted_thetas, accepted_dists = [], []
        n_attempts = 0
        while len(accepted_thetas) < n_part and n_attempts < budget:
            chunk = min(n_part, budget - n_attempts)
            base = n_attempts
            for theta, dist in _map_indexed(lambda k: task(base + k), chunk, n_threads):
                if dist <= eps_t and len(accepted_thetas) < n_part:
                    accepted_thetas.append(theta)
                    accepted_dists.append(dist)
            n_attempts += chunk

        gen_diag = {
            "epsilon": eps_t,
            "n_attempts": n_attempts,
            "n_accepted": len(accepted_thetas),
            "acceptance_rate": len(accepted_thetas) / n_attempts,
            "distances": np.array(accepted_dists),
        }
        diagnostics["generations"].append(gen_diag)
        if len(accepted_thetas) < n_part:
            raise GenerationBudgetError(g, diagnostics)

        new_particles = np.array(accepted_thetas)
        if g == 0:
            new_weights = np.full(n_part, 1.0 / n_part)
        else:
            raw = np.empty(n_part)
            for i in range(n_part):
                denom = float(weights @ _perturb_densities(
                    new_particles[i], particles, variance, model.support))
                raw[i] = model.prior_density(new_particles[i]) / denom if denom > 0 else 0.0
            total = raw.sum()
            if total <= 0:
                raw = np.ones(n_part)
                total = float(n_part)
                gen_diag["weight_fallback"] = True
            new_weights = raw / total
        gen_diag["ess"] = float(1.0 / np.sum(new_weights**2))

        particles, weights = new_particles, new_weights

    diagnostics["epsilon_final"] = schedule.thresholds[-1]
    return WeightedPosterior(particles, weights, diagnostics)
