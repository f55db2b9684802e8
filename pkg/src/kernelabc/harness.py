"""Configuration, dataset I/O, and experiment execution.

Ties the library into reproducible runs: a flat key-value config format
with CLI overrides, dispatch to the right engine/model pair, and report
persistence (JSON report plus particle and metric CSVs whose floats are
written with 17 significant digits).
"""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, models
from ._backend import BACKEND
from .engines import SmcSchedule, WeightedPosterior, posterior_mean, substream
from .evaluation import (
    _DOMAIN_OBSERVED,
    _DOMAIN_REGEN,
    cross_correlation,
    rmse,
    run_method,
    weighted_percentiles,
)
from .kernels import KernelConfig, select_bandwidth_mise

__all__ = [
    "ExperimentConfig",
    "ExperimentReport",
    "ConfigError",
    "load_config",
    "run_experiment",
    "load_series_csv",
    "write_report",
    "load_report",
]

EXPERIMENTS = ("toy", "blowfly")
SMC_METHODS = ("abc-smc", "k2abc-smc", "pabc-smc")

REPORT_PERCENTILES = (5.0, 25.0, 50.0, 75.0, 95.0)


class ConfigError(ValueError):
    """Invalid experiment configuration or config file."""


@dataclass
class ExperimentConfig:
    """Everything one experiment run (or sweep / rho protocol) depends on."""

    experiment: str = "toy"
    method: str = "pabc"
    seed: int | None = None
    n_observations: int = 400
    n_sims: int = 1000
    epsilon: float | None = None
    epsilon_quantile: float | None = None
    epsilon_schedule: tuple | None = None
    n_particles: int = 1000
    perturb_variance: float = 1e-4
    data_path: str | None = None
    output_path: str = "out"
    n_threads: int = 1
    # sweep / rho-protocol settings
    methods: tuple = ("abc", "k2abc", "pabc")
    sweep_start: int = 40
    sweep_stop: int = 400
    sweep_step: int = 5
    n_draws: int = 100
    top_k: int = 50

    def validate(self, command: str = "run") -> None:
        from .evaluation import METHODS

        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.seed is None:
            raise ConfigError("a seed is required")
        methods = (self.method,) if command in ("run", "rho") else self.methods
        for method in methods:
            if method not in METHODS:
                raise ConfigError(f"unknown method {method!r}")
        needs_schedule = any(m in SMC_METHODS for m in methods)
        if needs_schedule and self.epsilon_schedule is None:
            raise ConfigError("SMC methods need epsilon_schedule")
        if command == "run" and not needs_schedule and self.epsilon_schedule is not None:
            raise ConfigError(f"method {self.method!r} does not take epsilon_schedule")
        if self.n_observations < 1 or self.n_sims < 1:
            raise ConfigError("n_observations and n_sims must be positive")
        if self.data_path is not None and self.experiment != "blowfly":
            raise ConfigError("data_path only applies to the blowfly experiment")

    def schedule(self) -> SmcSchedule | None:
        if self.epsilon_schedule is None:
            return None
        return SmcSchedule(thresholds=self.epsilon_schedule,
                           n_particles=self.n_particles,
                           perturb_variance=self.perturb_variance)


_FIELD_TYPES = {f.name: f for f in dataclasses.fields(ExperimentConfig)}

_TUPLE_FIELDS = {"epsilon_schedule": float, "methods": str}
_OPTIONAL_FLOATS = ("epsilon", "epsilon_quantile")
_OPTIONAL_STRS = ("data_path",)
_OPTIONAL_INTS = ("seed",)


def _parse_value(name: str, raw: str):
    raw = raw.strip()
    if name in _TUPLE_FIELDS:
        if raw.lower() in ("", "none"):
            return None
        cast = _TUPLE_FIELDS[name]
        return tuple(cast(part.strip()) for part in raw.split(",") if part.strip())
    if raw.lower() == "none":
        if name in _OPTIONAL_FLOATS or name in _OPTIONAL_STRS or name in _OPTIONAL_INTS:
            return None
        raise ConfigError(f"{name} cannot be none")
    kind = _FIELD_TYPES[name].type
    if name in _OPTIONAL_FLOATS:
        return float(raw)
    if name in _OPTIONAL_INTS:
        return int(raw)
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    return raw


def load_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    """Config from a flat `key = value` file, then keyword overrides on top.

    Keys match the ExperimentConfig field names; dots may stand in for
    underscores.  Lines starting with '#' and blank lines are skipped.
    """
    settings = {}
    if path is not None:
        text = Path(path).read_text()
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, raw = line.partition("=")
            name = key.strip().replace(".", "_").replace("-", "_")
            if name not in _FIELD_TYPES:
                raise ConfigError(f"{path}:{lineno}: unknown key {key.strip()!r}")
            settings[name] = _parse_value(name, raw)
    for name, value in (overrides or {}).items():
        if name not in _FIELD_TYPES:
            raise ConfigError(f"unknown config field {name!r}")
        if value is not None:
            settings[name] = value
    return ExperimentConfig(**settings)


def _jsonify(value):
    """Normalize to plain JSON types so reports compare equal after a round trip."""
    if isinstance(value, dict):
        return {str(k): _jsonify(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonify(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    return value


@dataclass
class ExperimentReport:
    """Plain-data record of one run: config echo, posterior summary, metrics."""

    config: dict
    posterior_mean: list
    posterior_percentiles: dict     # percentile -> per-parameter values
    metrics: dict
    diagnostics: dict
    data_source: str
    seed: int
    version: str
    backend: str

    def to_dict(self) -> dict:
        return _jsonify(dataclasses.asdict(self))

    @classmethod
    def from_dict(cls, payload: dict) -> "ExperimentReport":
        return cls(**payload)


def load_series_csv(path) -> np.ndarray:
    """Single-column CSV of nonnegative population counts, optional header."""
    lines = Path(path).read_text().splitlines()
    values = []
    for lineno, line in enumerate(lines, start=1):
        text = line.strip()
        if not text:
            continue
        try:
            value = float(text)
        except ValueError:
            if lineno == 1:
                continue  # header
            raise ValueError(f"{path}:{lineno}: not a number: {text!r}") from None
        if value < 0:
            raise ValueError(f"{path}:{lineno}: negative population count")
        values.append(value)
    if not values:
        raise ValueError(f"{path}: no data rows")
    return np.array(values)


def _observed_data(config: ExperimentConfig):
    """Observed dataset, the matching ModelSpec, and the data-source label."""
    if config.experiment == "toy":
        observed = models.simulate_uniform_mixture(
            models.TRUE_MIXTURE_WEIGHTS, config.n_observations,
            substream(config.seed, _DOMAIN_OBSERVED, 0))
        return observed, models.uniform_mixture_model(), "generated-toy"
    if config.data_path is not None:
        return load_series_csv(config.data_path), models.blowfly_model(), str(config.data_path)
    observed = load_series_csv(models.packaged_blowfly_path())
    return observed, models.blowfly_model(), "synthetic-standin"


def _diagnostics_summary(posterior: WeightedPosterior) -> dict:
    out = {}
    for key, value in posterior.diagnostics.items():
        if key in ("gammas", "distances"):
            finite = np.asarray(value)[np.isfinite(value)]
            if finite.size:
                out[f"{key[:-1]}_quartiles"] = [float(q) for q in
                                                np.percentile(finite, [0, 25, 50, 75, 100])]
            out[f"n_{key}_non_finite"] = int(np.sum(~np.isfinite(value)))
        elif key == "generations":
            out["generations"] = [
                {k: (float(v) if np.isscalar(v) else [float(x) for x in v])
                 for k, v in gen.items() if k != "distances"}
                for gen in value
            ]
        elif isinstance(value, (bool, np.bool_)):
            out[key] = bool(value)
        elif np.isscalar(value):
            out[key] = float(value)
    return out


def run_experiment(config: ExperimentConfig, write: bool = True) -> ExperimentReport:
    """Run one configured experiment, write its outputs, return the report."""
    config.validate("run")
    started = time.perf_counter()
    observed, model, data_source = _observed_data(config)

    posterior = run_method(
        observed, model, config.method, config.seed,
        n_sims=config.n_sims,
        epsilon=config.epsilon,
        epsilon_quantile=config.epsilon_quantile,
        schedule=config.schedule(),
        n_threads=config.n_threads,
    )

    metrics = {}
    percentiles = {}
    mean_list = []
    if len(posterior) > 0:
        mean = posterior_mean(posterior)
        mean_list = [float(v) for v in mean]
        for p in REPORT_PERCENTILES:
            percentiles[str(p)] = [
                float(weighted_percentiles(posterior.particles[:, j], posterior.weights, [p])[0])
                for j in range(posterior.particles.shape[1])
            ]
        if config.experiment == "toy":
            metrics["rmse"] = rmse(models.TRUE_MIXTURE_WEIGHTS, mean)
        else:
            series = model.simulate(mean, observed.shape[0],
                                    substream(config.seed, _DOMAIN_REGEN, 0))
            if model.validate is None or model.validate(series):
                metrics["rho"] = cross_correlation(observed, series)
            else:
                metrics["rho_invalid_series"] = True

    diagnostics = _diagnostics_summary(posterior)
    diagnostics["wall_time_s"] = time.perf_counter() - started
    report = ExperimentReport(
        config=_jsonify(dataclasses.asdict(config)),
        posterior_mean=mean_list,
        posterior_percentiles=percentiles,
        metrics=_jsonify(metrics),
        diagnostics=_jsonify(diagnostics),
        data_source=data_source,
        seed=config.seed,
        version=__version__,
        backend=BACKEND,
    )
    if write:
        write_report(report, config.output_path, posterior)
    return report


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def write_report(report: ExperimentReport, out_dir,
                 posterior: WeightedPosterior | None = None) -> Path:
    """Persist report.json plus particles.csv / metrics.csv next to it."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report_path = out / "report.json"
    report_path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")

    if posterior is not None:
        theta_dim = posterior.particles.shape[1]
        header = ",".join([f"theta_{j}" for j in range(theta_dim)] + ["weight"])
        rows = [header]
        for particle, weight in zip(posterior.particles, posterior.weights):
            rows.append(",".join([_fmt(v) for v in particle] + [_fmt(weight)]))
        (out / "particles.csv").write_text("\n".join(rows) + "\n")

    rows = ["name,value"]
    for name, value in sorted(report.metrics.items()):
        rows.append(f"{name},{_fmt(value) if not isinstance(value, bool) else value}")
    (out / "metrics.csv").write_text("\n".join(rows) + "\n")
    return report_path


def load_report(out_dir) -> ExperimentReport:
    """Read back a report written by ``write_report``."""
    payload = json.loads((Path(out_dir) / "report.json").read_text())
    return ExperimentReport.from_dict(payload)
