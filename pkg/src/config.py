"""Configuration schema, JSON loading and defaults."""

import dataclasses
import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from . import __version__
from .errors import ConfigError
from .types import SolverType

SEED_ENV_VAR = "AQMSENSE_SEED"
SOLVERS: tuple[SolverType, ...] = ("SGD", "ADAM", "LBFGS")

IntRange = tuple[int, int]
FloatRange = tuple[float, float]


@dataclass(frozen=True)
class ComplexityProfile:
    """Ranges the topology generator draws from (bounds inclusive)."""

    switches: IntRange = (3, 5)
    component_nodes: IntRange = (1, 5)
    hosts_per_switch: IntRange = (1, 5)
    edge_prob: FloatRange = (0.0, 1.0)
    aux_flows: IntRange = (1, 3)
    delay_ms: FloatRange = (10.0, 100.0)
    capacity_mbps: FloatRange = (10.0, 1000.0)

    def validate(self) -> "ComplexityProfile":
        for f in dataclasses.fields(self):
            lo, hi = getattr(self, f.name)
            if lo > hi:
                raise ConfigError(f"profile.{f.name}: min {lo} > max {hi}")
        if self.switches[0] < 1:
            raise ConfigError("profile.switches must be >= 1")
        if self.component_nodes[0] < 1:
            raise ConfigError("profile.component_nodes must be >= 1")
        if self.hosts_per_switch[0] < 0 or self.aux_flows[0] < 0:
            raise ConfigError("profile host and flow counts must be >= 0")
        if not (0.0 <= self.edge_prob[0] and self.edge_prob[1] <= 1.0):
            raise ConfigError("profile.edge_prob must lie in [0, 1]")
        if self.delay_ms[0] <= 0 or self.capacity_mbps[0] <= 0:
            raise ConfigError("profile delays and capacities must be > 0")
        return self

    def dominates(self, other: "ComplexityProfile") -> bool:
        """True when every size range lies strictly above `other`'s."""
        for name in ("switches", "component_nodes", "hosts_per_switch", "aux_flows"):
            lo, hi = getattr(self, name)
            other_lo, other_hi = getattr(other, name)
            if lo <= other_lo or hi <= other_hi:
                return False
        return True


COMPLEX_PROFILE = ComplexityProfile(
    switches=(6, 10),
    component_nodes=(3, 8),
    hosts_per_switch=(3, 8),
    aux_flows=(3, 6),
)


@dataclass(frozen=True)
class TrainConfig:
    """MLP architecture and solver settings."""

    hidden_layers: tuple[int, ...] = (14,)
    l2_alpha: float = 0.5e-10
    solver: SolverType = "LBFGS"
    max_iter: int = 500
    tol: float = 1e-6
    learning_rate: float | None = None  # SGD 0.01, ADAM 0.001
    batch_size: int | None = None  # min(200, n)
    seed: int = 0

    def validate(self) -> "TrainConfig":
        if len(self.hidden_layers) > 4:
            raise ConfigError("at most 4 hidden layers")
        if any(not 2 <= h <= 20 for h in self.hidden_layers):
            raise ConfigError("hidden layer sizes must lie in [2, 20]")
        if self.solver not in SOLVERS:
            raise ConfigError(f"unknown solver {self.solver!r}")
        if self.l2_alpha < 0 or self.max_iter < 0 or self.tol < 0:
            raise ConfigError("l2_alpha, max_iter and tol must be >= 0")
        if self.learning_rate is not None and self.learning_rate <= 0:
            raise ConfigError("learning_rate must be > 0")
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        return self


@dataclass(frozen=True)
class SearchSpace:
    """Randomized hyperparameter search ranges."""

    layers: IntRange = (1, 4)
    neurons: IntRange = (2, 20)
    l2_alpha: FloatRange = (1e-12, 1e-1)  # log-uniform
    solvers: tuple[SolverType, ...] = SOLVERS

    def validate(self) -> "SearchSpace":
        if not 1 <= self.layers[0] <= self.layers[1] <= 4:
            raise ConfigError("search layers must satisfy 1 <= min <= max <= 4")
        if not 2 <= self.neurons[0] <= self.neurons[1] <= 20:
            raise ConfigError("search neurons must satisfy 2 <= min <= max <= 20")
        if not 0 < self.l2_alpha[0] <= self.l2_alpha[1]:
            raise ConfigError("search l2_alpha range must be positive and ordered")
        if not self.solvers or any(s not in SOLVERS for s in self.solvers):
            raise ConfigError("search solvers must be a nonempty subset of SGD/ADAM/LBFGS")
        return self


@dataclass(frozen=True)
class SearchSettings:
    enabled: bool = False
    n_evals: int = 20
    repeats: int = 100
    test_fraction: float = 0.1
    space: SearchSpace = field(default_factory=SearchSpace)


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings for one end-to-end experiment."""

    n_topologies: int = 1100
    duration_s: float = 20.0
    held_out_fraction: float = 1 / 11
    base_seed: int = 0
    profile: ComplexityProfile = field(default_factory=ComplexityProfile)
    complex_profile: ComplexityProfile = COMPLEX_PROFILE
    n_complex: int = 60
    train: TrainConfig = field(default_factory=TrainConfig)
    search: SearchSettings = field(default_factory=SearchSettings)
    importance_repeats: int = 10
    cv_folds: int = 10  # 0 skips the cross-validated classifier comparison
    parallelism: int = 1
    output_dir: str = "data"

    def validate(self) -> "ExperimentConfig":
        if self.n_topologies < 1:
            raise ConfigError("n_topologies must be >= 1")
        if self.duration_s <= 0:
            raise ConfigError("duration_s must be > 0")
        if not 0 < self.held_out_fraction < 1:
            raise ConfigError("held_out_fraction must lie in (0, 1)")
        if self.base_seed < 0 or self.base_seed >= 2**64:
            raise ConfigError("base_seed must be a 64-bit unsigned integer")
        if self.parallelism < 1 or self.importance_repeats < 1 or self.n_complex < 0:
            raise ConfigError("parallelism and importance_repeats must be >= 1, n_complex >= 0")
        if self.search.n_evals < 1 or self.search.repeats < 1:
            raise ConfigError("search n_evals and repeats must be >= 1")
        if not 0 < self.search.test_fraction < 1:
            raise ConfigError("search test_fraction must lie in (0, 1)")
        if self.cv_folds < 0 or self.cv_folds == 1:
            raise ConfigError("cv_folds must be 0 or >= 2")
        self.profile.validate()
        self.complex_profile.validate()
        self.train.validate()
        self.search.space.validate()
        return self


def _tuples(cls: type, data: dict[str, Any]) -> dict[str, Any]:
    """Reject unknown keys and turn JSON lists back into tuples."""
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    return {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}


def profile_from_dict(data: dict[str, Any]) -> ComplexityProfile:
    """Validated profile from its JSON form."""
    return ComplexityProfile(**_tuples(ComplexityProfile, data)).validate()


def train_config_from_dict(data: dict[str, Any]) -> TrainConfig:
    return TrainConfig(**_tuples(TrainConfig, data)).validate()


def config_from_dict(data: dict[str, Any]) -> ExperimentConfig:
    data = _tuples(ExperimentConfig, data)
    for key in ("profile", "complex_profile"):
        if key in data:
            data[key] = profile_from_dict(data[key])
    if "train" in data:
        data["train"] = train_config_from_dict(data["train"])
    if "search" in data:
        search = _tuples(SearchSettings, data["search"])
        if "space" in search:
            search["space"] = SearchSpace(**_tuples(SearchSpace, search["space"]))
        data["search"] = SearchSettings(**search)
    try:
        return ExperimentConfig(**data).validate()
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path | None = None) -> ExperimentConfig:
    """Load a JSON config (defaults when path is None) and apply env overrides."""
    data: dict[str, Any] = {}
    if path is not None:
        try:
            with open(path) as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return apply_env_overrides(config_from_dict(data))


def load_train_config(path: str | Path) -> TrainConfig:
    try:
        with open(path) as f:
            return train_config_from_dict(json.load(f))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read train config {path}: {exc}") from exc


def apply_env_overrides(cfg: ExperimentConfig) -> ExperimentConfig:
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None or raw == "":
        return cfg
    try:
        seed = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}") from exc
    return dataclasses.replace(cfg, base_seed=seed).validate()


def config_to_dict(cfg: Any) -> dict[str, Any]:
    """Plain-dict form of any config dataclass."""
    return asdict(cfg)


def dump_config(cfg: ExperimentConfig) -> str:
    """Indented JSON with sorted keys."""
    return json.dumps(config_to_dict(cfg), indent=2, sort_keys=True)


def _digest(doc: dict[str, Any]) -> str:
    canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def config_hash(cfg: Any) -> str:
    """SHA-256 of the canonical JSON form of a config dataclass."""
    return _digest(config_to_dict(cfg))


DATA_FIELDS = ("profile", "duration_s", "base_seed")


def data_hash(cfg: ExperimentConfig) -> str:
    """Hash of the settings that determine each simulated pair, plus the tool version."""
    full = config_to_dict(cfg)
    doc = {name: full[name] for name in DATA_FIELDS}
    doc["tool_version"] = __version__
    return _digest(doc)
