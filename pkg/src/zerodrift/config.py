"""Run configuration (YAML) for the analysis pipeline.

Defaults: 1000 bootstrap iterations, seed 42, 95% intervals and FDR
alpha 0.05.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import date
from pathlib import Path
from typing import Any, Optional

import yaml

from .alerting import DEFAULT_MIN_ABS_DROP, DEFAULT_PROFILES, DEFAULT_Z_THRESHOLD, IndustryProfile
from .baselines import ALL_METHODS
from .metrics import DROP_METRICS
from .model import DriftError, LabelSet
from .stats import DEFAULT_ALPHA, DEFAULT_ITERATIONS, DEFAULT_LEVEL, DEFAULT_PERMUTATIONS, DEFAULT_SEED
from .synth import SynthConfig
from .temporal import DEFAULT_MIN_BIN_SIZE, DEFAULT_WINDOW_DAYS, EventConfig

DEFAULT_DROP_METRICS = ("accuracy", "mean_confidence", "pcs", "ced")
FORMATS = ("jsonl", "csv")


class ConfigError(DriftError, ValueError):
    pass


@dataclass(frozen=True)
class InputSpec:
    path: str
    format: str = "jsonl"


@dataclass(frozen=True)
class RunConfig:
    labels: LabelSet
    events: tuple[EventConfig, ...]
    inputs: tuple[InputSpec, ...] = ()
    name: str = "run"
    min_bin_size: int = DEFAULT_MIN_BIN_SIZE
    metrics: tuple[str, ...] = DEFAULT_DROP_METRICS
    baselines: tuple[str, ...] = ALL_METHODS
    iterations: int = DEFAULT_ITERATIONS
    seed: int = DEFAULT_SEED
    level: float = DEFAULT_LEVEL
    alpha: float = DEFAULT_ALPHA
    permutation_iterations: int = DEFAULT_PERMUTATIONS
    z_threshold: float = DEFAULT_Z_THRESHOLD
    min_abs_drop: float = DEFAULT_MIN_ABS_DROP
    psi_bins: int = 10
    kmeans_k: int = 5
    profiles: tuple[IndustryProfile, ...] = DEFAULT_PROFILES
    outputs: dict = field(default_factory=dict)
    synth: Optional[SynthConfig] = None

    def __post_init__(self):
        validate(self)

    def with_overrides(self, **changes) -> "RunConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    def echo(self) -> dict:
        """JSON-ready description from which the run can be repeated."""
        out = {
            "name": self.name,
            "labels": list(self.labels.labels),
            "inputs": [{"path": i.path, "format": i.format} for i in self.inputs],
            "events": [
                {
                    "name": e.event_name,
                    "during_start": e.during_start.isoformat(),
                    "during_end": e.during_end.isoformat(),
                    "pre_days": e.pre_days,
                    "post_days": e.post_days,
                }
                for e in self.events
            ],
            "analysis": {
                "min_bin_size": self.min_bin_size,
                "metrics": list(self.metrics),
                "baselines": list(self.baselines),
                "psi_bins": self.psi_bins,
                "kmeans_k": self.kmeans_k,
            },
            "stats": {
                "iterations": self.iterations,
                "seed": self.seed,
                "level": self.level,
                "alpha": self.alpha,
                "permutation_iterations": self.permutation_iterations,
                "bootstrap_method": "percentile",
                "rng": "splitmix64-counter",
            },
            "detection": {"z_threshold": self.z_threshold, "min_abs_drop": self.min_abs_drop},
            "industry_profiles": [
                {"name": p.name, "threshold_points": p.threshold_points} for p in self.profiles
            ],
        }
        if self.outputs:
            out["outputs"] = dict(self.outputs)
        return out


def validate(cfg: RunConfig) -> None:
    names = [e.event_name for e in cfg.events]
    if len(set(names)) != len(names):
        raise ConfigError("event names must be unique")
    for spec in cfg.inputs:
        if spec.format not in FORMATS:
            raise ConfigError(f"input {spec.path}: format must be one of {FORMATS}")
    paths = [Path(i.path) for i in cfg.inputs] + [Path(p) for p in cfg.outputs.values() if p]
    resolved = [str(p.resolve()) for p in paths]
    if len(set(resolved)) != len(resolved):
        raise ConfigError("input and output paths must all be distinct")
    bad = [m for m in cfg.metrics if m not in DROP_METRICS and m != "str"]
    if bad:
        raise ConfigError(f"unknown metrics {bad}")
    bad = [m for m in cfg.baselines if m not in ALL_METHODS]
    if bad:
        raise ConfigError(f"unknown baselines {bad}")
    if cfg.min_bin_size < 1:
        raise ConfigError("min_bin_size must be >= 1")
    if cfg.iterations < 1 or cfg.permutation_iterations < 1:
        raise ConfigError("iteration counts must be >= 1")
    if not 0 < cfg.level < 1:
        raise ConfigError("level must be in (0, 1)")
    if not 0 < cfg.alpha < 1:
        raise ConfigError("alpha must be in (0, 1)")
    if cfg.z_threshold <= 0 or cfg.min_abs_drop < 0:
        raise ConfigError("z_threshold must be positive and min_abs_drop non-negative")
    if cfg.psi_bins < 2 or cfg.kmeans_k < 2:
        raise ConfigError("psi_bins and kmeans_k must be >= 2")
    unknown_out = set(cfg.outputs) - {"json", "markdown", "csv_series"}
    if unknown_out:
        raise ConfigError(f"unknown outputs {sorted(unknown_out)}")


def _event(obj: dict) -> EventConfig:
    try:
        return EventConfig(
            event_name=str(obj["name"]),
            during_start=_as_date(obj["during_start"]),
            during_end=_as_date(obj["during_end"]),
            pre_days=int(obj.get("pre_days", DEFAULT_WINDOW_DAYS)),
            post_days=int(obj.get("post_days", DEFAULT_WINDOW_DAYS)),
        )
    except KeyError as exc:
        raise ConfigError(f"event is missing {exc.args[0]!r}") from None


def _as_date(value) -> date:
    if isinstance(value, date):
        return value
    return date.fromisoformat(str(value))


def config_from_dict(data: dict[str, Any], base_dir: Optional[Path] = None) -> RunConfig:
    """Build a :class:`RunConfig` from parsed YAML; relative paths resolve against ``base_dir``."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    known = {"name", "labels", "inputs", "events", "analysis", "stats", "detection",
             "industry_profiles", "outputs", "synth"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config sections {sorted(unknown)}")
    base = Path(base_dir) if base_dir else Path(".")

    def resolve(p: str) -> str:
        path = Path(p)
        return str(path if path.is_absolute() else base / path)

    try:
        synth = SynthConfig.from_dict(data["synth"]) if data.get("synth") else None
        labels = data.get("labels") or (list(synth.labels) if synth else None)
        if not labels:
            raise ConfigError("labels are required")
        analysis = data.get("analysis") or {}
        stats = data.get("stats") or {}
        detection = data.get("detection") or {}
        kwargs: dict[str, Any] = {
            "name": str(data.get("name", "run")),
            "labels": LabelSet(tuple(labels)),
            "events": tuple(_event(e) for e in data.get("events") or ()),
            "inputs": tuple(
                InputSpec(resolve(i["path"]), i.get("format", "jsonl")) for i in data.get("inputs") or ()
            ),
            "outputs": {k: resolve(v) for k, v in (data.get("outputs") or {}).items() if v},
            "synth": synth,
        }
        for key in ("min_bin_size", "psi_bins", "kmeans_k"):
            if key in analysis:
                kwargs[key] = int(analysis[key])
        for key in ("metrics", "baselines"):
            if key in analysis:
                kwargs[key] = tuple(analysis[key])
        for key in ("iterations", "seed", "permutation_iterations"):
            if key in stats:
                kwargs[key] = int(stats[key])
        for key in ("level", "alpha"):
            if key in stats:
                kwargs[key] = float(stats[key])
        for key in ("z_threshold", "min_abs_drop"):
            if key in detection:
                kwargs[key] = float(detection[key])
        if data.get("industry_profiles"):
            kwargs["profiles"] = tuple(
                IndustryProfile(str(p["name"]), float(p["threshold_points"])) for p in data["industry_profiles"]
            )
        return RunConfig(**kwargs)
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from None
    return config_from_dict(data or {}, base_dir=path.parent)
