"""Run configuration: named presets, the key-value config file format, and
seed resolution.

Config files are plain `key = value` lines, '#' comments, one required
`schema_version` key. Precedence when the CLI is driving: command-line flag,
then config-file key, then preset value, then built-in default.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace

from .errors import ConfigError
from .estimators import ThresholdSpec
from .models import CustomModel, Model1, Model2, Model3, ModelConfig
from .montecarlo import ExperimentConfig

DEFAULT_BASE_SEED = 123456789
ENV_SEED = "JUMPSIFT_SEED"
SCHEMA_VERSION = 1

# Values are strings on purpose: presets go through the same parsing path
# as config files, so a preset is exactly quotable as a file.
PRESETS: dict[str, dict[str, str]] = {
    "model1-desk": {"model": "model1", "n": "2000", "paths": "500", "beta": "0.9"},
    "model1-full": {"model": "model1", "n": "6000", "paths": "5000", "beta": "0.9"},
    "model2-desk": {"model": "model2", "n": "2000", "paths": "500", "beta": "0.9",
                    "substeps": "5"},
    "model2-full": {"model": "model2", "n": "6000", "paths": "5000", "beta": "0.9",
                     "substeps": "5"},
    "model3-desk": {"model": "model3", "n": "2000", "paths": "500", "beta": "0.99"},
    "model3-full": {"model": "model3", "n": "6000", "paths": "5000", "beta": "0.99"},
    "diffusion-desk": {"model": "custom", "drift": "zero",
                       "spot_vol": "constant:0.3", "jumps": "none",
                       "n": "2000", "paths": "500", "beta": "0.9"},
}

_INT_KEYS = {"n", "paths", "substeps", "seed", "parallelism", "schema_version"}
_FLOAT_KEYS = {"t", "beta", "scale_c", "jitter"}
_STR_KEYS = {"preset", "model", "drift", "spot_vol", "jumps"}
_ALL_KEYS = _INT_KEYS | _FLOAT_KEYS | _STR_KEYS

_DEFAULTS: dict[str, str] = {
    "model": "model1",
    "n": "2000",
    "t": "1.0",
    "paths": "500",
    "beta": "0.9",
    "scale_c": "1.0",
    "substeps": "1",
    "jitter": "0.0",
    "parallelism": "1",
}


@dataclass(frozen=True, slots=True)
class RunSettings:
    """Fully resolved run parameters; seed is None until resolve_seed ran."""

    model: ModelConfig
    n: int
    t_end: float
    n_paths: int
    beta: float
    scale_c: float
    substeps: int
    jitter: float
    parallelism: int
    seed: int | None = None

    def threshold(self) -> ThresholdSpec:
        return ThresholdSpec(self.beta, self.scale_c)

    def experiment(self) -> ExperimentConfig:
        if self.seed is None:
            raise ConfigError("seed not resolved")
        return ExperimentConfig(
            model=self.model,
            threshold=self.threshold(),
            n=self.n,
            t_end=self.t_end,
            jitter=self.jitter,
            substeps=self.substeps,
            n_paths=self.n_paths,
            base_seed=self.seed,
            parallelism=self.parallelism,
        )

    def with_seed(self, seed: int) -> "RunSettings":
        return replace(self, seed=int(seed))


def load_config_file(path: str) -> dict[str, str]:
    """Parses `key = value` lines into raw strings and validates the schema.

    Every key must be known; schema_version is required and pinned, so an
    empty file fails naming exactly that key.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    raw: dict[str, str] = {}
    for lineno, line in enumerate(lines, start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in text.split("=", 1))
        if key not in _ALL_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        if not value:
            raise ConfigError(f"{path}:{lineno}: empty value for {key!r}")
        raw[key] = value
    if "schema_version" not in raw:
        raise ConfigError(f"{path}: missing required key 'schema_version'")
    if _parse_int("schema_version", raw["schema_version"]) != SCHEMA_VERSION:
        raise ConfigError(
            f"{path}: unsupported schema_version {raw['schema_version']!r}"
            f" (expected {SCHEMA_VERSION})")
    return raw


def preset_values(name: str) -> dict[str, str]:
    if name not in PRESETS:
        known = ", ".join(sorted(PRESETS))
        raise ConfigError(f"unknown preset {name!r} (known: {known})")
    return dict(PRESETS[name])


def merge_settings(file_values: dict[str, str] | None = None,
                   overrides: dict[str, str] | None = None,
                   preset: str | None = None) -> RunSettings:
    """Layers defaults < preset < config file < overrides, then builds.

    A `preset` key inside the file applies at the preset layer; the explicit
    `preset` argument (the CLI flag) wins over it.
    """
    file_values = dict(file_values or {})
    file_values.pop("schema_version", None)
    chosen = preset or file_values.pop("preset", None)

    merged = dict(_DEFAULTS)
    if chosen is not None:
        merged.update(preset_values(chosen))
    merged.update(file_values)
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = str(value)
    return _build(merged)


def resolve_seed(explicit: int | None = None) -> int:
    """Explicit value wins, then the JUMPSIFT_SEED variable, then the default."""
    if explicit is not None:
        return int(explicit)
    env = os.environ.get(ENV_SEED)
    if env is not None:
        try:
            return int(env, 0)
        except ValueError:
            raise ConfigError(f"{ENV_SEED} must be an integer, got {env!r}") from None
    return DEFAULT_BASE_SEED


def _build(merged: dict[str, str]) -> RunSettings:
    model_name = merged.get("model", "model1")
    custom_keys = {k for k in ("drift", "spot_vol", "jumps") if k in merged}
    if model_name == "model1":
        model: ModelConfig = Model1()
    elif model_name == "model2":
        model = Model2()
    elif model_name == "model3":
        model = Model3()
    elif model_name == "custom":
        try:
            model = CustomModel(
                drift=merged.get("drift", "zero"),
                spot_vol=merged.get("spot_vol", "constant:0.3"),
                jumps=merged.get("jumps", "none"),
            )
        except Exception as exc:
            raise ConfigError(f"invalid custom model: {exc}") from exc
        custom_keys = set()
    else:
        raise ConfigError(
            f"unknown model {model_name!r} (known: model1, model2, model3, custom)")
    if custom_keys:
        raise ConfigError(
            f"keys {sorted(custom_keys)} require model = custom, not {model_name!r}")

    seed = merged.get("seed")
    settings = RunSettings(
        model=model,
        n=_parse_int("n", merged["n"]),
        t_end=_parse_float("t", merged["t"]),
        n_paths=_parse_int("paths", merged["paths"]),
        beta=_parse_float("beta", merged["beta"]),
        scale_c=_parse_float("scale_c", merged["scale_c"]),
        substeps=_parse_int("substeps", merged["substeps"]),
        jitter=_parse_float("jitter", merged["jitter"]),
        parallelism=_parse_int("parallelism", merged["parallelism"]),
        seed=None if seed is None else _parse_int("seed", seed),
    )
    _validate(settings)
    return settings


def _validate(s: RunSettings) -> None:
    if s.n < 1:
        raise ConfigError("n must be >= 1")
    if s.t_end <= 0.0:
        raise ConfigError("t must be positive")
    if s.n_paths < 1:
        raise ConfigError("paths must be >= 1")
    if s.substeps < 1:
        raise ConfigError("substeps must be >= 1")
    if not (0.0 <= s.jitter < 1.0):
        raise ConfigError("jitter must lie in [0, 1)")
    if s.parallelism < 1:
        raise ConfigError("parallelism must be >= 1")
    # beta/scale_c stay permissive: inadmissible thresholds are allowed to
    # run and are reported as such.


def _parse_int(key: str, value: str) -> int:
    try:
        return int(value, 0) if isinstance(value, str) else int(value)
    except (ValueError, TypeError):
        raise ConfigError(f"{key} must be an integer, got {value!r}") from None


def _parse_float(key: str, value: str) -> float:
    try:
        out = float(value)
    except (ValueError, TypeError):
        raise ConfigError(f"{key} must be a number, got {value!r}") from None
    if out != out:
        raise ConfigError(f"{key} must not be NaN")
    return out
