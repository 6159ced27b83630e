"""Experiment configuration: TOML in, frozen dataclasses out, unknown keys rejected."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .core import DEFAULT_PITCH_MM, FringelabError
from .io import config_hash

DEFAULT_SEED = 7


class ConfigError(FringelabError, ValueError):
    pass


@dataclass(frozen=True)
class DatasetSection:
    n_identities: int = 50
    n_genuine: int = 6
    size: int = 480
    expression: float = 0.15
    pose_px: float = 3.0
    noise: float = 0.004
    spoofs: bool = True


@dataclass(frozen=True)
class PatternSection:
    period_px: int = 6
    profile: str = "sinusoid"
    contrast: float = 1.0
    oversample: int = 32


@dataclass(frozen=True)
class RigSection:
    baseline_mm: float = 80.0
    focal_mm: float = 4.0
    standoff_mm: float = 500.0
    pitch_mm: float = DEFAULT_PITCH_MM


@dataclass(frozen=True)
class FilterSection:
    half_width: float | None = None  # cycles/px; f0 / 2 when absent
    rolloff: float = 0.4
    floor: float = 1e-4
    output_size: int = 112


@dataclass(frozen=True)
class SpoofSection:
    kinds: tuple[str, ...] = ("planar", "parabolic", "polynomial")
    kernel_size: int = 31
    epsilon: float = 1e-6
    depth_scale_mm: float = 100.0
    exemplars: int = 10


@dataclass(frozen=True)
class RelightSection:
    enabled: bool = True
    max_power: float = 1.0
    elevation_deg: tuple[float, float] = (30.0, 90.0)
    smoothing_px: float = 2.0


@dataclass(frozen=True)
class DistanceSection:
    gamma: float = 0.3
    beta: float = 0.35  # "inf" disables the penalty
    alpha: float = 10.0


@dataclass(frozen=True)
class EvalSection:
    ranks: tuple[int, ...] = (1, 2, 5, 10)
    gammas: tuple[float, ...] = ()  # one extra report per value
    n_lambdas: int = 401
    lambda_max: float = 2.0
    split_seed: int | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = DEFAULT_SEED
    dataset: DatasetSection = field(default_factory=DatasetSection)
    pattern: PatternSection = field(default_factory=PatternSection)
    rig: RigSection = field(default_factory=RigSection)
    filter: FilterSection = field(default_factory=FilterSection)
    spoof: SpoofSection = field(default_factory=SpoofSection)
    relight: RelightSection = field(default_factory=RelightSection)
    distance: DistanceSection = field(default_factory=DistanceSection)
    eval: EvalSection = field(default_factory=EvalSection)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        if math.isinf(d["distance"]["beta"]):
            d["distance"]["beta"] = "inf"
        return _lists(d)

    @property
    def hash(self) -> str:
        return config_hash(self.to_dict())

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def with_section(self, name: str, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **{name: dataclasses.replace(getattr(self, name), **changes)})


def _lists(obj):
    if isinstance(obj, dict):
        return {k: _lists(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_lists(v) for v in obj]
    return obj


_SECTIONS = {f.name: f.default_factory for f in dataclasses.fields(ExperimentConfig) if f.name != "seed"}


def _coerce(section: str, f: dataclasses.Field, value: Any):
    where = f"[{section}].{f.name}"
    default = f.default if f.default is not dataclasses.MISSING else f.default_factory()
    if section == "distance" and f.name == "beta" and isinstance(value, str):
        if value.lower() in ("inf", "infinity"):
            return math.inf
        raise ConfigError(f"{where}: expected a number or \"inf\", got {value!r}")
    if isinstance(default, tuple):
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected an array")
        kind = type(default[0]) if default else (float if f.name == "gammas" else str)
        return tuple(_scalar(where, kind, v) for v in value)
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true or false")
        return value
    if default is None:
        kind = int if f.name == "split_seed" else float
        return _scalar(where, kind, value)
    return _scalar(where, type(default), value)


def _scalar(where: str, kind, value):
    if kind is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if kind is int and isinstance(value, int) and not isinstance(value, bool):
        return value
    if kind is str and isinstance(value, str):
        return value
    raise ConfigError(f"{where}: expected {kind.__name__}, got {type(value).__name__} {value!r}")


def from_dict(raw: dict) -> ExperimentConfig:
    """Merge ``raw`` over the defaults.  Unknown sections or keys raise :class:`ConfigError`."""
    kwargs = {}
    for name, value in raw.items():
        if name == "seed":
            if isinstance(value, dict):
                unknown = set(value) - {"value"}
                if unknown:
                    raise ConfigError(f"unknown key(s) in [seed]: {', '.join(sorted(unknown))}")
                value = value.get("value", DEFAULT_SEED)
            kwargs["seed"] = _scalar("seed", int, value)
            continue
        if name not in _SECTIONS:
            raise ConfigError(f"unknown section [{name}]; expected one of {', '.join(['seed', *_SECTIONS])}")
        if not isinstance(value, dict):
            raise ConfigError(f"[{name}] must be a table")
        cls = type(_SECTIONS[name]())
        fields = {f.name: f for f in dataclasses.fields(cls)}
        unknown = set(value) - set(fields)
        if unknown:
            raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(sorted(unknown))}")
        kwargs[name] = cls(**{k: _coerce(name, fields[k], v) for k, v in value.items()})
    cfg = ExperimentConfig(**kwargs)
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError("seed must be a non-negative 64-bit integer")
    d = cfg.dataset
    if d.n_identities < 1 or d.n_genuine < 1 or d.size < 16:
        raise ConfigError("[dataset] needs n_identities >= 1, n_genuine >= 1, size >= 16")
    if min(d.expression, d.pose_px, d.noise) < 0:
        raise ConfigError("[dataset] jitter levels must be non-negative")
    from .spoof import SPOOF_KINDS

    bad = [k for k in cfg.spoof.kinds if k not in SPOOF_KINDS]
    if bad:
        raise ConfigError(f"[spoof].kinds: unknown kind(s) {bad}; expected {list(SPOOF_KINDS)}")
    if not 0 <= cfg.distance.gamma <= 1 or any(not 0 <= g <= 1 for g in cfg.eval.gammas):
        raise ConfigError("gamma values must lie in [0, 1]")
    if cfg.eval.n_lambdas < 2:
        raise ConfigError("[eval].n_lambdas must be at least 2")


def loads(text: str) -> ExperimentConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        # the decoder message carries "(at line L, column C)"
        raise ConfigError(f"invalid TOML: {exc}") from exc
    return from_dict(raw)


def load(path: Path | str | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc.strerror}") from exc
    try:
        return loads(text)
    except ConfigError as exc:
        raise ConfigError(f"{p}: {exc}") from exc


def dumps(cfg: ExperimentConfig) -> str:
    """TOML rendering of ``cfg`` (absent optionals omitted)."""
    lines = [f"seed = {cfg.seed}", ""]
    d = cfg.to_dict()
    for name in _SECTIONS:
        lines.append(f"[{name}]")
        for k, v in d[name].items():
            if v is None:
                continue
            lines.append(f"{k} = {_toml_value(v)}")
        lines.append("")
    return "\n".join(lines)


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, list):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    return repr(v)
