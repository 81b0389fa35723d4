"""Pipeline configuration and the flat ``key = value`` config file format."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .errors import ValidationError
from .signals import FaultKinematics, fault_kinematics_preset
from .subspace import ORDER_RULES, LanczosConfig
from .tracking import TrackingConfig

METHODS = ("fstrm", "classical", "periodogram")


class ConfigError(ValidationError):
    """Invalid configuration; ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


@dataclass(frozen=True)
class PipelineConfig:
    fs_hz: float = 51200.0
    frame_len: int = 819
    hop: int | None = None  # None -> frame_len (non-overlapping)
    window: str = "rectangular"
    lanczos: LanczosConfig = field(default_factory=LanczosConfig)
    order_threshold: float = 0.9
    radius_tol: float = 0.1
    rooting_aperture: int = 64
    detect_ratio: float = 10.0
    order_rule: str = "detect"
    interleave: bool = True
    polish: bool = True
    tracking: TrackingConfig = field(default_factory=TrackingConfig)
    kinematics: FaultKinematics | None = field(default_factory=fault_kinematics_preset)
    freq_tol_hz: float = 2.5
    method: str = "fstrm"

    def __post_init__(self):
        if self.hop is None:
            object.__setattr__(self, "hop", self.frame_len)
        checks = [
            ("fs_hz", self.fs_hz > 0, "must be > 0"),
            ("frame_len", self.frame_len >= 12, "must be >= 12"),
            ("hop", 1 <= self.hop <= self.frame_len, "must lie in [1, frame_len]"),
            ("window", self.window in ("rectangular", "hann"), "must be rectangular or hann"),
            ("order_threshold", 0 < self.order_threshold <= 1, "must lie in (0, 1]"),
            ("radius_tol", 0 < self.radius_tol < 1, "must lie in (0, 1)"),
            ("rooting_aperture", self.rooting_aperture >= 2, "must be >= 2"),
            ("detect_ratio", self.detect_ratio >= 0, "must be >= 0"),
            ("order_rule", self.order_rule in ORDER_RULES, f"must be one of {', '.join(ORDER_RULES)}"),
            ("freq_tol_hz", self.freq_tol_hz > 0, "must be > 0"),
            ("method", self.method in METHODS, f"must be one of {', '.join(METHODS)}"),
        ]
        for name, ok, msg in checks:
            if not ok:
                raise ConfigError(name, f"{msg} (got {getattr(self, name)!r})")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_SECTIONS = {"lanczos": LanczosConfig, "tracking": TrackingConfig, "kinematics": FaultKinematics}


def _coerce(raw: str, annotation, key: str):
    text = str(raw).strip()
    ann = str(annotation)
    if text.lower() in ("none", "null", "") and "None" in ann:
        return None
    try:
        if ann.startswith("bool"):
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if ann.startswith("tuple"):
            return tuple(float(v) for v in text.strip("()").split(","))
        if ann.startswith("int"):
            return int(text)
        if ann.startswith("float"):
            return float(text)
    except ValueError:
        raise ConfigError(key, f"cannot parse {text!r} as {ann}") from None
    return text


def config_from_mapping(values: dict, base: PipelineConfig | None = None) -> PipelineConfig:
    """Build a config from dotted keys (``lanczos.k_max``); unknown keys are errors."""
    base = base or PipelineConfig()
    top_fields = {f.name: f for f in dataclasses.fields(PipelineConfig)}
    top, nested = {}, {name: {} for name in _SECTIONS}
    for key, raw in values.items():
        if "." in key:
            sect, sub = key.split(".", 1)
            if sect not in _SECTIONS:
                raise ConfigError(key, "unknown config section")
            sub_fields = {f.name: f for f in dataclasses.fields(_SECTIONS[sect])}
            if sub not in sub_fields:
                raise ConfigError(key, "unknown config key")
            nested[sect][sub] = _coerce(raw, sub_fields[sub].type, key)
        else:
            if key not in top_fields or key in _SECTIONS:
                raise ConfigError(key, "unknown config key")
            top[key] = _coerce(raw, top_fields[key].type, key)
    for sect, kw in nested.items():
        if not kw:
            continue
        current = getattr(base, sect)
        try:
            if current is None:
                top[sect] = _SECTIONS[sect](**kw)
            else:
                top[sect] = dataclasses.replace(current, **kw)
        except TypeError as exc:
            raise ConfigError(sect, str(exc)) from None
        except ValidationError as exc:
            raise ConfigError(sect, str(exc)) from None
    if "frame_len" in top and "hop" not in top and base.hop == base.frame_len:
        top["hop"] = None
    try:
        return dataclasses.replace(base, **top)
    except ConfigError:
        raise
    except ValidationError as exc:
        raise ConfigError("config", str(exc)) from None


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected key = value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def load_config(path, overrides: dict | None = None) -> PipelineConfig:
    """Read a config file, then apply ``overrides`` (flags win)."""
    values = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            values = parse_config_text(fh.read())
    values.update(overrides or {})
    return config_from_mapping(values)
