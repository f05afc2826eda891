"""Flat ``key = value`` configuration files and the run scenario built from them."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ConfigError, DuplicateKey, NonFinite, ParseError
from .params import SystemParams, derive_parameters
from .routing import DETECTION_THRESHOLD, NOISE_CEILING, ROUTING_THRESHOLD
from .steady_state import DETUNING_MODES

PARAMETER_KEYS = frozenset(
    {
        "lambda_pump_m", "L_m", "f1_hz", "omega1_rad_s", "f2_hz", "omega2_rad_s", "m1_kg", "m2_kg",
        "Q1", "Q2", "kappa_rad_s", "kappa_over_omega1", "power_W", "temperature_K", "coulomb_lambda",
        "charge1_C", "charge2_C", "r0_m", "epsilon_convention",
    }
)
RUN_KEYS = frozenset(
    {
        "detuning_mode", "detuning_value_rad_s", "pulse_center_rad_s", "pulse_width_rad_s",
        "routing_threshold", "detection_threshold", "noise_ceiling",
    }
)
KNOWN_KEYS = PARAMETER_KEYS | RUN_KEYS


class ConfigWarning(UserWarning):
    pass


def load_config(path) -> dict[str, str]:
    """Parse a config file into ``{key: raw value}``.

    ``#`` starts a comment. Duplicate keys raise :class:`DuplicateKey`;
    unknown keys emit a :class:`ConfigWarning` naming the key and line.
    """
    text = Path(path).read_text(encoding="utf-8")
    values: dict[str, str] = {}
    seen: dict[str, list[int]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ParseError(lineno, line)
        key, _, value = body.partition("=")
        key, value = key.strip(), value.strip()
        if not key or not value or any(c.isspace() for c in key):
            raise ParseError(lineno, line)
        seen.setdefault(key, []).append(lineno)
        values[key] = value
    for key, lines in seen.items():
        if len(lines) > 1:
            raise DuplicateKey(key, tuple(lines))
    for key, lines in seen.items():
        if key not in KNOWN_KEYS:
            warnings.warn(f"unknown key {key!r} on line {lines[0]}", ConfigWarning, stacklevel=2)
    return values


def shipped_config(name: str) -> Path:
    """Path of one of the bundled example configs (``fig2.conf`` etc.)."""
    ref = resources.files("optorouter") / "configs" / name
    path = Path(str(ref))
    if not path.is_file():
        raise FileNotFoundError(name)
    return path


def _optional_float(raw, key):
    if key not in raw:
        return None
    try:
        x = float(raw[key])
    except ValueError:
        raise NonFinite(key, raw[key]) from None
    if not math.isfinite(x):
        raise NonFinite(key, raw[key])
    return x


@dataclass(frozen=True)
class Scenario:
    """Parameters plus the run settings that are not device properties."""

    params: SystemParams
    detuning_mode: str = "fix_effective"
    detuning_value: float | None = None
    r0: float | None = None
    pulse: tuple[float, float] | None = None
    detection_threshold: float = DETECTION_THRESHOLD
    routing_threshold: float = ROUTING_THRESHOLD
    noise_ceiling: float = NOISE_CEILING

    @classmethod
    def from_raw(cls, raw) -> "Scenario":
        params = derive_parameters(raw)
        mode = str(raw.get("detuning_mode", "fix_effective")).strip()
        if mode not in DETUNING_MODES:
            raise ConfigError(f"detuning_mode must be one of {DETUNING_MODES}, got {mode!r}")
        value = _optional_float(raw, "detuning_value_rad_s")
        if mode == "fix_bare" and value is None:
            raise ConfigError("detuning_mode = fix_bare requires detuning_value_rad_s")
        center = _optional_float(raw, "pulse_center_rad_s")
        width = _optional_float(raw, "pulse_width_rad_s")
        if (center is None) != (width is None):
            raise ConfigError("pulse_center_rad_s and pulse_width_rad_s must be given together")
        pulse = None if center is None else (center, width)
        out = cls(
            params=params,
            detuning_mode=mode,
            detuning_value=value,
            r0=_optional_float(raw, "r0_m"),
            pulse=pulse,
        )
        for key, attr in (
            ("detection_threshold", "detection_threshold"),
            ("routing_threshold", "routing_threshold"),
            ("noise_ceiling", "noise_ceiling"),
        ):
            x = _optional_float(raw, key)
            if x is not None:
                object.__setattr__(out, attr, x)
        return out

    @classmethod
    def from_file(cls, path) -> "Scenario":
        return cls.from_raw(load_config(path))
