"""Flat key=value config files: one key per line, ``#`` comments."""

from __future__ import annotations

from pathlib import Path

from .errors import InvalidSpec


def parse_config(path) -> dict:
    """Parse a config file into a string-to-string mapping."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IOError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidSpec(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def get_int(cfg: dict, key: str, default=None):
    if key not in cfg:
        return default
    try:
        return int(cfg[key])
    except ValueError as exc:
        raise InvalidSpec(f"config key {key}={cfg[key]!r} is not an integer") from exc


def get_float(cfg: dict, key: str, default=None):
    if key not in cfg:
        return default
    try:
        return float(cfg[key])
    except ValueError as exc:
        raise InvalidSpec(f"config key {key}={cfg[key]!r} is not a number") from exc


def get_bool(cfg: dict, key: str, default=None):
    if key not in cfg:
        return default
    value = cfg[key].lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise InvalidSpec(f"config key {key}={cfg[key]!r} is not a boolean")


def get_int_list(cfg: dict, key: str, default=None):
    if key not in cfg:
        return default
    try:
        return tuple(int(v) for v in cfg[key].split(",") if v.strip())
    except ValueError as exc:
        raise InvalidSpec(f"config key {key}={cfg[key]!r} is not an integer list") from exc


def get_float_list(cfg: dict, key: str, default=None):
    if key not in cfg:
        return default
    try:
        return tuple(float(v) for v in cfg[key].split(",") if v.strip())
    except ValueError as exc:
        raise InvalidSpec(f"config key {key}={cfg[key]!r} is not a number list") from exc
