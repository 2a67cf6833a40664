"""Flat ``key = value`` configuration files."""

from pathlib import Path

from .errors import ConfigError


def read_flat_config(path):
    """Parse a flat config file into a dict of strings.

    Blank lines and lines starting with ``#`` are ignored. Keys are
    stripped; values keep inner whitespace.
    """
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        out[key] = value.strip()
    return out


def coerce_fields(cls, raw, ignore_unknown=False):
    """Build keyword arguments for dataclass ``cls`` from string values."""
    import dataclasses

    kwargs = {}
    fields = {f.name: f for f in dataclasses.fields(cls)}
    for key, value in raw.items():
        if key not in fields:
            if ignore_unknown:
                continue
            raise ConfigError(f"unknown key {key!r} for {cls.__name__}")
        default = fields[key].default
        kwargs[key] = _coerce(value, default, key)
    return kwargs


def _coerce(value, default, key):
    if isinstance(default, bool):
        if value.lower() in ("1", "true", "yes", "on"):
            return True
        if value.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: not a boolean: {value!r}")
    try:
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float):
            return float(value)
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from None
    if default is None and value.lower() in ("none", ""):
        return None
    if default is None:
        for conv in (int, float):
            try:
                return conv(value)
            except ValueError:
                pass
    return value
