"""Configuration file loading.

One flat key-value text file (``key = value`` lines, ``#`` comments,
optional quotes around values). Exact keys are listed in the README;
secrets never live in the file, only in GLEANERY_* environment variables.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Optional

from ..model import Config, ConfigError, RateLimitConfig, VcsConfig

__all__ = ["parse_config_text", "load_config", "client_settings", "ENV_OAUTH_ID",
           "ENV_OAUTH_SECRET", "ENV_VCS_TOKEN"]

ENV_OAUTH_ID = "GLEANERY_OAUTH_CLIENT_ID"
ENV_OAUTH_SECRET = "GLEANERY_OAUTH_CLIENT_SECRET"
ENV_VCS_TOKEN = "GLEANERY_VCS_TOKEN"

_BOOL = {"true": True, "false": False, "yes": True, "no": False, "1": True, "0": False}


def parse_config_text(text: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
            value = value[1:-1]
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        values[key] = value
    return values


def _as_bool(values: dict[str, str], key: str, default: bool) -> bool:
    raw = values.get(key)
    if raw is None:
        return default
    if raw.lower() not in _BOOL:
        raise ConfigError(f"{key} must be true/false, got {raw!r}")
    return _BOOL[raw.lower()]


def _as_int(values: dict[str, str], key: str, default: int) -> int:
    raw = values.get(key)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {raw!r}") from None


def client_settings(values: dict[str, str]) -> dict[str, dict[str, str]]:
    """All ``clients.<name>.<key>`` entries grouped by client name."""
    out: dict[str, dict[str, str]] = {}
    for key, value in values.items():
        if not key.startswith("clients."):
            continue
        parts = key.split(".")
        if len(parts) != 3:
            raise ConfigError(f"client keys look like clients.<name>.<key>: {key!r}")
        out.setdefault(parts[1], {})[parts[2]] = value
    return out


def config_from_values(values: dict[str, str], base_dir: Optional[Path] = None) -> Config:
    for required in ("base_uri", "prefix", "data_dir"):
        if required not in values:
            raise ConfigError(f"missing required config key {required!r}")
    data_dir = Path(values["data_dir"])
    if base_dir is not None and not data_dir.is_absolute():
        data_dir = Path(base_dir) / data_dir

    vcs = None
    if "vcs.owner" in values or "vcs.repo" in values:
        if not ("vcs.owner" in values and "vcs.repo" in values):
            raise ConfigError("vcs configuration needs both vcs.owner and vcs.repo")
        vcs = VcsConfig(
            owner=values["vcs.owner"],
            repo=values["vcs.repo"],
            branch=values.get("vcs.branch", "main"),
        )

    return Config(
        base_uri=values["base_uri"],
        prefix=values["prefix"],
        data_dir=data_dir,
        endpoint_mode=values.get("endpoint.mode", "embedded"),
        endpoint_url=values.get("endpoint.query_url"),
        endpoint_update_url=values.get("endpoint.update_url"),
        vcs=vcs,
        auth_mode=values.get("auth.mode", "anonymous"),
        rate_limit=RateLimitConfig(
            max_creates=_as_int(values, "rate_limit.max_creates", 5),
            window_seconds=_as_int(values, "rate_limit.window_seconds", 3600),
        ),
        archiver_enabled=_as_bool(values, "archiver.enabled", False),
    )


def load_config(path: Path) -> tuple[Config, dict[str, dict[str, str]]]:
    path = Path(path)
    values = parse_config_text(path.read_text("utf-8"))
    return config_from_values(values, base_dir=path.parent), client_settings(values)


def oauth_credentials() -> Optional[tuple[str, str]]:
    client_id = os.environ.get(ENV_OAUTH_ID)
    client_secret = os.environ.get(ENV_OAUTH_SECRET)
    if client_id and client_secret:
        return client_id, client_secret
    return None


def vcs_token() -> Optional[str]:
    return os.environ.get(ENV_VCS_TOKEN)
