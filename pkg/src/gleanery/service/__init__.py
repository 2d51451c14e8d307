"""HTTP service, configuration, sessions, rate limiting, CLI."""

from .app import AppState, create_app
from .config import load_config, parse_config_text
from .ratelimit import RateLimiter
from .sessions import SESSION_COOKIE, SessionCodec

__all__ = [
    "AppState",
    "create_app",
    "load_config",
    "parse_config_text",
    "RateLimiter",
    "SessionCodec",
    "SESSION_COOKIE",
]
