"""Signed-cookie sessions: HMAC over user id, accreditation, and expiry.

No server-side session store; the cookie is self-contained and verified
on every request.
"""

from __future__ import annotations

import base64
import hashlib
import hmac
import secrets
import time
from pathlib import Path
from typing import Callable, Optional

from ..vcs import Session

__all__ = ["SessionCodec", "load_or_create_secret", "SESSION_COOKIE"]

SESSION_COOKIE = "gleanery_session"


def load_or_create_secret(data_dir: Path, filename: str) -> bytes:
    path = Path(data_dir) / filename
    if path.exists():
        return path.read_bytes()
    path.parent.mkdir(parents=True, exist_ok=True)
    secret = secrets.token_bytes(32)
    path.write_bytes(secret)
    return secret


class SessionCodec:
    def __init__(self, secret: bytes, now: Callable[[], float] = time.time) -> None:
        self.secret = secret
        self.now = now

    def _sign(self, payload: bytes) -> str:
        return hmac.new(self.secret, payload, hashlib.sha256).hexdigest()

    def encode(self, session: Session) -> str:
        payload = f"{session.user_id}|{int(session.accredited)}|{int(session.expires_at)}"
        raw = payload.encode("utf-8")
        return base64.urlsafe_b64encode(raw).decode("ascii") + "." + self._sign(raw)

    def decode(self, value: str) -> Optional[Session]:
        try:
            encoded, signature = value.rsplit(".", 1)
            raw = base64.urlsafe_b64decode(encoded.encode("ascii"))
        except (ValueError, TypeError):
            return None
        if not hmac.compare_digest(self._sign(raw), signature):
            return None
        try:
            user_id, accredited, expires = raw.decode("utf-8").rsplit("|", 2)
            expires_at = float(expires)
        except (ValueError, UnicodeDecodeError):
            return None
        if expires_at <= self.now():
            return None
        return Session(user_id, accredited == "1", expires_at)
