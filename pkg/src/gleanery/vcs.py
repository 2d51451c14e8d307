"""Version-control integration: deterministic record files, one commit per
reviewed change, OAuth login with collaborator-based accreditation.

Two interchangeable backends exist behind one put_file interface: a local
content-addressed directory (offline and test use) and a hosting-service
contents API. Record files carry the working graph in canonical Turtle
followed by the provenance graph under a ``# PROVENANCE`` delimiter, so a
given record state always serializes to identical bytes.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import secrets
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

from .errors import GleaneryError
from .model import Config
from .rdfio import DEFAULT_PREFIXES, serialize
from .editorial import PublishEvent

__all__ = [
    "IoError",
    "BackendUnavailable",
    "Conflict",
    "AuthFailed",
    "StateMismatch",
    "ExchangeFailed",
    "CollaboratorCheckFailed",
    "ChangeCommit",
    "LocalBackend",
    "RemoteBackend",
    "VcsSync",
    "OAuthApp",
    "Session",
    "PROVENANCE_DELIMITER",
]

PROVENANCE_DELIMITER = "# PROVENANCE"
SESSION_TTL_SECONDS = 24 * 3600


class IoError(GleaneryError):
    code = "IoError"


class BackendUnavailable(GleaneryError):
    pass


class Conflict(GleaneryError):
    pass


class AuthFailed(GleaneryError):
    pass


class StateMismatch(GleaneryError):
    pass


class ExchangeFailed(GleaneryError):
    pass


class CollaboratorCheckFailed(GleaneryError):
    pass


@dataclass(frozen=True)
class ChangeCommit:
    path: str
    content: bytes
    message: str
    author: str
    commit_id: str


@dataclass(frozen=True)
class Session:
    user_id: str
    accredited: bool
    expires_at: float


class LocalBackend:
    """Content-addressed file backend with an append-only journal.

    Layout under the root: ``files/<path>`` (the live tree),
    ``objects/<sha256>`` (blobs), ``vcs-journal.log`` (JSON lines with a
    monotonic id per put). Replaying the journal over the blobs rebuilds
    the exact file tree.
    """

    def __init__(self, root: Path) -> None:
        self.root = Path(root)
        self.files = self.root / "files"
        self.objects = self.root / "objects"
        self.journal = self.root / "vcs-journal.log"

    def put_file(self, path: str, content: bytes, message: str, author: str) -> str:
        digest = hashlib.sha256(content).hexdigest()
        try:
            self.objects.mkdir(parents=True, exist_ok=True)
            (self.objects / digest).write_bytes(content)
            target = self.files / path
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_bytes(content)
            commit_id = str(self._next_id())
            entry = {
                "id": int(commit_id),
                "path": path,
                "sha256": digest,
                "message": message,
                "author": author,
                "at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            }
            with open(self.journal, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry, sort_keys=True) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
        except OSError as exc:
            raise IoError(str(exc)) from exc
        return commit_id

    def _next_id(self) -> int:
        if not self.journal.exists():
            return 1
        last = 0
        for line in self.journal.read_text("utf-8").splitlines():
            if line.strip():
                last = json.loads(line)["id"]
        return last + 1

    def entries(self) -> list[dict]:
        if not self.journal.exists():
            return []
        return [
            json.loads(line)
            for line in self.journal.read_text("utf-8").splitlines()
            if line.strip()
        ]

    def replay(self, destination: Path) -> None:
        """Rebuild the latest file tree from journal + blobs."""
        latest: dict[str, str] = {}
        for entry in self.entries():
            latest[entry["path"]] = entry["sha256"]
        for path, digest in latest.items():
            blob = self.objects / digest
            target = Path(destination) / path
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_bytes(blob.read_bytes())


class RemoteBackend:
    """Read-modify-write against a hosting-service contents API."""

    def __init__(
        self,
        owner: str,
        repo: str,
        branch: str,
        token: str,
        transport,
        api_base: str = "https://api.github.com",
    ) -> None:
        self.owner = owner
        self.repo = repo
        self.branch = branch
        self.token = token
        self.transport = transport
        self.api_base = api_base.rstrip("/")

    def _url(self, path: str) -> str:
        return f"{self.api_base}/repos/{self.owner}/{self.repo}/contents/{path}"

    def _headers(self) -> dict:
        return {
            "Authorization": f"Bearer {self.token}",
            "Accept": "application/vnd.github+json",
        }

    def _current_sha(self, path: str) -> Optional[str]:
        try:
            response = self.transport.request(
                "GET", self._url(path), params={"ref": self.branch}, headers=self._headers()
            )
        except OSError as exc:
            raise BackendUnavailable(str(exc)) from exc
        if response.status == 200:
            doc = response.json()
            return doc.get("sha")
        if response.status == 404:
            return None
        if response.status == 401:
            raise AuthFailed("token rejected")
        raise BackendUnavailable(f"contents lookup returned {response.status}")

    def put_file(self, path: str, content: bytes, message: str, author: str) -> str:
        sha = self._current_sha(path)
        for attempt in range(2):
            payload = {
                "message": message,
                "content": base64.b64encode(content).decode("ascii"),
                "branch": self.branch,
                "committer": {"name": author, "email": f"{author}@records.invalid"},
            }
            if sha is not None:
                payload["sha"] = sha
            try:
                response = self.transport.request(
                    "PUT",
                    self._url(path),
                    data=json.dumps(payload).encode("utf-8"),
                    headers=self._headers(),
                )
            except OSError as exc:
                raise BackendUnavailable(str(exc)) from exc
            if response.status in (200, 201):
                doc = response.json()
                return str(doc.get("commit", {}).get("sha", ""))
            if response.status == 401:
                raise AuthFailed("token rejected")
            if response.status in (409, 422) and attempt == 0:
                sha = self._current_sha(path)  # one refetch-and-retry
                continue
            if response.status in (409, 422):
                raise Conflict(f"sha mismatch persists on {path}")
            raise BackendUnavailable(f"contents update returned {response.status}")
        raise Conflict(f"sha mismatch persists on {path}")


class VcsSync:
    """Binds the editorial publish hook to a backend.

    Puts that fail with BackendUnavailable are queued durably
    (``vcs-retry.jsonl`` in the data directory) and drained before the next
    put, preserving per-path ordering; the publish itself never rolls back.
    """

    def __init__(self, backend, config: Config) -> None:
        self.backend = backend
        self.config = config
        self.commits: list[ChangeCommit] = []
        self.retry_path = Path(config.data_dir) / "vcs-retry.jsonl"

    # --- durable retry queue ------------------------------------------------

    def _pending(self) -> list[dict]:
        if not self.retry_path.exists():
            return []
        return [
            json.loads(line)
            for line in self.retry_path.read_text("utf-8").splitlines()
            if line.strip()
        ]

    def _enqueue(self, path: str, content: bytes, message: str, author: str) -> None:
        entry = {
            "path": path,
            "content": base64.b64encode(content).decode("ascii"),
            "message": message,
            "author": author,
        }
        self.retry_path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.retry_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")

    def retry_pending(self) -> int:
        """Drain the queue in order; stops at the first failure. Returns the
        number of entries committed."""
        pending = self._pending()
        done = 0
        for entry in pending:
            try:
                commit_id = self.backend.put_file(
                    entry["path"],
                    base64.b64decode(entry["content"]),
                    entry["message"],
                    entry["author"],
                )
            except BackendUnavailable:
                break
            self.commits.append(
                ChangeCommit(
                    entry["path"],
                    base64.b64decode(entry["content"]),
                    entry["message"],
                    entry["author"],
                    commit_id,
                )
            )
            done += 1
        remaining = pending[done:]
        if done:
            if remaining:
                with open(self.retry_path, "w", encoding="utf-8") as fh:
                    fh.writelines(json.dumps(e, sort_keys=True) + "\n" for e in remaining)
            else:
                self.retry_path.unlink(missing_ok=True)
        return done

    def record_path(self, event: PublishEvent) -> str:
        return f"records/{event.record_id.template_id}/{event.record_id.local}.ttl"

    def record_file_content(self, event: PublishEvent) -> bytes:
        prefixes = dict(DEFAULT_PREFIXES)
        prefixes[self.config.prefix] = self.config.base_uri
        content = serialize(event.content, "turtle", prefixes=prefixes)
        prov = serialize(event.provenance, "turtle", prefixes=prefixes)
        return content + f"\n{PROVENANCE_DELIMITER}\n\n".encode("ascii") + prov

    @staticmethod
    def _agent_display(event: PublishEvent) -> str:
        agent = event.agent
        return agent.identifier if agent.kind == "authenticated" else f"anon-{agent.identifier}"

    def commit_message(self, event: PublishEvent) -> str:
        fields = ",".join(event.changed_fields)
        return f"{event.verb} {event.record_iri} by {self._agent_display(event)} [fields: {fields}]"

    def on_record_published(self, event: PublishEvent) -> ChangeCommit:
        path = self.record_path(event)
        content = self.record_file_content(event)
        message = self.commit_message(event)
        author = self._agent_display(event)
        if self._pending():
            self.retry_pending()
        if self._pending():
            # earlier puts are still stuck; keep per-path ordering by queuing
            self._enqueue(path, content, message, author)
            return ChangeCommit(path, content, message, author, "queued")
        try:
            commit_id = self.backend.put_file(path, content, message, author)
        except BackendUnavailable:
            self._enqueue(path, content, message, author)
            return ChangeCommit(path, content, message, author, "queued")
        commit = ChangeCommit(path, content, message, author, commit_id)
        self.commits.append(commit)
        return commit


class OAuthApp:
    """Authorization-code flow plus the collaborator accreditation check."""

    def __init__(
        self,
        client_id: str,
        client_secret: str,
        config: Config,
        transport,
        authorize_url: str = "https://github.com/login/oauth/authorize",
        token_url: str = "https://github.com/login/oauth/access_token",
        api_base: str = "https://api.github.com",
        now: Callable[[], float] = time.time,
    ) -> None:
        self.client_id = client_id
        self.client_secret = client_secret
        self.config = config
        self.transport = transport
        self.authorize_url = authorize_url
        self.token_url = token_url
        self.api_base = api_base.rstrip("/")
        self.now = now
        self._pending_states: dict[str, float] = {}

    def new_state_token(self) -> str:
        state = secrets.token_urlsafe(16)
        self._pending_states[state] = self.now() + 600
        return state

    def login_url(self, state_token: str) -> str:
        from urllib.parse import urlencode

        params = urlencode(
            {"client_id": self.client_id, "state": state_token, "scope": "read:user"}
        )
        return f"{self.authorize_url}?{params}"

    def callback(self, code: str, state_token: str) -> Session:
        expiry = self._pending_states.pop(state_token, None)
        if expiry is None or expiry < self.now():
            raise StateMismatch("unknown or expired state token")
        token = self._exchange_code(code)
        user_id = self._fetch_login(token)
        accredited = self._collaborator(user_id, token)
        return Session(user_id, accredited, self.now() + SESSION_TTL_SECONDS)

    def _exchange_code(self, code: str) -> str:
        try:
            response = self.transport.request(
                "POST",
                self.token_url,
                data={
                    "client_id": self.client_id,
                    "client_secret": self.client_secret,
                    "code": code,
                },
                headers={"Accept": "application/json"},
            )
        except OSError as exc:
            raise ExchangeFailed(str(exc)) from exc
        if response.status != 200:
            raise ExchangeFailed(f"token endpoint returned {response.status}")
        token = response.json().get("access_token")
        if not token:
            raise ExchangeFailed("token endpoint returned no access_token")
        return token

    def _fetch_login(self, token: str) -> str:
        try:
            response = self.transport.request(
                "GET", f"{self.api_base}/user", headers={"Authorization": f"Bearer {token}"}
            )
        except OSError as exc:
            raise ExchangeFailed(str(exc)) from exc
        if response.status != 200:
            raise ExchangeFailed(f"user endpoint returned {response.status}")
        login = response.json().get("login")
        if not login:
            raise ExchangeFailed("user endpoint returned no login")
        return str(login)

    def _collaborator(self, user_id: str, token: str) -> bool:
        vcs = self.config.vcs
        if vcs is None:
            return False
        url = f"{self.api_base}/repos/{vcs.owner}/{vcs.repo}/collaborators/{user_id}"
        try:
            response = self.transport.request(
                "GET", url, headers={"Authorization": f"Bearer {token}"}
            )
        except OSError:
            return False  # CollaboratorCheckFailed is treated as accredited=False
        return response.status == 204
