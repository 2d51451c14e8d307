"""Shared wiring for route-level tests: an app over mock transports with an
OAuth flow that can mint accredited or plain sessions on demand."""

from __future__ import annotations

import json

from fastapi.testclient import TestClient

from gleanery.clients import ClientRegistry, MockTransport, Response
from gleanery.model import Config, VcsConfig
from gleanery.service.app import create_app
from gleanery.vcs import LocalBackend, OAuthApp

from .conftest import COLLECTION_TEMPLATE, TickingClock


def oauth_transport(collaborators: dict[str, bool]):
    """Scripted OAuth + collaborators endpoints; login name comes from the code."""
    transport = MockTransport()

    def respond(call):
        if "access_token" in call["url"]:
            return MockTransport.json_response(
                {"access_token": "tok-" + call["data"]["code"], "token_type": "bearer"}
            )
        if call["url"].endswith("/user"):
            user = call["headers"]["Authorization"].split("tok-")[-1]
            return MockTransport.json_response({"login": user})
        if "/collaborators/" in call["url"]:
            user = call["url"].rsplit("/", 1)[-1]
            return Response(204 if collaborators.get(user) else 404, {}, b"")
        raise AssertionError(call["url"])

    transport.route(lambda call: True, respond)
    return transport


class Harness:
    def __init__(self, tmp_path, *, auth_mode="oauth", registry=None, max_creates=5,
                 window_seconds=3600, archiver_enabled=False):
        tmp_path.mkdir(parents=True, exist_ok=True)
        (tmp_path / "templates").mkdir(exist_ok=True)
        (tmp_path / "templates" / "collections.json").write_text(json.dumps(COLLECTION_TEMPLATE))
        (tmp_path / "vocabularies").mkdir(exist_ok=True)
        from gleanery.model import RateLimitConfig

        self.clock = TickingClock()
        vcs = VcsConfig("org", "repo", "main") if auth_mode == "oauth" else None
        self.config = Config(
            base_uri="https://ex.org/",
            prefix="ex",
            data_dir=tmp_path,
            auth_mode=auth_mode,
            vcs=vcs,
            rate_limit=RateLimitConfig(max_creates, window_seconds),
            archiver_enabled=archiver_enabled,
        )
        self.oauth_transport = oauth_transport({"reviewer": True, "casual": False})
        oauth = (
            OAuthApp(
                "cid", "csecret", self.config, self.oauth_transport, now=self.clock.now_epoch
            )
            if auth_mode == "oauth"
            else None
        )
        self.backend = LocalBackend(tmp_path / "vcs") if vcs else None
        self.app = create_app(
            self.config,
            registry=registry or ClientRegistry(),
            oauth=oauth,
            vcs_backend=self.backend,
            clock=self.clock,
            now=self.clock.now_epoch,
        )
        self.state = self.app.state.gleanery
        self.client = TestClient(self.app, raise_server_exceptions=True)

    def login(self, user: str) -> TestClient:
        """A TestClient carrying a session cookie for `user`."""
        client = TestClient(self.app)
        login = client.get("/oauth/login", follow_redirects=False)
        assert login.status_code == 302
        from urllib.parse import parse_qs, urlsplit

        state_token = parse_qs(urlsplit(login.headers["location"]).query)["state"][0]
        callback = client.get(
            f"/oauth/callback?code={user}&state={state_token}", follow_redirects=False
        )
        assert callback.status_code == 302
        return client


def create_record_payload(title="Zeri photo archive", **extra):
    values = {"title": [title]}
    values.update(extra)
    return {"template_id": "collections", "values": values}
