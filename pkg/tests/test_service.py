import json

import pytest

from gleanery.service.config import parse_config_text, config_from_values, client_settings
from gleanery.service.ratelimit import RateLimiter
from gleanery.service.sessions import SessionCodec
from gleanery.vcs import Session
from gleanery.model import ConfigError

from .conftest import COLLECTION_TEMPLATE, TickingClock
from .service_helpers import Harness, create_record_payload


@pytest.fixture
def harness(tmp_path):
    return Harness(tmp_path)


@pytest.fixture
def anon_harness(tmp_path):
    return Harness(tmp_path, auth_mode="anonymous")


class TestConfigFile:
    def test_parse_flat_keys(self):
        values = parse_config_text(
            "# comment\nbase_uri = https://ex.org/\nprefix = ex\n"
            'data_dir = "./data"\nrate_limit.max_creates = 7\n'
            "clients.search.base_url = https://kb.example/api\n"
        )
        config = config_from_values(values)
        assert config.base_uri == "https://ex.org/"
        assert config.rate_limit.max_creates == 7
        assert client_settings(values) == {"search": {"base_url": "https://kb.example/api"}}

    def test_missing_required_key(self):
        with pytest.raises(ConfigError):
            config_from_values({"base_uri": "https://ex.org/"})

    def test_oauth_without_vcs_rejected(self):
        values = {
            "base_uri": "https://ex.org/",
            "prefix": "ex",
            "data_dir": "./d",
            "auth.mode": "oauth",
        }
        with pytest.raises(ConfigError):
            config_from_values(values)

    def test_bad_line_rejected(self):
        with pytest.raises(ConfigError):
            parse_config_text("this line has no equals sign")


class TestRateLimiter:
    def test_boundary_at_max(self):
        clock = TickingClock()
        limiter = RateLimiter(5, 3600, clock.now_epoch)
        assert all(limiter.check("ip1") for _ in range(5))
        assert limiter.check("ip1") is False

    def test_window_expiry_restores_allowance(self):
        clock = TickingClock()
        limiter = RateLimiter(2, 60, clock.now_epoch)
        assert limiter.check("ip1") and limiter.check("ip1")
        assert limiter.check("ip1") is False
        clock.tick(60)
        assert limiter.check("ip1") is True

    def test_keys_independent(self):
        clock = TickingClock()
        limiter = RateLimiter(1, 60, clock.now_epoch)
        assert limiter.check("a")
        assert limiter.check("b")
        assert limiter.check("a") is False


class TestSessions:
    def test_round_trip(self):
        clock = TickingClock()
        codec = SessionCodec(b"secret" * 6, clock.now_epoch)
        session = Session("alice", True, clock.now_epoch() + 100)
        assert codec.decode(codec.encode(session)) == session

    def test_tampered_cookie_rejected(self):
        clock = TickingClock()
        codec = SessionCodec(b"secret" * 6, clock.now_epoch)
        value = codec.encode(Session("alice", False, clock.now_epoch() + 100))
        import base64

        raw = base64.urlsafe_b64decode(value.split(".")[0])
        forged_raw = raw.replace(b"|0|", b"|1|")
        forged = base64.urlsafe_b64encode(forged_raw).decode() + "." + value.split(".")[1]
        assert codec.decode(forged) is None

    def test_expired_cookie_rejected(self):
        clock = TickingClock()
        codec = SessionCodec(b"secret" * 6, clock.now_epoch)
        value = codec.encode(Session("alice", True, clock.now_epoch() + 5))
        clock.tick(10)
        assert codec.decode(value) is None


class TestRouteTable:
    def test_all_contract_routes_present(self, harness):
        from gleanery.service.app import route_table

        table = set(route_table(harness.app))
        expected = {
            ("GET", "/"),
            ("GET", "/api/templates"),
            ("PUT", "/api/templates/{template_id}"),
            ("GET", "/api/form/{template_id}"),
            ("POST", "/api/records"),
            ("GET", "/api/records/{local}"),
            ("PUT", "/api/records/{local}"),
            ("POST", "/api/records/{local}/publish"),
            ("DELETE", "/api/records/{local}"),
            ("GET", "/api/suggest"),
            ("GET", "/api/duplicates"),
            ("GET", "/api/ner"),
            ("GET", "/api/explore/{template_id}"),
            ("GET", "/api/search"),
            ("GET", "/api/export.nq"),
            ("GET", "/datamodel"),
            ("GET", "/vocab/{vocabulary_id}"),
            ("GET", "/sparql"),
            ("POST", "/sparql"),
            ("GET", "/oauth/login"),
            ("GET", "/oauth/callback"),
            ("GET", "/{resource_name}/{local}"),
        }
        assert expected <= table


class TestRecordRoutes:
    def test_create_read_cycle(self, harness):
        response = harness.client.post("/api/records", json=create_record_payload())
        assert response.status_code == 201
        body = response.json()
        assert body["ok"] is True
        local = body["data"]["id"]
        read = harness.client.get(f"/api/records/{local}").json()
        assert read["data"]["stage"] == "unmodified"
        assert read["data"]["values"]["title"][0]["value"] == "Zeri photo archive"

    def test_validation_error_as_envelope(self, harness):
        response = harness.client.post(
            "/api/records", json={"template_id": "collections", "values": {}}
        )
        assert response.status_code == 422
        error = response.json()["error"]
        assert error["code"] == "MissingRequired"
        assert "title" in error["message"]

    def test_unknown_template_404(self, harness):
        response = harness.client.post(
            "/api/records", json={"template_id": "nope", "values": {}}
        )
        assert response.status_code == 404
        assert response.json()["error"]["code"] == "NotFound"

    def test_publish_requires_accreditation(self, harness):
        local = harness.client.post("/api/records", json=create_record_payload()).json()["data"]["id"]
        anon = harness.client.post(f"/api/records/{local}/publish")
        assert anon.status_code == 403
        casual = harness.login("casual")
        denied = casual.post(f"/api/records/{local}/publish")
        assert denied.status_code == 403
        reviewer = harness.login("reviewer")
        allowed = reviewer.post(f"/api/records/{local}/publish")
        assert allowed.status_code == 200
        assert allowed.json()["data"]["stage"] == "published"

    def test_delete_draft_only(self, harness):
        reviewer = harness.login("reviewer")
        local = reviewer.post("/api/records", json=create_record_payload()).json()["data"]["id"]
        reviewer.post(f"/api/records/{local}/publish")
        denied = reviewer.delete(f"/api/records/{local}")
        assert denied.status_code == 422
        assert denied.json()["error"]["code"] == "CannotDeletePublished"

    def test_record_page_content_negotiation(self, harness):
        reviewer = harness.login("reviewer")
        created = reviewer.post("/api/records", json=create_record_payload()).json()["data"]
        reviewer.post(f"/api/records/{created['id']}/publish")
        html = harness.client.get(f"/collection/{created['id']}")
        assert html.status_code == 200
        assert "Zeri photo archive" in html.text
        assert 'property="http://purl.org/dc/terms/title"' in html.text
        turtle = harness.client.get(
            f"/collection/{created['id']}", headers={"accept": "text/turtle"}
        )
        assert turtle.status_code == 200
        assert turtle.headers["content-type"].startswith("text/turtle")
        assert "dcterms:title" in turtle.text

    def test_unpublished_record_page_404(self, harness):
        local = harness.client.post("/api/records", json=create_record_payload()).json()["data"]["id"]
        response = harness.client.get(f"/collection/{local}")
        assert response.status_code == 404


class TestRateLimitRoute:
    def test_sixth_create_denied_and_window_recovers(self, tmp_path):
        harness = Harness(tmp_path, auth_mode="anonymous", max_creates=5, window_seconds=60)
        for i in range(5):
            response = harness.client.post(
                "/api/records", json=create_record_payload(title=f"rec {i}")
            )
            assert response.status_code == 201
        denied = harness.client.post("/api/records", json=create_record_payload(title="over"))
        assert denied.status_code == 429
        harness.clock.tick(60)
        again = harness.client.post("/api/records", json=create_record_payload(title="fresh"))
        assert again.status_code == 201

    def test_accredited_bypasses_limit(self, tmp_path):
        harness = Harness(tmp_path, max_creates=2, window_seconds=3600)
        reviewer = harness.login("reviewer")
        for i in range(5):
            response = reviewer.post(
                "/api/records", json=create_record_payload(title=f"rec {i}")
            )
            assert response.status_code == 201


class TestSparqlRoutes:
    def seed(self, harness):
        reviewer = harness.login("reviewer")
        created = reviewer.post("/api/records", json=create_record_payload()).json()["data"]
        reviewer.post(f"/api/records/{created['id']}/publish")
        return created

    def test_get_query_returns_results_json(self, harness):
        self.seed(harness)
        response = harness.client.get(
            "/sparql",
            params={"query": "SELECT ?s WHERE { GRAPH ?g { ?s ?p ?o } } LIMIT 2"},
            headers={"accept": "application/sparql-results+json"},
        )
        assert response.status_code == 200
        assert response.headers["content-type"].startswith("application/sparql-results+json")
        doc = response.json()
        assert doc["head"]["vars"] == ["s"]
        assert len(doc["results"]["bindings"]) == 2

    def test_post_form_encoded(self, harness):
        self.seed(harness)
        response = harness.client.post(
            "/sparql",
            data={"query": "SELECT ?g WHERE { GRAPH ?g { ?s ?p ?o } } LIMIT 1"},
        )
        assert response.status_code == 200

    def test_unsupported_feature_structured_error(self, harness):
        response = harness.client.get(
            "/sparql",
            params={"query": "SELECT ?s WHERE { OPTIONAL { ?s ?p ?o } }"},
            headers={"accept": "application/sparql-results+json"},
        )
        assert response.status_code == 400
        error = response.json()["error"]
        assert error["code"] == "UnsupportedFeature"
        assert "OPTIONAL" in error["message"]

    def test_parse_error_400(self, harness):
        response = harness.client.get("/sparql", params={"query": "SELECT WHERE {"})
        assert response.status_code == 400
        assert response.json()["error"]["code"] == "ParseError"

    def test_export_round_trip(self, harness):
        self.seed(harness)
        dump = harness.client.get("/api/export.nq")
        assert dump.status_code == 200
        from gleanery.rdfio import parse

        dataset = parse(dump.content, "nquads")
        assert len(dataset) == len(harness.state.store.export_all())


class TestTemplateRoutes:
    def test_list_templates(self, harness):
        body = harness.client.get("/api/templates").json()
        assert body["data"][0]["template_id"] == "collections"

    def test_form_model_bindings(self, harness):
        body = harness.client.get("/api/form/collections").json()
        widgets = {w["id"]: w for w in body["data"]["widgets"]}
        assert widgets["creator"]["suggest_endpoint"] == "/api/suggest"
        assert widgets["title"]["duplicate_endpoint"] == "/api/duplicates"
        assert widgets["bio"]["ner_endpoint"] == "/api/ner"

    def test_put_template_requires_accreditation(self, harness):
        doc = json.dumps(
            {
                "template_id": "things",
                "resource_name": "thing",
                "class_iri": "https://ex.org/vocab/Thing",
                "label": "Thing",
                "fields": [
                    {
                        "id": "name",
                        "label": "Name",
                        "widget": "literal",
                        "property_iri": "http://purl.org/dc/terms/title",
                        "required": True,
                        "cardinality": "one",
                        "disambiguate": True,
                    }
                ],
            }
        )
        denied = harness.client.put("/api/templates/things", content=doc)
        assert denied.status_code == 403
        reviewer = harness.login("reviewer")
        allowed = reviewer.put("/api/templates/things", content=doc)
        assert allowed.status_code == 200
        assert harness.client.get("/api/form/things").status_code == 200


class TestRecordListing:
    def test_lists_drafts_and_published_with_live_stage(self, harness):
        reviewer = harness.login("reviewer")
        a = harness.client.post("/api/records", json=create_record_payload(title="Draft A")).json()["data"]
        b = reviewer.post("/api/records", json=create_record_payload(title="Pub B")).json()["data"]
        reviewer.post(f"/api/records/{b['id']}/publish")
        rows = harness.client.get("/api/records", params={"template": "collections"}).json()["data"]
        by_id = {r["id"]: r for r in rows}
        assert by_id[a["id"]]["stage"] == "unmodified"
        assert by_id[b["id"]]["stage"] == "published"
        assert by_id[b["id"]]["ever_published"] is True
        drafts = harness.client.get(
            "/api/records", params={"template": "collections", "stage": "unmodified"}
        ).json()["data"]
        assert [r["id"] for r in drafts] == [a["id"]]


class TestNerKeywordValues:
    def test_approved_candidates_ride_in_ner_field_values(self, harness):
        reviewer = harness.login("reviewer")
        payload = create_record_payload(
            bio=[
                "Federico Zeri studied in Rome.",
                {"iri": "https://kb.example/entity/rome", "label": "Rome"},
                {"label": "Unlinked keyword"},
            ]
        )
        created = reviewer.post("/api/records", json=payload).json()["data"]
        read = reviewer.get(f"/api/records/{created['id']}").json()["data"]
        kinds = sorted(v["type"] for v in read["values"]["bio"])
        assert kinds == ["entity", "entity", "literal"]  # new entity was minted
        labels = {v.get("label") for v in read["values"]["bio"] if v["type"] == "entity"}
        assert labels == {"Rome", "Unlinked keyword"}


class TestLinkingRoutes:
    def test_suggest_endpoint(self, harness):
        harness.client.post(
            "/api/records",
            json=create_record_payload(
                creator=[{"iri": "https://kb.example/entity/zeri", "label": "Federico Zeri"}]
            ),
        )
        body = harness.client.get(
            "/api/suggest", params={"template": "collections", "field": "creator", "q": "zeri"}
        ).json()
        assert body["data"]["suggestions"]
        assert body["data"]["degraded"] is False

    def test_duplicates_endpoint(self, harness):
        harness.client.post("/api/records", json=create_record_payload(title="Federico Zeri"))
        body = harness.client.get(
            "/api/duplicates", params={"template": "collections", "value": "federico ZERI."}
        ).json()
        assert len(body["data"]) == 1

    def test_ner_endpoint_uses_builtin(self, harness):
        body = harness.client.get(
            "/api/ner", params={"text": "Federico Zeri studied in Rome."}
        ).json()
        surfaces = {c["surface"] for c in body["data"]["candidates"]}
        assert {"Federico Zeri", "Rome"} <= surfaces


class TestExploreRoutes:
    def seed(self, harness, n=4):
        reviewer = harness.login("reviewer")
        for i in range(n):
            payload = create_record_payload(
                title=f"Collection {i}",
                keywords=["music"] if i % 2 == 0 else ["art"],
            )
            created = reviewer.post("/api/records", json=payload).json()["data"]
            reviewer.post(f"/api/records/{created['id']}/publish")
        return reviewer

    def test_facets_and_records(self, harness):
        self.seed(harness)
        body = harness.client.get("/api/explore/collections").json()["data"]
        facets = {f["field_id"]: f for f in body["facets"]}
        counts = {b["label"]: b["count"] for b in facets["keywords"]["buckets"]}
        assert counts == {"music": 2, "art": 2}
        assert len(body["records"]) == 4

    def test_facet_constraint_filtering(self, harness):
        self.seed(harness)
        body = harness.client.get(
            "/api/explore/collections", params={"f.keywords": "music"}
        ).json()["data"]
        assert len(body["records"]) == 2

    def test_search_route(self, harness):
        self.seed(harness)
        body = harness.client.get("/api/search", params={"q": "Collection 1"}).json()
        assert [s["label"] for s in body["data"]] == ["Collection 1"]

    def test_home_and_datamodel_pages_render(self, harness):
        self.seed(harness, n=1)
        assert "Catalogue" in harness.client.get("/").text
        page = harness.client.get("/datamodel")
        assert "dc/terms/title" in page.text.replace("&#x27;", "'")


class TestSpaMount:
    def test_spa_served_from_app_when_built(self, tmp_path):
        spa = tmp_path / "dist"
        spa.mkdir()
        (spa / "index.html").write_text("<!DOCTYPE html><title>client</title>")
        import json as _json

        workdir = tmp_path / "site"
        workdir.mkdir()
        (workdir / "templates").mkdir()
        (workdir / "templates" / "collections.json").write_text(_json.dumps(COLLECTION_TEMPLATE))
        from fastapi.testclient import TestClient

        from gleanery.model import Config
        from gleanery.service.app import create_app

        config = Config(base_uri="https://ex.org/", prefix="ex", data_dir=workdir)
        app = create_app(config, spa_dir=spa)
        client = TestClient(app)
        response = client.get("/app/")
        assert response.status_code == 200
        assert "client" in response.text
        assert client.get("/api/templates").status_code == 200


class TestArchiverHook:
    def test_archive_flagged_url_sent_on_create(self, tmp_path):
        from gleanery.clients import ArchiverClient, ClientRegistry, MockTransport, Response

        transport = MockTransport(
            default=Response(302, {"Location": "/web/2024/https://site.example/x"}, b"")
        )
        registry = ClientRegistry(
            archiver=ArchiverClient("wayback", "https://archive.example", transport)
        )
        harness = Harness(tmp_path, registry=registry, archiver_enabled=True)
        harness.client.post(
            "/api/records",
            json=create_record_payload(homepage=["https://site.example/x"]),
        )
        assert transport.call_count("/save/") == 1
        context = harness.state.store.graph("https://ex.org/context/")
        assert len(context) == 1

    def test_archiver_failure_never_blocks(self, tmp_path):
        from gleanery.clients import ArchiverClient, ClientRegistry, MockTransport, Response

        transport = MockTransport(default=Response(503, {}, b""))
        registry = ClientRegistry(
            archiver=ArchiverClient("wayback", "https://archive.example", transport)
        )
        harness = Harness(tmp_path, registry=registry, archiver_enabled=True)
        response = harness.client.post(
            "/api/records",
            json=create_record_payload(homepage=["https://site.example/x"]),
        )
        assert response.status_code == 201

    def test_unflagged_fields_never_sent(self, tmp_path):
        from gleanery.clients import ArchiverClient, ClientRegistry, MockTransport

        transport = MockTransport()
        registry = ClientRegistry(
            archiver=ArchiverClient("wayback", "https://archive.example", transport)
        )
        harness = Harness(tmp_path, registry=registry, archiver_enabled=True)
        harness.client.post("/api/records", json=create_record_payload())
        assert transport.requests == []
