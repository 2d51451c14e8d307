"""The composition root: HTTP API, server-rendered pages, SPARQL protocol
endpoint, sessions, and rate limiting wired over the domain modules.

All JSON responses use one envelope: {"ok": true, "data": ...} or
{"ok": false, "error": {"code", "message"}} with error codes taken verbatim
from the domain error classes.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from pathlib import Path
from typing import Callable, Optional

from fastapi import FastAPI, Request
from fastapi.responses import HTMLResponse, JSONResponse, PlainTextResponse, RedirectResponse

from ..clients import CachedVocabMeta, ClientRegistry, registry_from_config
from ..editorial import AgentRef, EditorialEngine, utc_now
from ..errors import Forbidden, GleaneryError, NotFound
from ..explore import ExploreService
from ..linking import LinkingService
from ..model import Config, Term, context_graph_iri, iri, pub_graph_iri
from ..rdfio import parse, record_label, serialize
from ..rdfio.mapping import ContentGraph
from ..rdfio.namespaces import local_vocab
from ..rdfio.syntax import parse_term_text
from ..store import (
    ParseError,
    SparqlProtocolClient,
    UnsupportedFeature,
    open_store,
    parse_query,
    results_to_json,
)
from ..templates import (
    Entity,
    Literal,
    TemplateStore,
    ValidatedRecordData,
    form_model,
    parse_template,
    serialize_template,
    validate_submission,
)
from ..vcs import LocalBackend, OAuthApp, RemoteBackend, Session, VcsSync
from . import pages
from .config import oauth_credentials, vcs_token
from .ratelimit import RateLimiter
from .sessions import SESSION_COOKIE, SessionCodec, load_or_create_secret

log = logging.getLogger("gleanery")

_STATUS_BY_CODE = {
    "NotFound": 404,
    "Forbidden": 403,
    "UnknownVocabulary": 404,
    "RemoteUnreachable": 502,
    "BackendUnavailable": 502,
    "StoreUnavailable": 502,
    "JournalWriteFailed": 500,
    "MintCollision": 503,
}


def _status_for(exc: GleaneryError) -> int:
    return _STATUS_BY_CODE.get(exc.code, 422)


def ok(data, status: int = 200) -> JSONResponse:
    return JSONResponse({"ok": True, "data": data}, status_code=status)


def fail(exc: GleaneryError, status: Optional[int] = None) -> JSONResponse:
    return JSONResponse(
        {"ok": False, "error": {"code": exc.code, "message": str(exc)}},
        status_code=status or _status_for(exc),
    )


def term_to_json(term: Term) -> dict:
    from ..rdfio.syntax import encode_term

    out: dict = {"key": encode_term(term)}
    if term.is_iri:
        out.update({"type": "uri", "value": term.value})
    elif term.is_blank:
        out.update({"type": "bnode", "value": term.value})
    else:
        out.update({"type": "literal", "value": term.value})
        if term.language:
            out["xml:lang"] = term.language
        if term.datatype:
            out["datatype"] = term.datatype
    return out


def value_to_json(value) -> dict:
    if isinstance(value, Literal):
        out = {"type": "literal", "value": value.text}
        if value.datatype:
            out["datatype"] = value.datatype
        return out
    if isinstance(value, Entity):
        return {"type": "entity", "iri": value.iri, "label": value.label}
    return {"type": "new_entity", "label": value.label}


class AppState:
    """Everything a request handler needs, built once per process."""

    def __init__(
        self,
        config: Config,
        *,
        templates: Optional[TemplateStore] = None,
        store=None,
        registry: Optional[ClientRegistry] = None,
        transport=None,
        oauth: Optional[OAuthApp] = None,
        vcs_backend=None,
        clock: Callable[[], str] = utc_now,
        now: Callable[[], float] = time.time,
        client_settings: Optional[dict] = None,
    ) -> None:
        self.config = config
        self.now = now
        self.clock = clock
        config.data_dir.mkdir(parents=True, exist_ok=True)
        self.templates = templates or TemplateStore(config.data_dir)
        self.store = store if store is not None else open_store(config, transport)

        if registry is not None:
            self.registry = registry
        elif client_settings and transport is not None:
            self.registry = registry_from_config(client_settings, transport)
        else:
            self.registry = ClientRegistry()

        self.vcs_sync = None
        if vcs_backend is None and config.vcs is not None:
            token = vcs_token()
            if token and transport is not None:
                vcs_backend = RemoteBackend(
                    config.vcs.owner, config.vcs.repo, config.vcs.branch, token, transport
                )
            else:
                vcs_backend = LocalBackend(config.data_dir / "vcs")
        if vcs_backend is not None:
            self.vcs_sync = VcsSync(vcs_backend, config)

        self.engine = EditorialEngine(
            self.store,
            self.templates,
            config,
            clock=clock,
            publish_hook=self.vcs_sync.on_record_published if self.vcs_sync else None,
            hook_failure_log=log.warning,
        )
        self.vocab_meta = CachedVocabMeta(self.registry.vocab_meta, self.store, config, clock)
        self.linking = LinkingService(self.engine, self.registry)
        self.explore = ExploreService(self.engine, self.vocab_meta)
        self.rate_limiter = RateLimiter(
            config.rate_limit.max_creates, config.rate_limit.window_seconds, now
        )
        self.sessions = SessionCodec(
            load_or_create_secret(config.data_dir, ".session-secret"), now
        )
        self._ip_salt = load_or_create_secret(config.data_dir, ".ip-salt")
        self.oauth = oauth
        if self.oauth is None and config.auth_mode == "oauth":
            credentials = oauth_credentials()
            if credentials and transport is not None:
                self.oauth = OAuthApp(credentials[0], credentials[1], config, transport, now=now)

        self.remote_fallback = None
        if config.endpoint_mode == "embedded" and config.endpoint_url and transport is not None:
            self.remote_fallback = SparqlProtocolClient(
                config.endpoint_url, config.endpoint_update_url, transport
            )

    # --- request helpers ---------------------------------------------------

    def ip_hash(self, request: Request) -> str:
        host = request.client.host if request.client else "unknown"
        return hashlib.sha256(self._ip_salt + host.encode("utf-8")).hexdigest()[:16]

    def session_of(self, request: Request) -> Optional[Session]:
        cookie = request.cookies.get(SESSION_COOKIE)
        if not cookie:
            return None
        return self.sessions.decode(cookie)

    def agent_of(self, request: Request) -> AgentRef:
        session = self.session_of(request)
        if session is not None:
            return AgentRef("authenticated", session.user_id, session.accredited)
        return AgentRef("anonymous", self.ip_hash(request))


def _raw_values(payload: dict) -> dict:
    """JSON field values back into validate_submission's raw shape."""
    raw = {}
    for field_id, entries in (payload or {}).items():
        if not isinstance(entries, list):
            entries = [entries]
        cleaned = []
        for entry in entries:
            if isinstance(entry, dict) and entry.get("type") == "literal":
                cleaned.append(entry.get("value", ""))
            elif isinstance(entry, dict) and entry.get("type") in ("entity", "new_entity"):
                cleaned.append({k: v for k, v in entry.items() if k in ("iri", "label")})
            else:
                cleaned.append(entry)
        raw[field_id] = cleaned
    return raw


def route_table(app: FastAPI) -> list[tuple[str, str]]:
    """The declarative route list: sorted (method, path) pairs."""
    out = []
    for route in app.routes:
        methods = getattr(route, "methods", None) or ()
        for method in methods:
            if method != "HEAD":
                out.append((method, route.path))
    return sorted(out)


def create_app(config: Config, spa_dir=None, **kwargs) -> FastAPI:
    state = AppState(config, **kwargs)
    app = FastAPI(title="gleanery", docs_url=None, redoc_url=None, openapi_url=None)
    app.state.gleanery = state

    if spa_dir is not None and Path(spa_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/app", StaticFiles(directory=str(spa_dir), html=True), name="app")

    @app.exception_handler(GleaneryError)
    async def domain_error(request: Request, exc: GleaneryError):
        return fail(exc)

    # --- pages ----------------------------------------------------------------

    @app.get("/", response_class=HTMLResponse)
    def home():
        rows = [(t.template_id, t.resource_name, t.label) for t in state.templates.all()]
        return HTMLResponse(pages.home_page(rows))

    @app.get("/datamodel")
    def datamodel(request: Request):
        rows = state.explore.datamodel_page()
        if "application/json" in request.headers.get("accept", ""):
            return ok([row.__dict__ for row in rows])
        return HTMLResponse(pages.datamodel_html(rows))

    @app.get("/vocab/{vocabulary_id}")
    def vocab(vocabulary_id: str, request: Request):
        rows = state.explore.vocab_page(vocabulary_id)
        if "application/json" in request.headers.get("accept", ""):
            return ok([{"term": t, "label": l, "usage_count": c} for t, l, c in rows])
        return HTMLResponse(pages.vocab_html(vocabulary_id, rows))

    # --- template API -----------------------------------------------------------

    @app.get("/api/templates")
    def list_templates():
        return ok([json.loads(serialize_template(t)) for t in state.templates.all()])

    @app.put("/api/templates/{template_id}")
    async def put_template(template_id: str, request: Request):
        agent = state.agent_of(request)
        if not agent.accredited:
            return fail(Forbidden("template editing requires an accredited user"))
        body = await request.body()
        template = parse_template(body.decode("utf-8"))
        if template.template_id != template_id:
            return fail(
                GleaneryError(f"path names {template_id!r} but document says {template.template_id!r}")
            )
        state.templates.save(template)
        return ok(json.loads(serialize_template(template)))

    @app.get("/api/form/{template_id}")
    def form(template_id: str):
        template = state.templates.get(template_id)
        spec = form_model(template, state.templates.vocabularies())
        widgets = []
        for w in spec.widgets:
            field = w.field
            widgets.append(
                {
                    "id": field.id,
                    "label": field.label,
                    "widget": field.widget,
                    "property_iri": field.property_iri,
                    "required": field.required,
                    "cardinality": field.cardinality,
                    "disambiguate": field.disambiguate,
                    "suggest_endpoint": w.suggest_endpoint,
                    "suggest_sources": list(w.suggest_sources),
                    "ner_endpoint": w.ner_endpoint,
                    "duplicate_endpoint": w.duplicate_endpoint,
                    "vocabulary_terms": [
                        {"term_iri": t, "label": l} for t, l in w.vocabulary_terms
                    ],
                }
            )
        return ok({"template_id": spec.template_id, "widgets": widgets})

    # --- record API ----------------------------------------------------------------

    def _record_id(template_id: str, local: str):
        from ..model import RecordId

        template = state.templates.get(template_id)  # NotFound if missing
        return RecordId(local, template.template_id)

    def _find_record(local: str):
        from ..model import RecordId

        for template in state.templates.all():
            candidate = RecordId(local, template.template_id)
            try:
                state.engine.record_state(candidate)
                return candidate
            except GleaneryError:
                continue
        raise NotFound(f"no record {local!r}")

    async def _json_body(request: Request) -> dict:
        try:
            return json.loads(await request.body() or b"{}")
        except json.JSONDecodeError as exc:
            raise GleaneryError(f"request body is not JSON: {exc}") from exc

    @app.get("/api/session")
    def session_info(request: Request):
        session = state.session_of(request)
        if session is None:
            return ok({"authenticated": False, "accredited": False,
                       "auth_mode": state.config.auth_mode})
        return ok(
            {
                "authenticated": True,
                "accredited": session.accredited,
                "user_id": session.user_id,
                "auth_mode": state.config.auth_mode,
            }
        )

    @app.get("/api/records")
    def list_records(request: Request):
        """Review listing: all records (drafts included) with live stage."""
        template_filter = request.query_params.get("template")
        stage_filter = request.query_params.get("stage")
        from ..model import RecordId, working_graph_iri
        from ..rdfio import record_label
        from ..rdfio.mapping import ContentGraph

        out = []
        for template in state.templates.all():
            if template_filter and template.template_id != template_filter:
                continue
            prefix = f"{state.config.base_uri}{template.resource_name}/"
            for graph_iri in state.store.graph_iris():
                if not graph_iri.endswith("/prov/") or not graph_iri.startswith(prefix):
                    continue
                record_iri = graph_iri[: -len("/prov/")]
                record_id = RecordId(record_iri.rsplit("/", 1)[-1], template.template_id)
                try:
                    stateinfo = state.engine.record_state(record_id)
                except GleaneryError:
                    continue
                if stage_filter and stateinfo.stage != stage_filter:
                    continue
                working = state.store.graph(working_graph_iri(record_iri))
                label = record_label(
                    ContentGraph(working_graph_iri(record_iri), working), template, record_iri
                )
                changed_fields: list[str] = []
                if stateinfo.ever_published and stateinfo.stage == "modified":
                    changed_fields = list(
                        state.engine.changed_fields_since_publication(record_id)
                    )
                last = stateinfo.history[-1]
                out.append(
                    {
                        "id": record_id.local,
                        "template_id": template.template_id,
                        "iri": record_iri,
                        "label": label,
                        "stage": stateinfo.stage,
                        "ever_published": stateinfo.ever_published,
                        "updated_at": last.at,
                        "updated_by": last.agent.identifier,
                        "changed_fields": changed_fields,
                        "history": [
                            {"kind": a.kind, "agent": a.agent.identifier, "at": a.at}
                            for a in stateinfo.history
                        ],
                    }
                )
        out.sort(key=lambda r: (r["updated_at"], r["id"]), reverse=True)
        return ok(out)

    @app.post("/api/records")
    async def create_record(request: Request):
        agent = state.agent_of(request)
        if agent.kind == "anonymous":
            if not state.rate_limiter.check(agent.identifier):
                return JSONResponse(
                    {"ok": False, "error": {"code": "RateLimited",
                                            "message": "too many records; retry later"}},
                    status_code=429,
                )
        body = await _json_body(request)
        template = state.templates.get(str(body.get("template_id", "")))
        data = validate_submission(
            template, _raw_values(body.get("values", {})), state.templates.vocabularies()
        )
        record_id = state.engine.create_record(template, data, agent)
        record_iri = state.engine.record_iri(record_id)
        self_archive_urls(state, template, data)
        return ok(
            {"id": record_id.local, "template_id": template.template_id, "iri": record_iri,
             "stage": "unmodified"},
            status=201,
        )

    @app.get("/api/records/{local}")
    def read_record(local: str, request: Request):
        record_id = _find_record(local)
        stateinfo = state.engine.record_state(record_id)
        from ..model import working_graph_iri

        record_iri = state.engine.record_iri(record_id)
        graph = state.store.graph(working_graph_iri(record_iri))
        from ..rdfio.mapping import from_rdf

        template = state.templates.get(record_id.template_id)
        data, warnings = from_rdf(ContentGraph(working_graph_iri(record_iri), graph), template)
        return ok(
            {
                "id": record_id.local,
                "template_id": record_id.template_id,
                "iri": record_iri,
                "stage": stateinfo.stage,
                "ever_published": stateinfo.ever_published,
                "values": {
                    field_id: [value_to_json(v) for v in vals]
                    for field_id, vals in data.values.items()
                },
                "warnings": [w.predicate for w in warnings],
                "history": [
                    {"kind": a.kind, "agent": a.agent.identifier, "at": a.at}
                    for a in stateinfo.history
                ],
            }
        )

    @app.put("/api/records/{local}")
    async def update_record(local: str, request: Request):
        record_id = _find_record(local)
        agent = state.agent_of(request)
        body = await _json_body(request)
        template = state.templates.get(record_id.template_id)
        data = validate_submission(
            template, _raw_values(body.get("values", {})), state.templates.vocabularies()
        )
        state.engine.modify_record(record_id, data, agent)
        self_archive_urls(state, template, data)
        return ok({"id": record_id.local, "stage": "modified"})

    @app.post("/api/records/{local}/publish")
    def publish_record(local: str, request: Request):
        record_id = _find_record(local)
        agent = state.agent_of(request)
        state.engine.publish_record(record_id, agent)
        return ok({"id": record_id.local, "stage": "published"})

    @app.delete("/api/records/{local}")
    def delete_record(local: str, request: Request):
        record_id = _find_record(local)
        agent = state.agent_of(request)
        state.engine.delete_record(record_id, agent)
        return ok({"id": record_id.local, "deleted": True})

    # --- linking API ------------------------------------------------------------------

    @app.get("/api/suggest")
    def suggest(template: str, field: str, q: str, limit: int = 10):
        tpl = state.templates.get(template)
        spec = tpl.field_by_id(field)
        result = state.linking.suggest(spec, q, limit)
        return ok(
            {
                "degraded": result.degraded,
                "suggestions": [
                    {
                        "iri": s.iri,
                        "label": s.label,
                        "description": s.description,
                        "source": s.source,
                        "link": s.link,
                    }
                    for s in result.suggestions
                ],
            }
        )

    @app.get("/api/duplicates")
    def duplicates(template: str, value: str):
        tpl = state.templates.get(template)
        hits = state.linking.check_duplicates(tpl, value)
        return ok(
            [
                {"id": rid.local, "template_id": rid.template_id, "label": label, "stage": stage}
                for rid, label, stage in hits
            ]
        )

    @app.get("/api/ner")
    def ner(text: str):
        if not text:
            return fail(GleaneryError("text must be non-empty"))
        result = state.linking.extract_entities(text)
        return ok(
            {
                "degraded": result.degraded,
                "candidates": [
                    {
                        "surface": c.surface,
                        "start": c.start,
                        "end": c.end,
                        "kb_iri": c.kb_iri,
                        "label": c.label,
                        "confidence": c.confidence,
                        "providers": sorted(c.providers),
                    }
                    for c in result.candidates
                ],
            }
        )

    # --- explore API ----------------------------------------------------------------------

    def _explore_payload(template_id: str, request: Request) -> dict:
        template = state.templates.get(template_id)
        constraints = []
        sort = None
        limit, offset = 50, 0
        for key, value in request.query_params.multi_items():
            if key.startswith("f."):
                constraints.append((key[2:], parse_term_text(value)))
            elif key == "sort":
                field_id, _, direction = value.partition(":")
                sort = (field_id, direction != "desc")
            elif key in ("limit", "offset"):
                try:
                    parsed = int(value)
                except ValueError:
                    raise GleaneryError(f"{key} must be an integer") from None
                if key == "limit":
                    limit = parsed
                else:
                    offset = parsed
        facet_fields = [f.id for f in template.fields if f.facet_role in ("facet", "group")]
        facets = [state.explore.facet_values(template, fid) for fid in facet_fields]
        records = state.explore.filter_records(template, constraints, sort, (limit, offset))
        return {
            "template_id": template.template_id,
            "label": template.label,
            "facets": [
                {
                    "field_id": f.field_id,
                    "buckets": [
                        {"value": term_to_json(b.value), "label": b.display_label, "count": b.count}
                        for b in f.buckets
                    ],
                }
                for f in facets
            ],
            "records": [
                {
                    "iri": s.record_iri,
                    "label": s.label,
                    "template_id": s.template_id,
                    "stage": s.stage,
                    "snippet": s.snippet,
                }
                for s in records
            ],
        }

    @app.get("/api/explore/{template_id}")
    def explore(template_id: str, request: Request):
        payload = _explore_payload(template_id, request)
        if "text/html" in request.headers.get("accept", ""):
            template = state.templates.get(template_id)
            facet_fields = [f.id for f in template.fields if f.facet_role in ("facet", "group")]
            facets = [state.explore.facet_values(template, fid) for fid in facet_fields]
            records = state.explore.filter_records(template, page=(50, 0))
            return HTMLResponse(pages.explore_html(template.label, facets, records))
        return ok(payload)

    @app.get("/api/search")
    def search(q: str):
        results = state.explore.text_search(q)
        return ok(
            [
                {
                    "iri": s.record_iri,
                    "label": s.label,
                    "template_id": s.template_id,
                    "stage": s.stage,
                    "snippet": s.snippet,
                }
                for s in results
            ]
        )

    @app.get("/api/export.nq")
    def export_nq():
        dataset = state.store.export_all()
        return PlainTextResponse(
            serialize(dataset, "nquads"), media_type="application/n-quads"
        )

    # --- SPARQL protocol ------------------------------------------------------------

    def _run_sparql(query_text: str, request: Request):
        accept = request.headers.get("accept", "")
        if state.config.endpoint_mode == "remote":
            table = state.store.select(query_text)
            return JSONResponse(
                results_to_json(table), media_type="application/sparql-results+json"
            )
        try:
            ast = parse_query(query_text)
        except UnsupportedFeature as exc:
            if state.remote_fallback is not None:
                table = state.remote_fallback.select(query_text)
                return JSONResponse(
                    results_to_json(table), media_type="application/sparql-results+json"
                )
            if "text/html" in accept:
                return HTMLResponse(pages.sparql_form_html(error=str(exc)), status_code=200)
            return fail(exc, status=400)
        except ParseError as exc:
            return fail(exc, status=400)
        table = state.store.evaluate(ast)
        return JSONResponse(results_to_json(table), media_type="application/sparql-results+json")

    @app.get("/sparql")
    def sparql_get(request: Request):
        query_text = request.query_params.get("query")
        if not query_text:
            return HTMLResponse(pages.sparql_form_html())
        return _run_sparql(query_text, request)

    @app.post("/sparql")
    async def sparql_post(request: Request):
        content_type = request.headers.get("content-type", "")
        body = await request.body()
        if "application/sparql-query" in content_type:
            query_text = body.decode("utf-8")
        else:
            from urllib.parse import parse_qs

            form = parse_qs(body.decode("utf-8"))
            query_text = (form.get("query") or [""])[0]
        if not query_text:
            return fail(GleaneryError("missing query"), status=400)
        return _run_sparql(query_text, request)

    # --- OAuth ----------------------------------------------------------------------

    @app.get("/oauth/login")
    def oauth_login():
        if state.oauth is None:
            raise NotFound("OAuth is not configured")
        state_token = state.oauth.new_state_token()
        return RedirectResponse(state.oauth.login_url(state_token), status_code=302)

    @app.get("/oauth/callback")
    def oauth_callback(request: Request):
        if state.oauth is None:
            raise NotFound("OAuth is not configured")
        code = request.query_params.get("code", "")
        state_token = request.query_params.get("state", "")
        session = state.oauth.callback(code, state_token)
        response = RedirectResponse("/", status_code=302)
        response.set_cookie(
            SESSION_COOKIE, state.sessions.encode(session), httponly=True, samesite="lax"
        )
        return response

    # --- record page (must come after fixed routes) -----------------------------------

    @app.get("/{resource_name}/{local}")
    def record_page(resource_name: str, local: str, request: Request):
        template = state.templates.by_resource_name(resource_name)
        if template is None:
            raise NotFound(f"no resource {resource_name!r}")
        from ..model import RecordId

        try:
            record_id = RecordId(local, template.template_id)
        except ValueError:
            raise NotFound(f"malformed record id {local!r}") from None
        session = state.session_of(request)
        accredited = bool(session and session.accredited)
        accept = request.headers.get("accept", "")
        if "text/turtle" in accept:
            record_iri = state.engine.record_iri(record_id)
            stateinfo = state.engine.record_state(record_id)
            if not stateinfo.ever_published:
                raise NotFound(f"record {local!r} is not published")
            from ..rdfio import DEFAULT_PREFIXES

            quads = state.store.graph(pub_graph_iri(record_iri))
            prefixes = {**DEFAULT_PREFIXES, state.config.prefix: state.config.base_uri}
            return PlainTextResponse(
                serialize(quads, "turtle", prefixes=prefixes), media_type="text/turtle"
            )
        page_model = state.explore.record_page(record_id, accredited=accredited)
        record_iri = state.engine.record_iri(record_id)
        graph_iri = pub_graph_iri(record_iri)
        quads = state.store.graph(graph_iri)
        title = record_label(ContentGraph(graph_iri, quads), template, record_iri) \
            if len(quads) else record_iri
        return HTMLResponse(pages.record_html(title, page_model))

    return app


def self_archive_urls(state: AppState, template, data: ValidatedRecordData) -> None:
    """Fire-and-forget snapshot requests for archive-flagged url fields."""
    if not state.config.archiver_enabled or state.registry.archiver is None:
        return
    vocab = local_vocab(state.config.base_uri)
    context_iri = context_graph_iri(state.config)
    from ..model import Quad

    new_quads = []
    for spec in template.fields:
        if not spec.archive_url:
            continue
        for value in data.values.get(spec.id, ()):
            if not isinstance(value, Literal):
                continue
            url = value.text
            if not url.startswith(("http://", "https://")):
                continue
            try:
                archived = state.registry.archiver.snapshot(url)
            except GleaneryError as exc:
                log.warning("archiver failed for %s: %s", url, exc)
                continue
            if archived:
                new_quads.append(
                    Quad(iri(url), iri(vocab["archived_at"]), iri(archived), iri(context_iri))
                )
    if new_quads:
        merged = state.store.graph(context_iri)
        merged.update(new_quads)
        state.store.replace_graph(context_iri, merged)
