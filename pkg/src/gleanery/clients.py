"""Thin, mockable clients for every remote service.

All remote traffic flows through an injected transport so the full test
suite runs with zero real network calls. Each client is an implementation
of a generic contract (entity search, NER annotation, vocabulary metadata,
web archiving, geocoding); concrete services are configuration.
Request shapes are documented in docs/clients/.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence
from urllib.parse import quote

from .errors import GleaneryError
from .model import Config, GraphSet, Quad, iri, literal, vocab_cache_graph_iri
from .rdfio import RDFS_COMMENT, RDFS_LABEL, local_vocab
from .rdfio.namespaces import XSD_DATETIME

__all__ = [
    "Timeout",
    "BadStatus",
    "MalformedBody",
    "Response",
    "MockTransport",
    "RequestsTransport",
    "SearchClient",
    "NerClient",
    "ArchiverClient",
    "GeocoderClient",
    "VocabMetaClient",
    "CachedVocabMeta",
    "ClientRegistry",
    "registry_from_config",
]

DEFAULT_DEADLINE = 3.0
VOCAB_CACHE_TTL_DAYS = 30


class Timeout(GleaneryError):
    pass


class BadStatus(GleaneryError):
    def __init__(self, status: int) -> None:
        super().__init__(f"unexpected HTTP status {status}")
        self.status = status


class MalformedBody(GleaneryError):
    pass


@dataclass
class Response:
    status: int
    headers: dict[str, str]
    body: bytes

    def json(self):
        try:
            return json.loads(self.body.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise MalformedBody(str(exc)) from exc

    def header(self, name: str) -> Optional[str]:
        for key, value in self.headers.items():
            if key.lower() == name.lower():
                return value
        return None


class RequestsTransport:
    """Real HTTP transport; constructed only by the composition root."""

    def __init__(self) -> None:
        import requests

        self._session = requests.Session()

    def request(self, method, url, *, params=None, data=None, headers=None, timeout=None):
        import requests

        try:
            r = self._session.request(
                method,
                url,
                params=params,
                data=data,
                headers=headers,
                timeout=timeout or DEFAULT_DEADLINE,
                allow_redirects=False,
            )
        except requests.Timeout as exc:
            raise TimeoutError(str(exc)) from exc
        except requests.RequestException as exc:
            raise ConnectionError(str(exc)) from exc
        return Response(r.status_code, dict(r.headers), r.content)


class MockTransport:
    """Scripted transport twin; records every request for assertions."""

    def __init__(self, responses: Sequence[Response] = (), default: Optional[Response] = None) -> None:
        self.responses = list(responses)
        self.default = default
        self.requests: list[dict] = []
        self.routes: list[tuple[Callable[[dict], bool], Callable[[dict], Response]]] = []

    @staticmethod
    def json_response(payload, status: int = 200, headers: Optional[dict] = None) -> Response:
        return Response(status, headers or {}, json.dumps(payload).encode("utf-8"))

    def route(self, predicate, responder) -> None:
        self.routes.append((predicate, responder))

    def request(self, method, url, *, params=None, data=None, headers=None, timeout=None):
        call = {
            "method": method,
            "url": url,
            "params": params,
            "data": data,
            "headers": headers or {},
            "timeout": timeout,
        }
        self.requests.append(call)
        for predicate, responder in self.routes:
            if predicate(call):
                result = responder(call)
                if isinstance(result, Exception):
                    raise result
                return result
        if self.responses:
            result = self.responses.pop(0)
            if isinstance(result, Exception):
                raise result
            return result
        if self.default is not None:
            return self.default
        raise AssertionError(f"unexpected request: {method} {url}")

    def call_count(self, url_fragment: str = "") -> int:
        return sum(1 for call in self.requests if url_fragment in call["url"])


def _checked_json(response: Response):
    if response.status != 200:
        raise BadStatus(response.status)
    return response.json()


class _HttpClient:
    def __init__(self, name: str, base_url: str, transport, deadline: float = DEFAULT_DEADLINE) -> None:
        self.name = name
        self.base_url = base_url.rstrip("/")
        self.transport = transport
        self.deadline = deadline

    def _get(self, url: str, params: Optional[dict] = None, headers: Optional[dict] = None) -> Response:
        # at most one retry on timeout or server error, never more than two
        attempts = 0
        while True:
            attempts += 1
            try:
                response = self.transport.request(
                    "GET", url, params=params, headers=headers, timeout=self.deadline
                )
            except TimeoutError as exc:
                if attempts >= 2:
                    raise Timeout(str(exc)) from exc
                continue
            except OSError as exc:
                raise Timeout(str(exc)) from exc
            if response.status >= 500 and attempts < 2:
                continue
            return response


class SearchClient(_HttpClient):
    """Entity search against a wbsearchentities-style endpoint."""

    def search(self, text: str, limit: int) -> list[dict]:
        response = self._get(
            self.base_url,
            params={
                "action": "wbsearchentities",
                "search": text,
                "limit": str(limit),
                "format": "json",
                "language": "en",
            },
        )
        doc = _checked_json(response)
        hits = doc.get("search")
        if not isinstance(hits, list):
            raise MalformedBody("search response lacks a 'search' list")
        out = []
        for hit in hits:
            if not isinstance(hit, dict) or "id" not in hit:
                continue
            out.append(
                {
                    "id": str(hit.get("concepturi") or hit.get("url") or hit["id"]),
                    "label": str(hit.get("label", hit["id"])),
                    "description": hit.get("description"),
                    "url": str(hit.get("url") or hit.get("concepturi") or hit["id"]),
                }
            )
        return out


class NerClient(_HttpClient):
    """Annotation client for a spotlight-style NER service."""

    def annotate(self, text: str, threshold: float = 0.5) -> list[dict]:
        try:
            response = self.transport.request(
                "POST",
                self.base_url,
                data={"text": text, "confidence": str(threshold)},
                headers={"Accept": "application/json"},
                timeout=self.deadline,
            )
        except TimeoutError as exc:
            raise Timeout(str(exc)) from exc
        except OSError as exc:
            raise Timeout(str(exc)) from exc
        doc = _checked_json(response)
        resources = doc.get("Resources", [])
        if not isinstance(resources, list):
            raise MalformedBody("annotation response lacks a 'Resources' list")
        spans = []
        for entry in resources:
            try:
                start = int(entry["@offset"])
                surface = str(entry["@surfaceForm"])
                end = start + len(surface)
                span = {
                    "surface": surface,
                    "start": start,
                    "end": end,
                    "kb_iri": entry.get("@URI"),
                    "confidence": float(entry.get("@similarityScore", threshold)),
                }
            except (KeyError, TypeError, ValueError):
                continue
            if 0 <= start < end <= len(text) and text[start:end] == surface:
                spans.append(span)
            # spans outside the text bounds are dropped defensively
        return spans


class ArchiverClient(_HttpClient):
    """Save-page-now style archiver; best-effort by contract."""

    def snapshot(self, url: str) -> Optional[str]:
        response = self._get(f"{self.base_url}/save/{quote(url, safe=':/')}")
        if response.status in (200, 302):
            location = response.header("Content-Location") or response.header("Location")
            if location:
                if location.startswith("/"):
                    root = self.base_url.split("/", 3)
                    location = f"{root[0]}//{root[2]}{location}"
                return location
        raise BadStatus(response.status)


class GeocoderClient(_HttpClient):
    """Nominatim-style forward geocoder."""

    def geocode(self, place: str) -> Optional[tuple[float, float]]:
        response = self._get(
            f"{self.base_url}/search",
            params={"q": place, "format": "json", "limit": "1"},
        )
        doc = _checked_json(response)
        if not isinstance(doc, list):
            raise MalformedBody("geocoder response must be a JSON list")
        if not doc:
            return None
        first = doc[0]
        try:
            return float(first["lat"]), float(first["lon"])
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedBody(f"geocoder hit lacks coordinates: {exc}") from exc


class VocabMetaClient(_HttpClient):
    """Vocabulary-registry lookup (LOV-style term metadata)."""

    def fetch_term(self, term_iri: str) -> Optional[dict]:
        response = self._get(self.base_url, params={"q": term_iri})
        if response.status == 404:
            return None
        doc = _checked_json(response)
        results = doc.get("results")
        if not isinstance(results, list):
            raise MalformedBody("term lookup lacks a 'results' list")
        for hit in results:
            if isinstance(hit, dict) and hit.get("uri") == term_iri:
                return {
                    "label": hit.get("label"),
                    "comment": hit.get("comment"),
                    "vocabulary_title": hit.get("vocabulary"),
                }
        return None


class CachedVocabMeta:
    """Cache-through layer persisting term metadata in the quad store.

    Cached entries live in the ``<base_uri>lov/`` graph with their fetch
    timestamp; fresh entries (30 days) are served without any HTTP call.
    """

    def __init__(self, client: Optional[VocabMetaClient], store, config: Config,
                 now: Callable[[], str]) -> None:
        self.client = client
        self.store = store
        self.config = config
        self.now = now
        self._vocab = local_vocab(config.base_uri)
        self.graph_iri = vocab_cache_graph_iri(config)

    def _cached(self, term_iri: str) -> Optional[dict]:
        cached: dict = {}
        for q in self.store.graph(self.graph_iri):
            if q.subject.value != term_iri:
                continue
            if q.predicate.value == RDFS_LABEL:
                cached["label"] = q.object.value
            elif q.predicate.value == RDFS_COMMENT:
                cached["comment"] = q.object.value
            elif q.predicate.value == self._vocab["source_vocabulary"]:
                cached["vocabulary_title"] = q.object.value
            elif q.predicate.value == self._vocab["fetched_at"]:
                cached["fetched_at"] = q.object.value
        return cached or None

    def _fresh(self, fetched_at: str) -> bool:
        import datetime

        try:
            then = datetime.datetime.strptime(fetched_at, "%Y-%m-%dT%H:%M:%SZ")
            now = datetime.datetime.strptime(self.now(), "%Y-%m-%dT%H:%M:%SZ")
        except ValueError:
            return False
        return (now - then).days < VOCAB_CACHE_TTL_DAYS

    def term_info(self, term_iri: str) -> Optional[dict]:
        cached = self._cached(term_iri)
        if cached is not None and self._fresh(cached.get("fetched_at", "")):
            return {k: v for k, v in cached.items() if k != "fetched_at" and v is not None} or None
        if self.client is None:
            return None
        try:
            info = self.client.fetch_term(term_iri)
        except GleaneryError:
            return {k: v for k, v in (cached or {}).items() if k != "fetched_at"} or None
        if info is None:
            return None
        self._store(term_iri, info)
        return info

    def _store(self, term_iri: str, info: dict) -> None:
        g = iri(self.graph_iri)
        subject = iri(term_iri)
        quads = GraphSet(
            q for q in self.store.graph(self.graph_iri) if q.subject.value != term_iri
        )
        if info.get("label"):
            quads.add(Quad(subject, iri(RDFS_LABEL), literal(str(info["label"])), g))
        if info.get("comment"):
            quads.add(Quad(subject, iri(RDFS_COMMENT), literal(str(info["comment"])), g))
        if info.get("vocabulary_title"):
            quads.add(
                Quad(subject, iri(self._vocab["source_vocabulary"]),
                     literal(str(info["vocabulary_title"])), g)
            )
        quads.add(
            Quad(subject, iri(self._vocab["fetched_at"]), literal(self.now(), XSD_DATETIME), g)
        )
        self.store.replace_graph(self.graph_iri, quads)


@dataclass
class ClientRegistry:
    lookup: list[SearchClient] = field(default_factory=list)
    ner: list[NerClient] = field(default_factory=list)
    vocab_meta: Optional[VocabMetaClient] = None
    archiver: Optional[ArchiverClient] = None
    geocoder: Optional[GeocoderClient] = None

    def __post_init__(self) -> None:
        names = [c.name for c in self.lookup] + [c.name for c in self.ner]
        for c in (self.vocab_meta, self.archiver, self.geocoder):
            if c is not None:
                names.append(c.name)
        if len(names) != len(set(names)):
            raise ValueError(f"client names must be unique: {names}")


_KIND_BY_NAME = {
    "search": "search",
    "ner": "ner",
    "vocab_meta": "vocab_meta",
    "archiver": "archiver",
    "geocoder": "geocoder",
}


def registry_from_config(client_settings: dict[str, dict], transport) -> ClientRegistry:
    """Build the registry from ``clients.<name>.*`` configuration entries.

    A client's kind defaults to its name; additional clients of the same
    kind declare ``kind`` explicitly (e.g. ``clients.getty.kind = search``).
    """
    registry = ClientRegistry()
    for name in sorted(client_settings):
        settings = client_settings[name]
        base_url = settings.get("base_url")
        if not base_url:
            continue
        kind = settings.get("kind", _KIND_BY_NAME.get(name, name))
        if kind == "search":
            registry.lookup.append(SearchClient(name, base_url, transport))
        elif kind == "ner":
            registry.ner.append(NerClient(name, base_url, transport))
        elif kind == "vocab_meta":
            registry.vocab_meta = VocabMetaClient(name, base_url, transport)
        elif kind == "archiver":
            registry.archiver = ArchiverClient(name, base_url, transport)
        elif kind == "geocoder":
            registry.geocoder = GeocoderClient(name, base_url, transport)
        else:
            raise ValueError(f"unknown client kind {kind!r} for {name!r}")
    return registry
