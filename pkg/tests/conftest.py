import json
import socket

import pytest

from gleanery.editorial import AgentRef, EditorialEngine
from gleanery.model import Config
from gleanery.store import EmbeddedStore
from gleanery.templates import TemplateStore

DCT = "http://purl.org/dc/terms/"

COLLECTION_TEMPLATE = {
    "template_id": "collections",
    "resource_name": "collection",
    "class_iri": "https://ex.org/vocab/Collection",
    "label": "Collection",
    "fields": [
        {
            "id": "title",
            "label": "Title",
            "widget": "literal",
            "property_iri": DCT + "title",
            "required": True,
            "cardinality": "one",
            "disambiguate": True,
        },
        {
            "id": "bio",
            "label": "Description",
            "widget": "text_long",
            "property_iri": DCT + "description",
            "ner": True,
        },
        {
            "id": "creator",
            "label": "Creator",
            "widget": "entity",
            "property_iri": DCT + "creator",
            "autocomplete_sources": ["local", "external"],
            "facet_role": "facet",
        },
        {
            "id": "keywords",
            "label": "Keywords",
            "widget": "literal",
            "property_iri": DCT + "subject",
            "facet_role": "facet",
        },
        {
            "id": "founded",
            "label": "Founded",
            "widget": "date",
            "property_iri": DCT + "date",
            "facet_role": "sort",
        },
        {
            "id": "homepage",
            "label": "Homepage",
            "widget": "url",
            "property_iri": "http://xmlns.com/foaf/0.1/homepage",
            "archive_url": True,
        },
    ],
}


class TickingClock:
    """Deterministic second-resolution clock for provenance tests."""

    def __init__(self, start: int = 0) -> None:
        self.seconds = start

    def tick(self, n: int = 1) -> None:
        self.seconds += n

    def __call__(self) -> str:
        minutes, sec = divmod(self.seconds, 60)
        hours, minutes = divmod(minutes, 60)
        return f"2024-05-01T{hours:02d}:{minutes:02d}:{sec:02d}Z"

    def now_epoch(self) -> float:
        return 1714521600.0 + self.seconds


@pytest.fixture
def workdir(tmp_path):
    (tmp_path / "templates").mkdir()
    (tmp_path / "templates" / "collections.json").write_text(json.dumps(COLLECTION_TEMPLATE))
    (tmp_path / "vocabularies").mkdir()
    return tmp_path


@pytest.fixture
def config(workdir):
    return Config(base_uri="https://ex.org/", prefix="ex", data_dir=workdir)


@pytest.fixture
def store():
    return EmbeddedStore()


@pytest.fixture
def templates(workdir):
    return TemplateStore(workdir)


@pytest.fixture
def clock():
    return TickingClock()


@pytest.fixture
def engine(store, templates, config, clock):
    return EditorialEngine(store, templates, config, clock=clock)


ANON = AgentRef("anonymous", "ab12cd34")
REVIEWER = AgentRef("authenticated", "reviewer", accredited=True)
CONTRIBUTOR = AgentRef("authenticated", "casual", accredited=False)


@pytest.fixture(autouse=True)
def no_network(monkeypatch):
    """The whole suite must run with zero real network traffic."""

    def guard(*args, **kwargs):
        raise AssertionError("test attempted real network access")

    monkeypatch.setattr(socket.socket, "connect", guard)
    monkeypatch.setattr(socket, "create_connection", guard)
