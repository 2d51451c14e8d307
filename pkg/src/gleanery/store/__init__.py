"""Storage and query layer: embedded subset evaluator + SPARQL 1.1 protocol client."""

from typing import Protocol, runtime_checkable

from ..model import Config, GraphSet
from .ast import Count, Filter, FilterArg, GraphPattern, QueryAst, SolutionTable, TriplePattern, Var
from .evaluate import evaluate
from .memory import EmbeddedStore, JournalWriteFailed
from .parser import ParseError, UnsupportedFeature, parse_query
from .remote import (
    MalformedResults,
    RemoteStore,
    RemoteUnreachable,
    SparqlProtocolClient,
    parse_results_json,
    results_to_json,
)


@runtime_checkable
class Store(Protocol):
    """What the editorial/explore layers need from either store mode."""

    def replace_graph(self, graph_iri: str, quads: GraphSet) -> None: ...

    def drop_graph(self, graph_iri: str) -> None: ...

    def has_graph(self, graph_iri: str) -> bool: ...

    def graph(self, graph_iri: str) -> GraphSet: ...

    def graph_iris(self) -> list[str]: ...

    def select(self, query_text: str) -> SolutionTable: ...


def open_store(config: Config, transport=None) -> Store:
    """The store named by the configuration: embedded journal-backed, or a
    remote SPARQL 1.1 endpoint behind the protocol client."""
    if config.endpoint_mode == "remote":
        client = SparqlProtocolClient(
            config.endpoint_url, config.endpoint_update_url, transport
        )
        return RemoteStore(client)
    return EmbeddedStore(config.data_dir / "data" if config.data_dir else None)


__all__ = [
    "Count",
    "EmbeddedStore",
    "Filter",
    "FilterArg",
    "GraphPattern",
    "JournalWriteFailed",
    "MalformedResults",
    "ParseError",
    "QueryAst",
    "RemoteStore",
    "RemoteUnreachable",
    "SolutionTable",
    "SparqlProtocolClient",
    "Store",
    "TriplePattern",
    "UnsupportedFeature",
    "Var",
    "evaluate",
    "open_store",
    "parse_query",
    "parse_results_json",
    "results_to_json",
    "open_store",
]
