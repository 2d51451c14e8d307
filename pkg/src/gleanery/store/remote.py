"""SPARQL 1.1 Protocol client and the remote-backed store.

Queries go out as GET with a ``query`` parameter while the encoded URL
stays under 2KB, otherwise as a form-encoded POST; updates are always
form-encoded POSTs. Results are parsed from
``application/sparql-results+json``.
"""

from __future__ import annotations

from typing import Optional
from urllib.parse import urlencode

from ..errors import GleaneryError
from ..model import GraphSet, Quad, Term, blank, iri, literal
from ..rdfio.syntax import encode_term
from .ast import SolutionTable

__all__ = [
    "RemoteUnreachable",
    "MalformedResults",
    "SparqlProtocolClient",
    "RemoteStore",
    "parse_results_json",
    "results_to_json",
]

_GET_URL_LIMIT = 2048


class RemoteUnreachable(GleaneryError):
    def __init__(self, status: Optional[int] = None, detail: str = "") -> None:
        super().__init__(f"remote endpoint unreachable (status={status}) {detail}".strip())
        self.status = status


class MalformedResults(GleaneryError):
    pass


def _term_from_binding(entry: dict) -> Term:
    kind = entry.get("type")
    value = entry.get("value")
    if not isinstance(value, str):
        raise MalformedResults(f"binding without string value: {entry!r}")
    if kind == "uri":
        return iri(value)
    if kind == "bnode":
        return blank(value)
    if kind in ("literal", "typed-literal"):
        return literal(value, datatype=entry.get("datatype"), language=entry.get("xml:lang"))
    raise MalformedResults(f"unknown binding type: {kind!r}")


def parse_results_json(doc: object) -> SolutionTable:
    """Parse a SPARQL results-JSON document into a SolutionTable."""
    if not isinstance(doc, dict):
        raise MalformedResults("results document must be a JSON object")
    try:
        vars_ = list(doc["head"]["vars"])
        bindings = doc["results"]["bindings"]
    except (KeyError, TypeError) as exc:
        raise MalformedResults(f"missing results structure: {exc}") from exc
    table = SolutionTable(vars=vars_)
    for b in bindings:
        if not isinstance(b, dict):
            raise MalformedResults("binding rows must be objects")
        row: dict[str, Term] = {}
        for var, entry in b.items():
            try:
                row[var] = _term_from_binding(entry)
            except ValueError as exc:
                raise MalformedResults(str(exc)) from exc
        table.rows.append(row)
    return table


def results_to_json(table: SolutionTable) -> dict:
    """The inverse encoding, used by the /sparql server route."""
    bindings = []
    for row in table.rows:
        encoded = {}
        for var, term in row.items():
            if term.is_iri:
                encoded[var] = {"type": "uri", "value": term.value}
            elif term.is_blank:
                encoded[var] = {"type": "bnode", "value": term.value}
            else:
                entry: dict = {"type": "literal", "value": term.value}
                if term.language:
                    entry["xml:lang"] = term.language
                if term.datatype:
                    entry["datatype"] = term.datatype
                encoded[var] = entry
        bindings.append(encoded)
    return {"head": {"vars": list(table.vars)}, "results": {"bindings": bindings}}


class SparqlProtocolClient:
    """Protocol-level client for any compliant SPARQL 1.1 endpoint."""

    def __init__(self, query_url: str, update_url: Optional[str], transport) -> None:
        self.query_url = query_url
        self.update_url = update_url or query_url
        self.transport = transport

    def select(self, query_text: str) -> SolutionTable:
        headers = {"Accept": "application/sparql-results+json"}
        encoded = urlencode({"query": query_text})
        try:
            if len(self.query_url) + 1 + len(encoded) < _GET_URL_LIMIT:
                response = self.transport.request(
                    "GET", self.query_url, params={"query": query_text}, headers=headers
                )
            else:
                headers["Content-Type"] = "application/x-www-form-urlencoded"
                response = self.transport.request(
                    "POST", self.query_url, data=encoded.encode("ascii"), headers=headers
                )
        except OSError as exc:
            raise RemoteUnreachable(None, str(exc)) from exc
        if response.status != 200:
            raise RemoteUnreachable(response.status)
        try:
            doc = response.json()
        except ValueError as exc:
            raise MalformedResults(f"response is not JSON: {exc}") from exc
        return parse_results_json(doc)

    def update(self, update_text: str) -> None:
        headers = {"Content-Type": "application/x-www-form-urlencoded"}
        body = urlencode({"update": update_text}).encode("ascii")
        try:
            response = self.transport.request("POST", self.update_url, data=body, headers=headers)
        except OSError as exc:
            raise RemoteUnreachable(None, str(exc)) from exc
        if response.status not in (200, 204):
            raise RemoteUnreachable(response.status)


class RemoteStore:
    """Store interface over a remote endpoint; queries pass through as text."""

    def __init__(self, client: SparqlProtocolClient) -> None:
        self.client = client

    def replace_graph(self, graph_iri: str, quads: GraphSet) -> None:
        triples = " ".join(
            f"{encode_term(q.subject)} {encode_term(q.predicate)} {encode_term(q.object)} ."
            for q in sorted(quads, key=lambda q: encode_term(q.subject))
        )
        self.client.update(f"DROP SILENT GRAPH <{graph_iri}> ;\n"
                           f"INSERT DATA {{ GRAPH <{graph_iri}> {{ {triples} }} }}")

    def drop_graph(self, graph_iri: str) -> None:
        self.client.update(f"DROP SILENT GRAPH <{graph_iri}>")

    def has_graph(self, graph_iri: str) -> bool:
        table = self.client.select(
            f"SELECT ?s WHERE {{ GRAPH <{graph_iri}> {{ ?s ?p ?o }} }} LIMIT 1"
        )
        return bool(table.rows)

    def graph(self, graph_iri: str) -> GraphSet:
        table = self.client.select(
            f"SELECT ?s ?p ?o WHERE {{ GRAPH <{graph_iri}> {{ ?s ?p ?o }} }}"
        )
        g = iri(graph_iri)
        out = GraphSet()
        for row in table.rows:
            if {"s", "p", "o"} <= set(row):
                out.add(Quad(row["s"], row["p"], row["o"], g))
        return out

    def graph_iris(self) -> list[str]:
        table = self.client.select("SELECT DISTINCT ?g WHERE { GRAPH ?g { ?s ?p ?o } }")
        return sorted(row["g"].value for row in table.rows if "g" in row)

    def select(self, query_text: str) -> SolutionTable:
        return self.client.select(query_text)

    def export_all(self) -> GraphSet:
        table = self.client.select("SELECT ?g ?s ?p ?o WHERE { GRAPH ?g { ?s ?p ?o } }")
        out = GraphSet()
        for row in table.rows:
            if {"g", "s", "p", "o"} <= set(row):
                out.add(Quad(row["s"], row["p"], row["o"], row["g"]))
        return out
