"""Brute-force oracle for facet counts, filtered listings, and text search.

Operates directly on the raw quad list exported from the store, with no
SPARQL in sight, so the explore module has an independent check.
"""

from __future__ import annotations

from collections import Counter

from gleanery.model import GraphSet, Term

RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"


def _pub_records(dataset: GraphSet, base_uri: str, resource_name: str) -> dict[str, list]:
    """record_iri -> quads of its published snapshot."""
    prefix = f"{base_uri}{resource_name}/"
    out: dict[str, list] = {}
    for q in dataset:
        g = q.graph.value
        if g.endswith("/pub/") and g.startswith(prefix):
            out.setdefault(g[: -len("/pub/")], []).append(q)
    return out


def facet_counts(
    dataset: GraphSet, base_uri: str, resource_name: str, class_iri: str, property_iri: str
) -> dict[Term, int]:
    counts: Counter = Counter()
    for record_iri, quads in _pub_records(dataset, base_uri, resource_name).items():
        typed = any(
            q.subject.value == record_iri
            and q.predicate.value == RDF_TYPE
            and q.object.value == class_iri
            for q in quads
        )
        if not typed:
            continue
        values = {
            q.object for q in quads
            if q.subject.value == record_iri and q.predicate.value == property_iri
        }
        for v in values:
            counts[v] += 1
    return dict(counts)


def filtered_records(
    dataset: GraphSet,
    base_uri: str,
    resource_name: str,
    class_iri: str,
    constraints: list[tuple[str, Term]],
) -> set[str]:
    """Record IRIs whose snapshots satisfy every (property, value) pair."""
    result = set()
    for record_iri, quads in _pub_records(dataset, base_uri, resource_name).items():
        facts = {(q.predicate.value, q.object) for q in quads if q.subject.value == record_iri}
        typed = any(p == RDF_TYPE and o.value == class_iri for p, o in facts)
        if not typed:
            continue
        if all((prop, value) in facts for prop, value in constraints):
            result.add(record_iri)
    return result


def search_records(dataset: GraphSet, base_uri: str, query: str) -> dict[str, int]:
    """record_iri -> number of matching literals across its snapshot."""
    needle = query.casefold()
    counts: Counter = Counter()
    for q in dataset:
        g = q.graph.value
        if not g.endswith("/pub/") or not g.startswith(base_uri):
            continue
        if q.object.is_literal and needle in q.object.value.casefold():
            counts[g[: -len("/pub/")]] += 1
    return dict(counts)
