"""Bidirectional mapping between validated record data and RDF graphs."""

from __future__ import annotations

import secrets
from dataclasses import dataclass
from typing import Callable, Optional

from ..model import GraphSet, Quad, iri, literal, random_local_id
from ..templates import Entity, FieldValue, Literal, NewEntity, Template, ValidatedRecordData
from .namespaces import RDFS_LABEL, RDF_TYPE

__all__ = [
    "ContentGraph",
    "UnmappedProperty",
    "to_rdf",
    "from_rdf",
    "resolve_new_entities",
    "record_label",
    "rewrite_graph",
]

EntityMinter = Callable[[str], str]  # label -> fresh absolute entity IRI


@dataclass(frozen=True)
class ContentGraph:
    """All quads of one record, confined to a single named graph."""

    graph_iri: str
    quads: GraphSet

    def __post_init__(self) -> None:
        for q in self.quads:
            if q.graph.value != self.graph_iri:
                raise ValueError(f"quad outside graph {self.graph_iri}: {q}")


@dataclass(frozen=True)
class UnmappedProperty:
    """A triple whose predicate matches no template field (warning, not failure)."""

    predicate: str
    object_value: str


def default_entity_minter(base_uri: str) -> EntityMinter:
    rng = secrets.SystemRandom()

    def mint(_label: str) -> str:
        return f"{base_uri}entity/{random_local_id(rng)}"

    return mint


def resolve_new_entities(
    data: ValidatedRecordData, minter: EntityMinter
) -> ValidatedRecordData:
    """Replace every NewEntity with a freshly minted Entity carrying the same label."""
    values: dict[str, tuple[FieldValue, ...]] = {}
    for field_id, vals in data.values.items():
        out = []
        for v in vals:
            if isinstance(v, NewEntity):
                out.append(Entity(minter(v.label), v.label))
            else:
                out.append(v)
        values[field_id] = tuple(out)
    return ValidatedRecordData(data.template_id, values)


def to_rdf(
    data: ValidatedRecordData,
    record_iri: str,
    template: Template,
    *,
    graph_iri: Optional[str] = None,
    entity_minter: Optional[EntityMinter] = None,
) -> ContentGraph:
    """Map validated data to the record's content graph.

    Emits the type triple, one triple per field value, and a companion
    rdfs:label triple per entity object. NewEntity values are minted on the
    spot; callers that need the minted IRIs back should resolve first via
    resolve_new_entities.
    """
    target = graph_iri or (record_iri + "/")
    g = iri(target)
    subject = iri(record_iri)
    quads = GraphSet()
    quads.add(Quad(subject, iri(RDF_TYPE), iri(template.class_iri), g))

    if entity_minter is None:
        base = record_iri.rsplit("/", 2)[0] + "/"
        entity_minter = default_entity_minter(base)
    data = resolve_new_entities(data, entity_minter)

    for spec in template.fields:
        for value in data.values.get(spec.id, ()):
            prop = iri(spec.property_iri)
            if isinstance(value, Literal):
                quads.add(Quad(subject, prop, literal(value.text, value.datatype), g))
            else:
                assert isinstance(value, Entity)
                obj = iri(value.iri)
                quads.add(Quad(subject, prop, obj, g))
                quads.add(Quad(obj, iri(RDFS_LABEL), literal(value.label), g))
    return ContentGraph(target, quads)


def from_rdf(
    graph: ContentGraph, template: Template
) -> tuple[ValidatedRecordData, list[UnmappedProperty]]:
    """Recover record data from a content graph produced by to_rdf.

    Round trip: from_rdf(to_rdf(d)) == d up to intra-field value ordering,
    once NewEntity values have been resolved. Unknown predicates surface as
    warnings, never as failures.
    """
    by_property = {spec.property_iri: spec for spec in template.fields}
    record_subjects = [
        q.subject
        for q in graph.quads
        if q.predicate.value == RDF_TYPE and q.object.value == template.class_iri
    ]
    record_subject = record_subjects[0] if record_subjects else None

    labels: dict[str, str] = {}
    for q in graph.quads:
        if q.predicate.value == RDFS_LABEL and q.object.is_literal:
            labels.setdefault(q.subject.value, q.object.value)

    values: dict[str, list[FieldValue]] = {}
    warnings: list[UnmappedProperty] = []
    referenced_entities: set[str] = set()
    for q in sorted(graph.quads, key=lambda q: (q.subject.value, q.predicate.value, q.object.value)):
        if record_subject is not None and q.subject == record_subject:
            if q.predicate.value == RDF_TYPE:
                continue
            spec = by_property.get(q.predicate.value)
            if spec is None:
                warnings.append(UnmappedProperty(q.predicate.value, q.object.value))
                continue
            if q.object.is_literal:
                datatype = q.object.datatype
                values.setdefault(spec.id, []).append(Literal(q.object.value, datatype))
            else:
                entity_ref = q.object.value
                referenced_entities.add(entity_ref)
                values.setdefault(spec.id, []).append(
                    Entity(entity_ref, labels.get(entity_ref, entity_ref))
                )

    for q in graph.quads:
        if record_subject is not None and q.subject == record_subject:
            continue
        if q.predicate.value == RDFS_LABEL and q.subject.value in referenced_entities:
            continue
        warnings.append(UnmappedProperty(q.predicate.value, q.object.value))

    data = ValidatedRecordData(
        template.template_id, {k: tuple(v) for k, v in values.items()}
    )
    return data, warnings


def record_label(graph: ContentGraph, template: Template, record_iri: str) -> str:
    """The record's human label: value of the disambiguate field, else the
    first required literal field, else the record IRI."""
    spec = template.label_field()
    if spec is not None:
        for q in sorted(graph.quads, key=lambda q: q.object.value):
            if q.subject.value == record_iri and q.predicate.value == spec.property_iri:
                if q.object.is_literal:
                    return q.object.value
    return record_iri


def rewrite_graph(quads: GraphSet, target_graph_iri: str) -> GraphSet:
    """The same statements, re-homed into another named graph."""
    g = iri(target_graph_iri)
    return GraphSet(Quad(q.subject, q.predicate, q.object, g) for q in quads)
