"""RDFa annotation model for record pages.

The page model enumerates exactly the content graph's triples about the
record subject; rendering and extraction agree on the attribute set
about/typeof/property/resource/content/datatype.
"""

from __future__ import annotations

import html
from dataclasses import dataclass
from typing import Optional

from ..model import Term
from ..templates import Template
from .mapping import ContentGraph
from .namespaces import RDF_TYPE

__all__ = ["RdfaRow", "RdfaPageModel", "rdfa_model", "render_rdfa_rows"]


@dataclass(frozen=True)
class RdfaRow:
    property_iri: str
    display_label: str
    value: Term  # literal or IRI object


@dataclass(frozen=True)
class RdfaPageModel:
    subject_iri: str
    type_iri: str
    rows: tuple[RdfaRow, ...]


def rdfa_model(graph: ContentGraph, template: Template) -> RdfaPageModel:
    """Project the record's triples into display rows.

    The type triple is carried by type_iri; every other triple about the
    record subject becomes exactly one row.
    """
    labels_by_property = {spec.property_iri: spec.label for spec in template.fields}
    subject: Optional[str] = None
    type_iri = template.class_iri
    for q in graph.quads:
        if q.predicate.value == RDF_TYPE and q.object.value == template.class_iri:
            subject = q.subject.value
            type_iri = q.object.value
            break
    if subject is None:
        raise ValueError("content graph carries no typed record subject")

    entity_labels: dict[str, str] = {}
    for q in graph.quads:
        if q.predicate.value == "http://www.w3.org/2000/01/rdf-schema#label" and q.object.is_literal:
            entity_labels.setdefault(q.subject.value, q.object.value)

    rows = []
    for q in sorted(graph.quads, key=lambda q: (q.predicate.value, q.object.value)):
        if q.subject.value != subject or q.predicate.value == RDF_TYPE:
            continue
        display = labels_by_property.get(q.predicate.value, q.predicate.value)
        if q.object.is_iri:
            display_value = entity_labels.get(q.object.value, q.object.value)
            rows.append(RdfaRow(q.predicate.value, display, q.object))
        else:
            rows.append(RdfaRow(q.predicate.value, display, q.object))
    return RdfaPageModel(subject, type_iri, tuple(rows))


def render_rdfa_rows(model: RdfaPageModel, entity_labels: Optional[dict[str, str]] = None) -> str:
    """The RDFa-bearing HTML fragment for a record page.

    One container div carries about/typeof; each row emits exactly one
    triple via property + (resource | content/text).
    """
    entity_labels = entity_labels or {}
    parts = [
        f'<div class="record" about="{html.escape(model.subject_iri, quote=True)}" '
        f'typeof="{html.escape(model.type_iri, quote=True)}">'
    ]
    for row in model.rows:
        prop = html.escape(row.property_iri, quote=True)
        label = html.escape(row.display_label)
        parts.append('<div class="row">')
        parts.append(f'<span class="field-label">{label}</span> ')
        value = row.value
        if value.is_iri:
            target = html.escape(value.value, quote=True)
            text = html.escape(entity_labels.get(value.value, value.value))
            parts.append(
                f'<a property="{prop}" resource="{target}" href="{target}">{text}</a>'
            )
        elif value.language is not None:
            parts.append(
                f'<span property="{prop}" lang="{html.escape(value.language, quote=True)}">'
                f"{html.escape(value.value)}</span>"
            )
        elif value.datatype is not None:
            parts.append(
                f'<span property="{prop}" datatype="{html.escape(value.datatype, quote=True)}" '
                f'content="{html.escape(value.value, quote=True)}">{html.escape(value.value)}</span>'
            )
        else:
            parts.append(f'<span property="{prop}">{html.escape(value.value)}</span>')
        parts.append("</div>")
    parts.append("</div>")
    return "\n".join(parts)
