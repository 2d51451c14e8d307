"""Facets, filtered listings, text search, and page models, all computed over
published snapshots only.

Facet and filter queries are generated as subset-SPARQL so the same code
path works against the embedded evaluator and a remote endpoint; public
routes never read working or provenance graphs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .clients import CachedVocabMeta
from .editorial import EditorialEngine, RecordState
from .errors import Forbidden, GleaneryError, NotFound
from .model import RecordId, Term, pub_graph_iri, working_graph_iri
from .rdfio import RDFS_LABEL, RDF_TYPE, rdfa_model, record_label
from .rdfio.mapping import ContentGraph
from .rdfio.rdfa import RdfaPageModel
from .rdfio.syntax import encode_term
from .templates import Template

__all__ = [
    "FieldNotFaceted",
    "BadPage",
    "UnknownVocabulary",
    "FacetBucket",
    "FacetResult",
    "RecordSummary",
    "RecordPage",
    "DataModelRow",
    "ExploreService",
]


class FieldNotFaceted(GleaneryError):
    def __init__(self, field_id: str) -> None:
        super().__init__(f"field {field_id!r} has no facet role")
        self.field_id = field_id


class BadPage(GleaneryError):
    pass


class UnknownVocabulary(GleaneryError):
    def __init__(self, vocabulary_id: str) -> None:
        super().__init__(f"no vocabulary {vocabulary_id!r}")
        self.vocabulary_id = vocabulary_id


@dataclass(frozen=True)
class FacetBucket:
    value: Term
    display_label: str
    count: int


@dataclass(frozen=True)
class FacetResult:
    field_id: str
    buckets: tuple[FacetBucket, ...]


@dataclass(frozen=True)
class RecordSummary:
    record_iri: str
    label: str
    template_id: str
    stage: str
    snippet: Optional[str] = None


@dataclass(frozen=True)
class RecordPage:
    rdfa: RdfaPageModel
    stage_banner: str
    provenance_digest: tuple[tuple[str, str, str], ...]  # (kind, agent, at)
    entity_labels: dict


@dataclass(frozen=True)
class DataModelRow:
    term_iri: str
    label: Optional[str]
    comment: Optional[str]
    source_vocabulary: Optional[str]
    usage_count: int


class ExploreService:
    def __init__(self, engine: EditorialEngine, vocab_meta: Optional[CachedVocabMeta] = None) -> None:
        self.engine = engine
        self.store = engine.store
        self.templates = engine.templates
        self.config = engine.config
        self.vocab_meta = vocab_meta

    # --- published data access -------------------------------------------------

    def _pub_graphs(self, template: Optional[Template] = None) -> list[str]:
        out = []
        for graph_iri in self.store.graph_iris():
            if not graph_iri.endswith("/pub/"):
                continue
            if template is not None:
                prefix = f"{self.config.base_uri}{template.resource_name}/"
                if not graph_iri.startswith(prefix):
                    continue
            out.append(graph_iri)
        return out

    def _record_of_pub_graph(self, graph_iri: str) -> str:
        return graph_iri[: -len("/pub/")]

    def _template_of_record(self, record_iri: str) -> Optional[Template]:
        rest = record_iri[len(self.config.base_uri):]
        resource_name = rest.split("/", 1)[0]
        return self.templates.by_resource_name(resource_name)

    def _state(self, record_iri: str, template: Template) -> RecordState:
        record_id = RecordId(record_iri.rsplit("/", 1)[-1], template.template_id)
        return self.engine.record_state(record_id)

    def _published_labels(self, template: Template) -> dict[str, str]:
        """entity/record IRI -> display label across this template's snapshots."""
        labels: dict[str, str] = {}
        label_field = template.label_field()
        for graph_iri in self._pub_graphs(template):
            record_iri = self._record_of_pub_graph(graph_iri)
            for q in self.store.graph(graph_iri):
                if q.predicate.value == RDFS_LABEL and q.object.is_literal:
                    labels.setdefault(q.subject.value, q.object.value)
                if (
                    label_field is not None
                    and q.subject.value == record_iri
                    and q.predicate.value == label_field.property_iri
                    and q.object.is_literal
                ):
                    labels.setdefault(record_iri, q.object.value)
        return labels

    def _summary(self, record_iri: str, template: Template, snippet: Optional[str] = None) -> RecordSummary:
        # public listings are pure functions of the snapshot: a record shown
        # here is published by construction, and live (draft) stage must not
        # leak into public bytes before the next publish
        pub = self.store.graph(pub_graph_iri(record_iri))
        label = record_label(ContentGraph(pub_graph_iri(record_iri), pub), template, record_iri)
        return RecordSummary(record_iri, label, template.template_id, "published", snippet)

    # --- facets -------------------------------------------------------------------

    def facet_query(self, template: Template, property_iri: str) -> str:
        prefix = f"{self.config.base_uri}{template.resource_name}/"
        return (
            "SELECT ?v (COUNT(?r) AS ?n) WHERE { "
            f"GRAPH ?g {{ ?r <{RDF_TYPE}> <{template.class_iri}> . ?r <{property_iri}> ?v . }} "
            'FILTER(CONTAINS(?g, "/pub/")) '
            f'FILTER(CONTAINS(?r, "{prefix}")) '
            "} GROUP BY ?v"
        )

    def facet_values(self, template: Template, field_id: str) -> FacetResult:
        field = template.field_by_id(field_id)
        if field.facet_role not in ("facet", "group"):
            raise FieldNotFaceted(field_id)
        table = self.store.select(self.facet_query(template, field.property_iri))
        labels = self._published_labels(template)
        buckets = []
        for row in table.rows:
            value = row.get("v")
            count = int(row["n"].value) if "n" in row else 0
            if value is None or count < 1:
                continue
            display = labels.get(value.value, value.value) if value.is_iri else value.value
            buckets.append(FacetBucket(value, display, count))
        buckets.sort(key=lambda b: (-b.count, b.display_label, encode_term(b.value)))
        return FacetResult(field_id, tuple(buckets))

    # --- filtering -------------------------------------------------------------------

    def filter_query(self, template: Template, constraints: Sequence[tuple[str, Term]]) -> str:
        prefix = f"{self.config.base_uri}{template.resource_name}/"
        patterns = [f"?r <{RDF_TYPE}> <{template.class_iri}> ."]
        for field_id, value in constraints:
            field = template.field_by_id(field_id)
            patterns.append(f"?r <{field.property_iri}> {encode_term(value)} .")
        return (
            "SELECT DISTINCT ?r WHERE { "
            f"GRAPH ?g {{ {' '.join(patterns)} }} "
            'FILTER(CONTAINS(?g, "/pub/")) '
            f'FILTER(CONTAINS(?r, "{prefix}")) '
            "}"
        )

    def filter_records(
        self,
        template: Template,
        constraints: Sequence[tuple[str, Term]] = (),
        sort: Optional[tuple[str, bool]] = None,
        page: tuple[int, int] = (50, 0),
    ) -> list[RecordSummary]:
        limit, offset = page
        if limit <= 0 or offset < 0:
            raise BadPage(f"bad page limit={limit} offset={offset}")
        for field_id, _ in constraints:
            if template.field_by_id(field_id).facet_role not in ("facet", "group"):
                raise FieldNotFaceted(field_id)
        sort_field = None
        if sort is not None:
            sort_field = template.field_by_id(sort[0])
            if sort_field.facet_role != "sort":
                raise FieldNotFaceted(sort[0])

        table = self.store.select(self.filter_query(template, constraints))
        record_iris = [row["r"].value for row in table.rows if "r" in row]

        summaries = [self._summary(r, template) for r in record_iris]
        if sort_field is not None:
            values: dict[str, str] = {}
            for record_iri in record_iris:
                for q in self.store.graph(pub_graph_iri(record_iri)):
                    if q.subject.value == record_iri and q.predicate.value == sort_field.property_iri:
                        current = values.get(record_iri)
                        if current is None or q.object.value < current:
                            values[record_iri] = q.object.value
            summaries.sort(key=lambda s: (s.record_iri,))
            summaries.sort(
                key=lambda s: (values.get(s.record_iri) is None, values.get(s.record_iri, "")),
                reverse=not sort[1],
            )
        else:
            summaries.sort(key=lambda s: (s.label.casefold(), s.record_iri))
        return summaries[offset : offset + limit]

    # --- text search ---------------------------------------------------------------------

    def text_search(self, query: str) -> list[RecordSummary]:
        if len(query) < 2:
            return []
        needle = query.casefold()
        hits: list[tuple[int, str, Template, str]] = []
        for graph_iri in self._pub_graphs():
            record_iri = self._record_of_pub_graph(graph_iri)
            template = self._template_of_record(record_iri)
            if template is None:
                continue
            matches = 0
            snippet = None
            for q in sorted(self.store.graph(graph_iri), key=encode_term_key):
                if not q.object.is_literal:
                    continue
                text = q.object.value
                pos = text.casefold().find(needle)
                if pos < 0:
                    continue
                matches += 1
                if snippet is None:
                    start = max(0, pos - 40)
                    end = min(len(text), pos + len(query) + 40)
                    snippet = text[start:end]
            if matches:
                hits.append((matches, record_iri, template, snippet or ""))
        hits.sort(key=lambda h: (-h[0], h[1]))
        return [self._summary(record, template, snippet) for _, record, template, snippet in hits]

    # --- record page ----------------------------------------------------------------------

    def record_page(self, record_id: RecordId, *, accredited: bool = False, preview: bool = False) -> RecordPage:
        template = self.templates.get(record_id.template_id)
        record_iri = self.engine.record_iri(record_id)
        state = self.engine.record_state(record_id)  # NotFound when missing
        if preview:
            if not accredited:
                raise Forbidden("draft preview requires an accredited user")
            graph_iri = working_graph_iri(record_iri)
        else:
            if not state.ever_published:
                if not accredited:
                    raise NotFound(f"record {record_id.local!r} is not published")
                graph_iri = working_graph_iri(record_iri)
                preview = True
            else:
                graph_iri = pub_graph_iri(record_iri)
        quads = self.store.graph(graph_iri)
        model = rdfa_model(ContentGraph(graph_iri, quads), template)
        entity_labels = {
            q.subject.value: q.object.value
            for q in quads
            if q.predicate.value == RDFS_LABEL and q.object.is_literal
        }
        if preview:
            # the live editorial state is visible to accredited eyes only
            if state.stage == "published":
                banner = "draft preview (published)"
            elif state.ever_published:
                banner = "draft preview; newer draft under review"
            else:
                banner = "draft preview"
            history = state.history
        else:
            # public bytes are a pure function of the snapshot + publication
            # history; drafting must not change them until the next publish
            banner = "published"
            last_publication = max(
                i for i, a in enumerate(state.history) if a.kind == "publication"
            )
            history = state.history[: last_publication + 1]
        digest = tuple((a.kind, a.agent.identifier, a.at) for a in history)
        return RecordPage(model, banner, digest, entity_labels)

    # --- data model and vocabulary pages ----------------------------------------------------

    def _usage_count(self, term_iri: str) -> int:
        count = 0
        for graph_iri in self._pub_graphs():
            for q in self.store.graph(graph_iri):
                if q.predicate.value == term_iri:
                    count += 1
                elif q.object.is_iri and q.object.value == term_iri:
                    count += 1
        return count

    def datamodel_page(self) -> list[DataModelRow]:
        terms: dict[str, None] = {}
        for template in self.templates.all():
            terms.setdefault(template.class_iri)
            for field in template.fields:
                terms.setdefault(field.property_iri)
        rows = []
        for term_iri in sorted(terms):
            info = self.vocab_meta.term_info(term_iri) if self.vocab_meta else None
            info = info or {}
            rows.append(
                DataModelRow(
                    term_iri=term_iri,
                    label=info.get("label"),
                    comment=info.get("comment"),
                    source_vocabulary=info.get("vocabulary_title"),
                    usage_count=self._usage_count(term_iri),
                )
            )
        return rows

    def vocab_page(self, vocabulary_id: str) -> list[tuple[str, str, int]]:
        vocabulary = self.templates.vocabulary(vocabulary_id)
        if vocabulary is None:
            raise UnknownVocabulary(vocabulary_id)
        return [
            (term_iri, label, self._usage_count(term_iri))
            for term_iri, label in vocabulary.terms
        ]


def encode_term_key(quad) -> tuple[str, str, str]:
    return (
        encode_term(quad.subject),
        encode_term(quad.predicate),
        encode_term(quad.object),
    )
