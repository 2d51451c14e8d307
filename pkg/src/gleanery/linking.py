"""Reconciliation suggestions, duplicate detection, NER orchestration, and
entity context enrichment.

Remote providers degrade, never fail: a timeout yields local-only results
plus a degraded flag. The built-in extractor is deterministic (capitalized
token runs plus a gazetteer of local entity labels) so installations work
offline.
"""

from __future__ import annotations

import re
import time
import unicodedata
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

from .clients import ClientRegistry
from .editorial import EditorialEngine
from .errors import GleaneryError
from .model import (
    GraphSet,
    Quad,
    RecordId,
    context_graph_iri,
    iri,
    literal,
    random_local_id,
)
from .rdfio import RDFS_LABEL
from .rdfio.mapping import ContentGraph
from .templates import FieldSpec, Template

__all__ = [
    "Suggestion",
    "SuggestResult",
    "EntityCandidate",
    "ExtractionResult",
    "EnrichmentRule",
    "NoDisambiguationField",
    "BuiltinExtractor",
    "LinkingService",
    "normalize_disambiguation_value",
]

GEO_LAT = "http://www.w3.org/2003/01/geo/wgs84_pos#lat"
GEO_LONG = "http://www.w3.org/2003/01/geo/wgs84_pos#long"
PROVIDER_DEADLINE = 3.0


class NoDisambiguationField(GleaneryError):
    pass


@dataclass(frozen=True)
class Suggestion:
    iri: str
    label: str
    description: Optional[str]
    source: str  # "local" or the external provider name
    link: str


@dataclass(frozen=True)
class SuggestResult:
    suggestions: tuple[Suggestion, ...]
    degraded: bool = False


@dataclass(frozen=True)
class EntityCandidate:
    surface: str
    start: int
    end: int
    kb_iri: Optional[str]
    label: str
    confidence: float
    providers: frozenset[str]


@dataclass(frozen=True)
class ExtractionResult:
    candidates: tuple[EntityCandidate, ...]
    degraded: bool = False


@dataclass(frozen=True)
class EnrichmentRule:
    applies_to: str
    fetch_query_template: str  # one {entity} placeholder
    target_properties: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.fetch_query_template.count("{entity}") != 1:
            raise ValueError("fetch_query_template needs exactly one {entity} placeholder")


def normalize_disambiguation_value(value: str) -> str:
    """NFC, casefold, punctuation stripped, whitespace collapsed."""
    value = unicodedata.normalize("NFC", value).casefold()
    cleaned = "".join(
        " " if unicodedata.category(c).startswith("P") else c for c in value
    )
    return " ".join(cleaned.split())


_CAP_TOKEN = re.compile(r"[A-ZÀ-Þ][\w'’-]*")
_SENTENCE_STOPWORDS = {
    "the", "a", "an", "in", "on", "at", "this", "that", "it", "he", "she",
    "they", "we", "i", "his", "her", "its", "there", "these", "those", "some",
}


class BuiltinExtractor:
    """Deterministic extractor: maximal runs of capitalized tokens, with a
    gazetteer of known labels upgrading exact spans to resolved entities.

    A run's leading token is dropped when it opens a sentence and is a
    common function word (so "The Louvre" at sentence start yields "Louvre").
    """

    name = "builtin"

    def __init__(self, gazetteer: Optional[dict[str, str]] = None) -> None:
        # label -> entity IRI
        self.gazetteer = {k: v for k, v in (gazetteer or {}).items() if len(k) >= 3}

    @staticmethod
    def _sentence_start(text: str, pos: int) -> bool:
        head = text[:pos].rstrip()
        return pos == 0 or (head and head[-1] in ".!?\n") or text[:pos].endswith("\n")

    def _heuristic_spans(self, text: str) -> list[tuple[int, int]]:
        spans: list[tuple[int, int]] = []
        tokens = list(_CAP_TOKEN.finditer(text))
        i = 0
        while i < len(tokens):
            j = i
            while (
                j + 1 < len(tokens)
                and text[tokens[j].end() : tokens[j + 1].start()] == " "
            ):
                j += 1
            start, end = tokens[i].start(), tokens[j].end()
            first = tokens[i].group(0)
            if self._sentence_start(text, start) and first.lower() in _SENTENCE_STOPWORDS:
                if j > i:
                    start = tokens[i + 1].start()
                else:
                    i = j + 1
                    continue
            spans.append((start, end))
            i = j + 1
        return spans

    def extract(self, text: str) -> list[EntityCandidate]:
        candidates: dict[tuple[int, int], EntityCandidate] = {}
        for start, end in self._heuristic_spans(text):
            surface = text[start:end]
            candidates[(start, end)] = EntityCandidate(
                surface=surface,
                start=start,
                end=end,
                kb_iri=None,
                label=surface,
                confidence=0.5,
                providers=frozenset([self.name]),
            )
        lowered = text.lower()
        for label in sorted(self.gazetteer):
            needle = label.lower()
            pos = 0
            while True:
                found = lowered.find(needle, pos)
                if found < 0:
                    break
                pos = found + 1
                end = found + len(needle)
                boundary_ok = (found == 0 or not lowered[found - 1].isalnum()) and (
                    end == len(lowered) or not lowered[end].isalnum()
                )
                if not boundary_ok:
                    continue
                surface = text[found:end]
                existing = candidates.get((found, end))
                entity = self.gazetteer[label]
                if existing is not None:
                    candidates[(found, end)] = replace(
                        existing, kb_iri=entity, label=label, confidence=0.9
                    )
                else:
                    candidates[(found, end)] = EntityCandidate(
                        surface=surface,
                        start=found,
                        end=end,
                        kb_iri=entity,
                        label=label,
                        confidence=0.9,
                        providers=frozenset([self.name]),
                    )
        return [candidates[k] for k in sorted(candidates)]


class _RemoteNerProvider:
    def __init__(self, client, threshold: float) -> None:
        self.client = client
        self.name = client.name
        self.threshold = threshold

    def extract(self, text: str) -> list[EntityCandidate]:
        spans = self.client.annotate(text, self.threshold)
        out = []
        for span in spans:
            out.append(
                EntityCandidate(
                    surface=span["surface"],
                    start=span["start"],
                    end=span["end"],
                    kb_iri=span.get("kb_iri"),
                    label=span["surface"],
                    confidence=float(span.get("confidence", self.threshold)),
                    providers=frozenset([self.name]),
                )
            )
        return out


def merge_candidates(text: str, groups: Sequence[list[EntityCandidate]]) -> list[EntityCandidate]:
    """Merge candidates across providers: overlapping spans with an equal
    KB target collapse into one, carrying the union of agreeing providers."""
    pool = [c for group in groups for c in group]
    pool.sort(key=lambda c: (c.start, -(c.end - c.start), c.kb_iri or "", sorted(c.providers)))
    merged: list[EntityCandidate] = []
    for cand in pool:
        hit = None
        for idx, existing in enumerate(merged):
            overlap = cand.start < existing.end and existing.start < cand.end
            if overlap and existing.kb_iri == cand.kb_iri:
                hit = idx
                break
        if hit is None:
            merged.append(cand)
        else:
            existing = merged[hit]
            start = min(existing.start, cand.start)
            end = max(existing.end, cand.end)
            merged[hit] = EntityCandidate(
                surface=text[start:end],
                start=start,
                end=end,
                kb_iri=existing.kb_iri,
                label=existing.label if existing.confidence >= cand.confidence else cand.label,
                confidence=max(existing.confidence, cand.confidence),
                providers=existing.providers | cand.providers,
            )
    merged.sort(key=lambda c: (c.start, c.end, c.kb_iri or ""))
    return merged


class LinkingService:
    def __init__(
        self,
        engine: EditorialEngine,
        registry: Optional[ClientRegistry] = None,
        ner_threshold: float = 0.5,
        provider_deadline: float = PROVIDER_DEADLINE,
    ) -> None:
        self.engine = engine
        self.store = engine.store
        self.templates = engine.templates
        self.config = engine.config
        self.registry = registry or ClientRegistry()
        self.ner_threshold = ner_threshold
        self.provider_deadline = provider_deadline

    # --- local knowledge ----------------------------------------------------

    def local_entity_labels(self) -> dict[str, str]:
        """Known entity IRIs and labels: rdfs:label triples plus the label
        field of every record, drafts included."""
        labels: dict[str, str] = {}
        for graph_iri in self.store.graph_iris():
            for q in self.store.graph(graph_iri):
                if q.predicate.value == RDFS_LABEL and q.object.is_literal and q.subject.is_iri:
                    labels.setdefault(q.subject.value, q.object.value)
        for template in self.templates.all():
            label_field = template.label_field()
            if label_field is None:
                continue
            for record_iri, value in self._record_label_values(template, label_field):
                labels.setdefault(record_iri, value)
        return labels

    def _record_label_values(self, template: Template, label_field: FieldSpec):
        seen = set()
        for graph_iri in self.store.graph_iris():
            if not graph_iri.endswith("/") or graph_iri.endswith(("/prov/", "/pub/")):
                continue
            prefix = f"{self.config.base_uri}{template.resource_name}/"
            record_iri = graph_iri[:-1]
            if not record_iri.startswith(prefix):
                continue
            for q in self.store.graph(graph_iri):
                if (
                    q.subject.value == record_iri
                    and q.predicate.value == label_field.property_iri
                    and q.object.is_literal
                ):
                    if record_iri not in seen:
                        seen.add(record_iri)
                        yield record_iri, q.object.value

    # --- suggestions ----------------------------------------------------------

    def suggest(self, field: FieldSpec, text: str, limit: int) -> SuggestResult:
        if field.widget != "entity":
            raise ValueError("suggestions apply to entity fields")
        if len(text) < 2:
            return SuggestResult((), False)

        suggestions: list[Suggestion] = []
        seen: set[str] = set()
        degraded = False

        if "local" in field.autocomplete_sources or not field.autocomplete_sources:
            needle = text.casefold()
            for entity_iri, label in sorted(self.local_entity_labels().items()):
                if needle in label.casefold() and entity_iri not in seen:
                    seen.add(entity_iri)
                    suggestions.append(
                        Suggestion(entity_iri, label, None, "local", entity_iri)
                    )
        suggestions.sort(key=lambda s: (s.label.casefold().find(text.casefold()), s.label))

        if "external" in field.autocomplete_sources and self.registry.lookup:
            # one concurrent fan-out under a single shared deadline, merged in
            # client-name order so arrival timing never changes the result
            results: dict[str, list] = {}
            deadline = time.monotonic() + self.provider_deadline
            pool = ThreadPoolExecutor(max_workers=len(self.registry.lookup))
            futures = {
                client.name: pool.submit(client.search, text, limit)
                for client in self.registry.lookup
            }
            for name, future in futures.items():
                try:
                    results[name] = future.result(timeout=max(0.0, deadline - time.monotonic()))
                except Exception:
                    degraded = True
            pool.shutdown(wait=False, cancel_futures=True)
            for name in sorted(results):
                for hit in results[name]:
                    if hit["id"] in seen:
                        continue  # local wins on identical IRIs
                    seen.add(hit["id"])
                    suggestions.append(
                        Suggestion(
                            hit["id"], hit["label"], hit.get("description"), name, hit["url"]
                        )
                    )
        return SuggestResult(tuple(suggestions[:limit]), degraded)

    # --- duplicates -------------------------------------------------------------

    def check_duplicates(self, template: Template, value: str) -> list[tuple[RecordId, str, str]]:
        dis = template.disambiguate_field()
        if dis is None:
            raise NoDisambiguationField(f"template {template.template_id!r} has no disambiguation field")
        query_norm = normalize_disambiguation_value(value)
        query_tokens = set(query_norm.split())
        if not query_tokens:
            return []
        hits: list[tuple[RecordId, str, str]] = []
        for record_iri, stored in self._record_label_values(template, dis):
            stored_norm = normalize_disambiguation_value(stored)
            stored_tokens = set(stored_norm.split())
            if (
                stored_norm == query_norm
                or stored_tokens >= query_tokens
                or query_tokens >= stored_tokens
            ):
                record_id = RecordId(record_iri.rsplit("/", 1)[-1], template.template_id)
                state = self.engine.record_state(record_id)
                hits.append((record_id, stored, state.stage))
        hits.sort(key=lambda h: h[0].local)
        return hits

    # --- NER ---------------------------------------------------------------------

    def providers(self) -> list:
        out: list = [BuiltinExtractor(self.local_entity_labels())]
        for client in self.registry.ner:
            out.append(_RemoteNerProvider(client, self.ner_threshold))
        return out

    def extract_entities(self, text: str, providers: Optional[Sequence] = None) -> ExtractionResult:
        if not text:
            raise ValueError("extraction needs non-empty text")
        chosen = list(providers) if providers is not None else self.providers()
        results: list[list[EntityCandidate]] = []
        degraded = False
        if len(chosen) == 1:
            try:
                results.append(chosen[0].extract(text))
            except Exception:
                degraded = True
        else:
            deadline = time.monotonic() + self.provider_deadline
            pool = ThreadPoolExecutor(max_workers=len(chosen))
            futures = [(p, pool.submit(p.extract, text)) for p in chosen]
            for provider, future in futures:
                try:
                    results.append(
                        future.result(timeout=max(0.0, deadline - time.monotonic()))
                    )
                except Exception:
                    degraded = True
            pool.shutdown(wait=False, cancel_futures=True)
        candidates = merge_candidates(text, results)
        for c in candidates:
            assert 0 <= c.start < c.end <= len(text)
        return ExtractionResult(tuple(candidates), degraded)

    # --- approvals -----------------------------------------------------------------

    def apply_approvals(
        self,
        record_graph: ContentGraph,
        field: FieldSpec,
        approved: Sequence[EntityCandidate],
    ) -> GraphSet:
        """Quads adding approved candidates as machine-readable keywords.

        Discarded candidates leave no trace; re-applying the same approvals
        cannot duplicate quads (existing objects with the same label are
        reused instead of minting twice)."""
        if not field.ner:
            raise ValueError("approvals apply to ner-enabled fields")
        graph_iri = record_graph.graph_iri
        record_iri = graph_iri[:-1] if graph_iri.endswith("/") else graph_iri
        subject = iri(record_iri)
        g = iri(record_graph.graph_iri)
        existing_by_label: dict[str, str] = {}
        for q in record_graph.quads:
            if q.subject.value == record_iri and q.predicate.value == field.property_iri:
                for lq in record_graph.quads:
                    if lq.subject == q.object and lq.predicate.value == RDFS_LABEL:
                        existing_by_label[lq.object.value] = q.object.value
        out = GraphSet()
        for cand in approved:
            label = cand.label or cand.surface
            if cand.kb_iri:
                obj = cand.kb_iri
            elif label in existing_by_label:
                obj = existing_by_label[label]
            else:
                obj = f"{self.config.base_uri}entity/{random_local_id()}"
                existing_by_label[label] = obj
            out.add(Quad(subject, iri(field.property_iri), iri(obj), g))
            out.add(Quad(iri(obj), iri(RDFS_LABEL), literal(label), g))
        return out

    # --- enrichment -------------------------------------------------------------------

    def enrich_entity(self, entity_iri: str, rules: Sequence[EnrichmentRule], sparql_client) -> GraphSet:
        """Fetch context values for one entity; stored in the shared context
        graph, replacing that entity's previous values. Best-effort."""
        context_iri = context_graph_iri(self.config)
        g = iri(context_iri)
        fetched = GraphSet()
        touched: set[str] = set()
        for rule in rules:
            query = rule.fetch_query_template.replace("{entity}", f"<{entity_iri}>")
            try:
                table = sparql_client.select(query)
            except GleaneryError:
                continue
            touched.update(rule.target_properties)
            for row in table.rows:
                for position, prop in enumerate(rule.target_properties):
                    if position >= len(table.vars):
                        break
                    term = row.get(table.vars[position])
                    if term is not None and not term.is_blank:
                        fetched.add(Quad(iri(entity_iri), iri(prop), term, g))
        if not touched:
            return GraphSet()
        kept = GraphSet(
            q
            for q in self.store.graph(context_iri)
            if not (q.subject.value == entity_iri and q.predicate.value in touched)
        )
        kept.update(fetched)
        self.store.replace_graph(context_iri, kept)
        return fetched

    # --- geolocation --------------------------------------------------------------------

    def geolocate(self, place_label: str) -> Optional[tuple[float, float]]:
        if self.registry.geocoder is None:
            return None
        try:
            return self.registry.geocoder.geocode(place_label)
        except GleaneryError:
            return None

    def store_geolocation(self, entity_iri: str, coords: tuple[float, float]) -> None:
        context_iri = context_graph_iri(self.config)
        g = iri(context_iri)
        decimal = "http://www.w3.org/2001/XMLSchema#decimal"
        kept = GraphSet(
            q
            for q in self.store.graph(context_iri)
            if not (q.subject.value == entity_iri and q.predicate.value in (GEO_LAT, GEO_LONG))
        )
        kept.add(Quad(iri(entity_iri), iri(GEO_LAT), literal(repr(coords[0]), decimal), g))
        kept.add(Quad(iri(entity_iri), iri(GEO_LONG), literal(repr(coords[1]), decimal), g))
        self.store.replace_graph(context_iri, kept)
