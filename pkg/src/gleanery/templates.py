"""Templates: parsed JSON mapping documents that drive forms, validation,
review, and facets.

The JSON schema is strict (unknown keys are rejected) and documented in
docs/template-schema.md. Vocabularies for dropdown fields are separate JSON
documents loaded from the data directory.
"""

from __future__ import annotations

import datetime
import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence, Union
from urllib.parse import urlsplit

from .errors import GleaneryError
from .model import is_absolute_iri

__all__ = [
    "WIDGETS",
    "FieldSpec",
    "Template",
    "Vocabulary",
    "Literal",
    "Entity",
    "NewEntity",
    "FieldValue",
    "ValidatedRecordData",
    "WidgetBinding",
    "FormSpec",
    "TemplateError",
    "MalformedJson",
    "UnknownWidget",
    "DuplicateFieldId",
    "MultipleDisambiguationFields",
    "InvalidIri",
    "ConstraintViolation",
    "ValidationError",
    "MissingRequired",
    "CardinalityViolation",
    "BadUrl",
    "BadDate",
    "UnknownField",
    "VocabularyTermUnknown",
    "parse_template",
    "serialize_template",
    "validate_submission",
    "form_model",
    "load_vocabulary",
    "TemplateStore",
]

WIDGETS = ("literal", "text_long", "entity", "dropdown", "checkbox", "date", "url")
_RESOURCE_NAME_RE = re.compile(r"^[a-z][a-z0-9_-]*$")

XSD_BOOLEAN = "http://www.w3.org/2001/XMLSchema#boolean"
XSD_DATE = "http://www.w3.org/2001/XMLSchema#date"
XSD_ANYURI = "http://www.w3.org/2001/XMLSchema#anyURI"


class TemplateError(GleaneryError):
    """Base for template parsing errors."""


class MalformedJson(TemplateError):
    pass


class UnknownWidget(TemplateError):
    def __init__(self, name: str, field_id: Optional[str] = None) -> None:
        where = f"field {field_id!r}: " if field_id else ""
        super().__init__(f"{where}unknown widget {name!r}")
        self.name = name
        self.field_id = field_id


class DuplicateFieldId(TemplateError):
    def __init__(self, field_id: str) -> None:
        super().__init__(f"duplicate field id {field_id!r}")
        self.field_id = field_id


class MultipleDisambiguationFields(TemplateError):
    pass


class InvalidIri(TemplateError):
    def __init__(self, field_id: str, value: str) -> None:
        super().__init__(f"field {field_id!r}: not an absolute IRI: {value!r}")
        self.field_id = field_id


class ConstraintViolation(TemplateError):
    def __init__(self, field_id: str, reason: str) -> None:
        super().__init__(f"field {field_id!r}: {reason}")
        self.field_id = field_id
        self.reason = reason


class ValidationError(GleaneryError):
    """Base for submission validation errors."""


class MissingRequired(ValidationError):
    def __init__(self, field_id: str) -> None:
        super().__init__(f"required field {field_id!r} is empty")
        self.field_id = field_id


class CardinalityViolation(ValidationError):
    def __init__(self, field_id: str, count: int) -> None:
        super().__init__(f"field {field_id!r} takes exactly one value, got {count}")
        self.field_id = field_id


class BadUrl(ValidationError):
    def __init__(self, field_id: str, value: str) -> None:
        super().__init__(f"field {field_id!r}: not an absolute URL: {value!r}")
        self.field_id = field_id
        self.value = value


class BadDate(ValidationError):
    def __init__(self, field_id: str, value: str) -> None:
        super().__init__(f"field {field_id!r}: not an ISO-8601 date: {value!r}")
        self.field_id = field_id
        self.value = value


class UnknownField(ValidationError):
    def __init__(self, field_id: str) -> None:
        super().__init__(f"unknown field {field_id!r}")
        self.field_id = field_id


class VocabularyTermUnknown(ValidationError):
    def __init__(self, field_id: str, value: str) -> None:
        super().__init__(f"field {field_id!r}: {value!r} is not in the vocabulary")
        self.field_id = field_id
        self.value = value


@dataclass(frozen=True)
class FieldSpec:
    id: str
    label: str
    widget: str
    property_iri: str
    required: bool = False
    cardinality: str = "many"  # "one" | "many"
    disambiguate: bool = False
    autocomplete_sources: tuple[str, ...] = ()
    ner: bool = False
    vocabulary_id: Optional[str] = None
    facet_role: Optional[str] = None  # "facet" | "sort" | "group"
    archive_url: bool = False


@dataclass(frozen=True)
class Template:
    template_id: str
    resource_name: str
    class_iri: str
    label: str
    fields: tuple[FieldSpec, ...]

    def field_by_id(self, field_id: str) -> FieldSpec:
        for f in self.fields:
            if f.id == field_id:
                return f
        raise UnknownField(field_id)

    def disambiguate_field(self) -> Optional[FieldSpec]:
        for f in self.fields:
            if f.disambiguate:
                return f
        return None

    def label_field(self) -> Optional[FieldSpec]:
        """The field whose value doubles as the record's human label."""
        dis = self.disambiguate_field()
        if dis is not None:
            return dis
        for f in self.fields:
            if f.required and f.widget in ("literal", "text_long"):
                return f
        return None


@dataclass(frozen=True)
class Vocabulary:
    vocabulary_id: str
    terms: tuple[tuple[str, str], ...]  # (term_iri, label)

    def label_for(self, term_iri: str) -> Optional[str]:
        for t, l in self.terms:
            if t == term_iri:
                return l
        return None


# --- field values ----------------------------------------------------------


@dataclass(frozen=True)
class Literal:
    text: str
    datatype: Optional[str] = None


@dataclass(frozen=True)
class Entity:
    iri: str
    label: str


@dataclass(frozen=True)
class NewEntity:
    label: str


FieldValue = Union[Literal, Entity, NewEntity]


@dataclass(frozen=True)
class ValidatedRecordData:
    template_id: str
    values: Mapping[str, tuple[FieldValue, ...]]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", dict(self.values))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ValidatedRecordData):
            return NotImplemented
        return self.template_id == other.template_id and dict(self.values) == dict(other.values)


# --- parsing ---------------------------------------------------------------

_TEMPLATE_KEYS = {"template_id", "resource_name", "class_iri", "label", "fields"}
_FIELD_KEYS = {
    "id",
    "label",
    "widget",
    "property_iri",
    "required",
    "cardinality",
    "disambiguate",
    "autocomplete_sources",
    "ner",
    "vocabulary_id",
    "facet_role",
    "archive_url",
}


def _require(doc: Mapping[str, Any], key: str, where: str) -> Any:
    if key not in doc:
        raise ConstraintViolation(where, f"missing required key {key!r}")
    return doc[key]


def _parse_field(doc: Mapping[str, Any]) -> FieldSpec:
    if not isinstance(doc, dict):
        raise ConstraintViolation("?", "field entries must be objects")
    field_id = str(_require(doc, "id", "?"))
    unknown = set(doc) - _FIELD_KEYS
    if unknown:
        raise ConstraintViolation(field_id, f"unknown keys {sorted(unknown)}")

    widget = _require(doc, "widget", field_id)
    if widget not in WIDGETS:
        raise UnknownWidget(str(widget), field_id)
    property_iri = str(_require(doc, "property_iri", field_id))
    if not is_absolute_iri(property_iri):
        raise InvalidIri(field_id, property_iri)

    cardinality = doc.get("cardinality", "many")
    if cardinality not in ("one", "many"):
        raise ConstraintViolation(field_id, f"cardinality must be one|many, got {cardinality!r}")
    sources = tuple(doc.get("autocomplete_sources", ()) or ())
    for s in sources:
        if s not in ("local", "external"):
            raise ConstraintViolation(field_id, f"autocomplete source must be local|external: {s!r}")
    facet_role = doc.get("facet_role")
    if facet_role is not None and facet_role not in ("facet", "sort", "group"):
        raise ConstraintViolation(field_id, f"facet_role must be facet|sort|group: {facet_role!r}")

    spec = FieldSpec(
        id=field_id,
        label=str(doc.get("label", field_id)),
        widget=widget,
        property_iri=property_iri,
        required=bool(doc.get("required", False)),
        cardinality=cardinality,
        disambiguate=bool(doc.get("disambiguate", False)),
        autocomplete_sources=sources,
        ner=bool(doc.get("ner", False)),
        vocabulary_id=doc.get("vocabulary_id"),
        facet_role=facet_role,
        archive_url=bool(doc.get("archive_url", False)),
    )
    if spec.ner and spec.widget != "text_long":
        raise ConstraintViolation(field_id, "ner is only valid on text_long fields")
    if spec.archive_url and spec.widget != "url":
        raise ConstraintViolation(field_id, "archive_url is only valid on url fields")
    if spec.autocomplete_sources and spec.widget != "entity":
        raise ConstraintViolation(field_id, "autocomplete_sources are only valid on entity fields")
    if spec.vocabulary_id is not None and spec.widget != "dropdown":
        raise ConstraintViolation(field_id, "vocabulary_id is only valid on dropdown fields")
    if spec.widget == "dropdown" and spec.vocabulary_id is None:
        raise ConstraintViolation(field_id, "dropdown fields require a vocabulary_id")
    if spec.facet_role == "sort" and spec.widget not in ("literal", "date"):
        raise ConstraintViolation(field_id, "facet_role=sort requires a literal or date widget")
    return spec


def parse_template(json_text: str) -> Template:
    """Parse and validate one template document (strict: unknown keys rejected)."""
    try:
        doc = json.loads(json_text)
    except json.JSONDecodeError as exc:
        raise MalformedJson(str(exc)) from exc
    if not isinstance(doc, dict):
        raise MalformedJson("template document must be a JSON object")
    unknown = set(doc) - _TEMPLATE_KEYS
    if unknown:
        raise ConstraintViolation("<template>", f"unknown keys {sorted(unknown)}")

    template_id = str(_require(doc, "template_id", "<template>"))
    resource_name = str(_require(doc, "resource_name", "<template>"))
    if not _RESOURCE_NAME_RE.match(resource_name):
        raise ConstraintViolation("<template>", f"bad resource_name {resource_name!r}")
    class_iri = str(_require(doc, "class_iri", "<template>"))
    if not is_absolute_iri(class_iri):
        raise InvalidIri("<template>", class_iri)
    raw_fields = _require(doc, "fields", "<template>")
    if not isinstance(raw_fields, list) or not raw_fields:
        raise ConstraintViolation("<template>", "fields must be a non-empty list")

    fields = tuple(_parse_field(f) for f in raw_fields)
    seen: set[str] = set()
    for f in fields:
        if f.id in seen:
            raise DuplicateFieldId(f.id)
        seen.add(f.id)
    if sum(1 for f in fields if f.disambiguate) > 1:
        raise MultipleDisambiguationFields("at most one field may disambiguate")

    return Template(
        template_id=template_id,
        resource_name=resource_name,
        class_iri=class_iri,
        label=str(doc.get("label", template_id)),
        fields=fields,
    )


def serialize_template(template: Template) -> str:
    """Inverse of parse_template on the Template model."""
    fields = []
    for f in template.fields:
        entry: dict[str, Any] = {
            "id": f.id,
            "label": f.label,
            "widget": f.widget,
            "property_iri": f.property_iri,
            "required": f.required,
            "cardinality": f.cardinality,
            "disambiguate": f.disambiguate,
        }
        if f.autocomplete_sources:
            entry["autocomplete_sources"] = list(f.autocomplete_sources)
        if f.ner:
            entry["ner"] = True
        if f.vocabulary_id is not None:
            entry["vocabulary_id"] = f.vocabulary_id
        if f.facet_role is not None:
            entry["facet_role"] = f.facet_role
        if f.archive_url:
            entry["archive_url"] = True
        fields.append(entry)
    doc = {
        "template_id": template.template_id,
        "resource_name": template.resource_name,
        "class_iri": template.class_iri,
        "label": template.label,
        "fields": fields,
    }
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


# --- validation ------------------------------------------------------------


def _is_absolute_url(value: str) -> bool:
    parts = urlsplit(value)
    return bool(parts.scheme) and bool(parts.netloc)


def _coerce_value(spec: FieldSpec, raw: Any, vocab: Optional[Vocabulary]) -> Optional[FieldValue]:
    """Normalize one raw value; None means 'empty, drop it'."""
    if isinstance(raw, (Literal, Entity, NewEntity)):
        # re-validation path: unwrap to primitive form, fall through below
        if isinstance(raw, Literal):
            raw = raw.text
        elif isinstance(raw, Entity):
            raw = {"iri": raw.iri, "label": raw.label}
        else:
            raw = {"label": raw.label}

    if spec.widget == "entity" or (spec.ner and isinstance(raw, dict)):
        # ner-enabled long-text fields accept entity refs alongside the text:
        # approved extraction candidates ride in as keyword values
        if isinstance(raw, dict):
            label = str(raw.get("label", "")).strip()
            iri_value = str(raw.get("iri", "")).strip()
            if iri_value:
                if not is_absolute_iri(iri_value):
                    raise ConstraintViolation(spec.id, f"entity iri is not absolute: {iri_value!r}")
                return Entity(iri_value, label or iri_value)
            if not label:
                return None
            return NewEntity(label)
        text = str(raw).strip()
        return NewEntity(text) if text else None

    if spec.widget == "dropdown":
        if isinstance(raw, dict):
            raw = raw.get("iri", "")
        term = str(raw).strip()
        if not term:
            return None
        if vocab is None or vocab.label_for(term) is None:
            raise VocabularyTermUnknown(spec.id, term)
        return Entity(term, vocab.label_for(term) or term)

    if spec.widget == "checkbox":
        if isinstance(raw, bool):
            text = "true" if raw else "false"
        else:
            text = str(raw).strip().lower()
        if not text:
            return None
        if text not in ("true", "false"):
            raise ConstraintViolation(spec.id, f"checkbox value must be true/false: {raw!r}")
        return Literal(text, XSD_BOOLEAN)

    text = str(raw).strip()
    if not text:
        return None
    if spec.widget == "date":
        try:
            datetime.date.fromisoformat(text)
        except ValueError:
            raise BadDate(spec.id, text) from None
        return Literal(text, XSD_DATE)
    if spec.widget == "url":
        if not _is_absolute_url(text):
            raise BadUrl(spec.id, text)
        return Literal(text, XSD_ANYURI)
    return Literal(text)


def validate_submission(
    template: Template,
    raw: Mapping[str, Sequence[Any]],
    vocabularies: Optional[Mapping[str, Vocabulary]] = None,
) -> ValidatedRecordData:
    """Validate and normalize one form submission against its template.

    Idempotent: feeding back the values of a ValidatedRecordData yields an
    equal value.
    """
    vocabularies = vocabularies or {}
    for field_id in raw:
        template.field_by_id(field_id)  # raises UnknownField

    values: dict[str, tuple[FieldValue, ...]] = {}
    for spec in template.fields:
        raw_list = raw.get(spec.id, ())
        if raw_list is None:
            raw_list = ()
        if isinstance(raw_list, (str, dict)) or not isinstance(raw_list, Sequence):
            raw_list = [raw_list]
        vocab = vocabularies.get(spec.vocabulary_id) if spec.vocabulary_id else None
        kept = [v for v in (_coerce_value(spec, r, vocab) for r in raw_list) if v is not None]
        if not kept:
            if spec.required:
                raise MissingRequired(spec.id)
            continue
        if spec.cardinality == "one" and len(kept) != 1:
            raise CardinalityViolation(spec.id, len(kept))
        values[spec.id] = tuple(kept)
    return ValidatedRecordData(template.template_id, values)


# --- form model ------------------------------------------------------------


@dataclass(frozen=True)
class WidgetBinding:
    field: FieldSpec
    suggest_endpoint: Optional[str] = None
    suggest_sources: tuple[str, ...] = ()
    ner_endpoint: Optional[str] = None
    duplicate_endpoint: Optional[str] = None
    vocabulary_terms: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class FormSpec:
    template_id: str
    widgets: tuple[WidgetBinding, ...]


def form_model(
    template: Template,
    vocabularies: Optional[Mapping[str, Vocabulary]] = None,
) -> FormSpec:
    """One widget descriptor per field, in template order, with service bindings."""
    vocabularies = vocabularies or {}
    widgets = []
    for spec in template.fields:
        binding = WidgetBinding(field=spec)
        if spec.widget == "entity" and spec.autocomplete_sources:
            binding = replace(
                binding, suggest_endpoint="/api/suggest", suggest_sources=spec.autocomplete_sources
            )
        if spec.ner:
            binding = replace(binding, ner_endpoint="/api/ner")
        if spec.disambiguate:
            binding = replace(binding, duplicate_endpoint="/api/duplicates")
        if spec.vocabulary_id and spec.vocabulary_id in vocabularies:
            binding = replace(
                binding, vocabulary_terms=vocabularies[spec.vocabulary_id].terms
            )
        widgets.append(binding)
    return FormSpec(template.template_id, tuple(widgets))


# --- file loading ----------------------------------------------------------


def load_vocabulary(vocabulary_id: str, text: str) -> Vocabulary:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedJson(str(exc)) from exc
    if not isinstance(doc, list):
        raise MalformedJson("vocabulary document must be a JSON list")
    terms = []
    for entry in doc:
        term_iri = str(entry.get("term_iri", ""))
        if not is_absolute_iri(term_iri):
            raise InvalidIri(vocabulary_id, term_iri)
        terms.append((term_iri, str(entry.get("label", term_iri))))
    return Vocabulary(vocabulary_id, tuple(terms))


class TemplateStore:
    """Loads template and vocabulary JSON files from the data directory.

    Templates are immutable snapshots; saving rewrites the file and the
    in-memory map atomically. Existing records are never rewritten when a
    template changes (append-only policy; mismatches surface at review).
    """

    def __init__(self, data_dir: Path) -> None:
        self.data_dir = Path(data_dir)
        self.templates_dir = self.data_dir / "templates"
        self.vocab_dir = self.data_dir / "vocabularies"
        self._templates: dict[str, Template] = {}
        self._vocabularies: dict[str, Vocabulary] = {}
        self.reload()

    def reload(self) -> None:
        templates: dict[str, Template] = {}
        if self.templates_dir.is_dir():
            for path in sorted(self.templates_dir.glob("*.json")):
                t = parse_template(path.read_text("utf-8"))
                templates[t.template_id] = t
        vocabularies: dict[str, Vocabulary] = {}
        if self.vocab_dir.is_dir():
            for path in sorted(self.vocab_dir.glob("*.json")):
                v = load_vocabulary(path.stem, path.read_text("utf-8"))
                vocabularies[v.vocabulary_id] = v
        self._templates = templates
        self._vocabularies = vocabularies

    def get(self, template_id: str) -> Template:
        from .errors import NotFound

        if template_id not in self._templates:
            raise NotFound(f"no template {template_id!r}")
        return self._templates[template_id]

    def by_resource_name(self, resource_name: str) -> Optional[Template]:
        for t in self._templates.values():
            if t.resource_name == resource_name:
                return t
        return None

    def all(self) -> list[Template]:
        return [self._templates[k] for k in sorted(self._templates)]

    def vocabularies(self) -> Mapping[str, Vocabulary]:
        return dict(self._vocabularies)

    def vocabulary(self, vocabulary_id: str) -> Optional[Vocabulary]:
        return self._vocabularies.get(vocabulary_id)

    def save(self, template: Template) -> None:
        self.templates_dir.mkdir(parents=True, exist_ok=True)
        path = self.templates_dir / f"{template.template_id}.json"
        path.write_text(serialize_template(template), "utf-8")
        updated = dict(self._templates)
        updated[template.template_id] = template
        self._templates = updated
