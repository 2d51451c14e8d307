"""Core domain values: RDF terms, quads, graph sets, record identifiers, configuration.

Everything here is immutable after construction and safe to share across
threads. No other gleanery module is imported from here.
"""

from __future__ import annotations

import re
import secrets
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional

__all__ = [
    "Term",
    "Quad",
    "GraphSet",
    "RecordId",
    "VcsConfig",
    "RateLimitConfig",
    "Config",
    "ConfigError",
    "iri",
    "literal",
    "blank",
    "mint_record_uri",
    "working_graph_iri",
    "prov_graph_iri",
    "pub_graph_iri",
    "entity_iri",
    "context_graph_iri",
    "vocab_cache_graph_iri",
    "random_local_id",
    "is_absolute_iri",
]

LOCAL_ID_ALPHABET = "0123456789abcdefghijklmnopqrstuvwxyz"
LOCAL_ID_RE = re.compile(r"^[0-9a-z]{8}$")
_SCHEME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.-]*:")
_LANGTAG_RE = re.compile(r"^[A-Za-z]{1,8}(-[A-Za-z0-9]{1,8})*$")


def is_absolute_iri(value: str) -> bool:
    """True when value carries a scheme and no characters an IRI forbids."""
    if not _SCHEME_RE.match(value):
        return False
    return not any(c in value for c in ' <>"{}|\\^`') and "\n" not in value and "\t" not in value


@dataclass(frozen=True)
class Term:
    """An RDF term: IRI, literal, or blank node.

    Equality is structural over all four fields. Literals carry at most one
    of datatype/language; blank labels are non-empty and whitespace-free.
    """

    kind: str  # "iri" | "literal" | "blank"
    value: str
    datatype: Optional[str] = None
    language: Optional[str] = None

    def __post_init__(self) -> None:
        if self.kind == "iri":
            if not is_absolute_iri(self.value):
                raise ValueError(f"not an absolute IRI: {self.value!r}")
            if self.datatype is not None or self.language is not None:
                raise ValueError("IRI terms carry no datatype/language")
        elif self.kind == "literal":
            if self.datatype is not None and self.language is not None:
                raise ValueError("a literal has at most one of datatype, language")
            if self.datatype is not None and not is_absolute_iri(self.datatype):
                raise ValueError(f"literal datatype is not an absolute IRI: {self.datatype!r}")
            if self.language is not None and not _LANGTAG_RE.match(self.language):
                raise ValueError(f"malformed language tag: {self.language!r}")
        elif self.kind == "blank":
            if not self.value or any(c.isspace() for c in self.value):
                raise ValueError(f"blank label must be non-empty without whitespace: {self.value!r}")
            if self.datatype is not None or self.language is not None:
                raise ValueError("blank terms carry no datatype/language")
        else:
            raise ValueError(f"unknown term kind: {self.kind!r}")

    @property
    def is_iri(self) -> bool:
        return self.kind == "iri"

    @property
    def is_literal(self) -> bool:
        return self.kind == "literal"

    @property
    def is_blank(self) -> bool:
        return self.kind == "blank"


def iri(value: str) -> Term:
    return Term("iri", value)


def literal(value: str, datatype: Optional[str] = None, language: Optional[str] = None) -> Term:
    return Term("literal", value, datatype=datatype, language=language)


def blank(label: str) -> Term:
    return Term("blank", label)


@dataclass(frozen=True)
class Quad:
    """One RDF statement inside a named graph."""

    subject: Term
    predicate: Term
    object: Term
    graph: Term

    def __post_init__(self) -> None:
        if self.subject.kind not in ("iri", "blank"):
            raise ValueError("quad subject must be an IRI or blank node")
        if not self.predicate.is_iri:
            raise ValueError("quad predicate must be an IRI")
        if not self.graph.is_iri:
            raise ValueError("quad graph must be an IRI")


class GraphSet:
    """An insertion-ordered set of quads; exact duplicates are dropped.

    Deterministic iteration follows insertion order; canonical ordering is
    applied by the serializer, not here. A GraphSet is a single-owner
    builder: the store copies its contents into immutable snapshots, so
    share those snapshots, not the builder, across tasks.
    """

    __slots__ = ("_quads",)

    def __init__(self, quads: Iterable[Quad] = ()) -> None:
        self._quads: dict[Quad, None] = {}
        for q in quads:
            self._quads[q] = None

    def add(self, quad: Quad) -> None:
        self._quads[quad] = None

    def update(self, quads: Iterable[Quad]) -> None:
        for q in quads:
            self._quads[q] = None

    def discard(self, quad: Quad) -> None:
        self._quads.pop(quad, None)

    def __iter__(self) -> Iterator[Quad]:
        return iter(self._quads)

    def __len__(self) -> int:
        return len(self._quads)

    def __contains__(self, quad: Quad) -> bool:
        return quad in self._quads

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GraphSet):
            return NotImplemented
        return set(self._quads) == set(other._quads)

    def __repr__(self) -> str:
        return f"GraphSet({len(self._quads)} quads)"

    def graph_iris(self) -> list[str]:
        """Distinct graph IRIs, in first-seen order."""
        seen: dict[str, None] = {}
        for q in self._quads:
            seen.setdefault(q.graph.value, None)
        return list(seen)

    def in_graph(self, graph_iri: str) -> "GraphSet":
        return GraphSet(q for q in self._quads if q.graph.value == graph_iri)

    def copy(self) -> "GraphSet":
        return GraphSet(self._quads)


@dataclass(frozen=True)
class RecordId:
    """Identifier of one record: random 8-char base-36 local part + its template."""

    local: str
    template_id: str

    def __post_init__(self) -> None:
        if not LOCAL_ID_RE.match(self.local):
            raise ValueError(f"record local id must match [0-9a-z]{{8}}: {self.local!r}")
        if not self.template_id:
            raise ValueError("template_id must be non-empty")


def random_local_id(rng: Optional[secrets.SystemRandom] = None) -> str:
    """A fresh 8-char base-36 local id. Collisions are handled by the caller."""
    chooser = rng or secrets.SystemRandom()
    return "".join(chooser.choice(LOCAL_ID_ALPHABET) for _ in range(8))


class ConfigError(ValueError):
    """Raised when a configuration violates its invariants."""

    code = "ConfigError"


@dataclass(frozen=True)
class VcsConfig:
    owner: str
    repo: str
    branch: str = "main"


@dataclass(frozen=True)
class RateLimitConfig:
    max_creates: int = 5
    window_seconds: int = 3600

    def __post_init__(self) -> None:
        if self.max_creates <= 0 or self.window_seconds <= 0:
            raise ConfigError("rate_limit values must be positive")


@dataclass(frozen=True)
class Config:
    """Installation-wide settings, loaded from one key-value file."""

    base_uri: str
    prefix: str
    data_dir: Path
    endpoint_mode: str = "embedded"  # "embedded" | "remote"
    endpoint_url: Optional[str] = None
    endpoint_update_url: Optional[str] = None
    vcs: Optional[VcsConfig] = None
    auth_mode: str = "anonymous"  # "anonymous" | "oauth"
    rate_limit: RateLimitConfig = field(default_factory=RateLimitConfig)
    archiver_enabled: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "data_dir", Path(self.data_dir))
        if not self.base_uri.endswith("/"):
            raise ConfigError("base_uri must end with '/'")
        if not is_absolute_iri(self.base_uri):
            raise ConfigError(f"base_uri is not an absolute IRI: {self.base_uri!r}")
        if self.endpoint_mode not in ("embedded", "remote"):
            raise ConfigError(f"endpoint_mode must be embedded or remote: {self.endpoint_mode!r}")
        if self.endpoint_mode == "remote" and not self.endpoint_url:
            raise ConfigError("remote endpoint_mode requires endpoint_url")
        if self.auth_mode not in ("anonymous", "oauth"):
            raise ConfigError(f"auth_mode must be anonymous or oauth: {self.auth_mode!r}")
        if self.auth_mode == "oauth" and self.vcs is None:
            raise ConfigError("auth_mode=oauth requires a vcs configuration")


def mint_record_uri(config: Config, record_id: RecordId, resource_name: str) -> Term:
    """The record's persistent IRI: ``<base_uri><resource_name>/<local>``.

    ``resource_name`` is the template's URL path segment; RecordId carries
    only the template id, so the resolved name is passed in by the caller.
    Minting is injective for a fixed config: the local id has fixed length
    and the resource name cannot contain '/'.
    """
    return iri(f"{config.base_uri}{resource_name}/{record_id.local}")


def working_graph_iri(record_iri: str) -> str:
    return record_iri + "/"


def prov_graph_iri(record_iri: str) -> str:
    return record_iri + "/prov/"


def pub_graph_iri(record_iri: str) -> str:
    return record_iri + "/pub/"


def entity_iri(config: Config, local: str) -> str:
    """IRI for a user-created entity (same base-36 local id scheme)."""
    return f"{config.base_uri}entity/{local}"


def context_graph_iri(config: Config) -> str:
    """The shared graph holding enrichment/archival context quads."""
    return f"{config.base_uri}context/"


def vocab_cache_graph_iri(config: Config) -> str:
    """The graph caching vocabulary-registry term metadata."""
    return f"{config.base_uri}lov/"
