"""Record lifecycle over named graphs: create/modify/publish/delete with
PROV-annotated history and the no-unpublish guarantee.

Every record owns three graphs derived from its IRI: the working graph
(``…/``), the provenance graph (``…/prov/``), and the published snapshot
(``…/pub/``). Public routes read only snapshots, so drafting never changes
what is served until the next publish.
"""

from __future__ import annotations

import datetime
import threading
from dataclasses import dataclass
from typing import Callable, Optional
from urllib.parse import quote, unquote

from .errors import Forbidden, GleaneryError, NotFound
from .model import (
    Config,
    GraphSet,
    Quad,
    RecordId,
    iri,
    literal,
    mint_record_uri,
    prov_graph_iri,
    pub_graph_iri,
    random_local_id,
    working_graph_iri,
)
from .rdfio import RDF_TYPE, local_vocab, rewrite_graph, to_rdf
from .rdfio.mapping import ContentGraph, from_rdf
from .rdfio.namespaces import (
    PROV_ACTIVITY,
    PROV_ENDED_AT_TIME,
    PROV_GENERATED_AT_TIME,
    PROV_WAS_ASSOCIATED_WITH,
    XSD_DATETIME,
    XSD_INTEGER,
)
from .store import Store
from .templates import Template, TemplateStore, ValidatedRecordData

__all__ = [
    "STAGES",
    "AgentRef",
    "ProvActivity",
    "RecordState",
    "MintCollision",
    "CannotDeletePublished",
    "AlreadyPublishedUnchanged",
    "StoreUnavailable",
    "ProvIntegrityError",
    "EditorialEngine",
    "PublishEvent",
]

STAGES = ("unmodified", "modified", "published")
_KIND_TO_STAGE = {"creation": "unmodified", "modification": "modified", "publication": "published"}


class MintCollision(GleaneryError):
    pass


class CannotDeletePublished(GleaneryError):
    pass


class AlreadyPublishedUnchanged(GleaneryError):
    pass


class StoreUnavailable(GleaneryError):
    pass


class ProvIntegrityError(GleaneryError):
    pass


@dataclass(frozen=True)
class AgentRef:
    """Who performed an activity. Anonymous agents carry a salted IP hash,
    never a raw address. ``accredited`` is session state used for
    authorization; it is not persisted in provenance."""

    kind: str  # "authenticated" | "anonymous"
    identifier: str
    accredited: bool = False

    def __post_init__(self) -> None:
        if self.kind not in ("authenticated", "anonymous"):
            raise ValueError(f"unknown agent kind {self.kind!r}")
        if self.kind == "anonymous" and self.accredited:
            raise ValueError("anonymous agents cannot be accredited")


@dataclass(frozen=True)
class ProvActivity:
    activity_iri: str
    kind: str  # "creation" | "modification" | "publication"
    agent: AgentRef
    at: str  # UTC timestamp, second precision, e.g. 2024-05-01T12:00:00Z
    stage_after: str


@dataclass(frozen=True)
class RecordState:
    record_id: RecordId
    stage: str
    ever_published: bool
    history: tuple[ProvActivity, ...]


@dataclass(frozen=True)
class PublishEvent:
    """What the VCS hook receives on publish and on post-publish saves."""

    record_id: RecordId
    record_iri: str
    template: Template
    content: GraphSet
    provenance: GraphSet
    changed_fields: tuple[str, ...]
    agent: AgentRef
    first_publication: bool
    verb: str  # "publish" | "update"


def utc_now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


class _store_guard:
    """Re-raise storage-layer failures as StoreUnavailable."""

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is None:
            return False
        from .store import JournalWriteFailed, MalformedResults, RemoteUnreachable

        if isinstance(exc, (JournalWriteFailed, RemoteUnreachable, MalformedResults)):
            raise StoreUnavailable(str(exc)) from exc
        return False


class EditorialEngine:
    """Create/modify/publish/delete records; state lives in the store only."""

    def __init__(
        self,
        store: Store,
        templates: TemplateStore,
        config: Config,
        clock: Callable[[], str] = utc_now,
        publish_hook: Optional[Callable[[PublishEvent], None]] = None,
        hook_failure_log: Optional[Callable[[str], None]] = None,
    ) -> None:
        self.store = store
        self.templates = templates
        self.config = config
        self.clock = clock
        self.publish_hook = publish_hook
        self.hook_failure_log = hook_failure_log or (lambda msg: None)
        self._vocab = local_vocab(config.base_uri)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    # --- helpers ------------------------------------------------------------

    def _lock_for(self, local: str) -> threading.Lock:
        with self._locks_guard:
            if local not in self._locks:
                self._locks[local] = threading.Lock()
            return self._locks[local]

    def record_iri(self, record_id: RecordId) -> str:
        template = self.templates.get(record_id.template_id)
        return mint_record_uri(self.config, record_id, template.resource_name).value

    def agent_iri(self, agent: AgentRef) -> str:
        bucket = "user" if agent.kind == "authenticated" else "anon"
        return f"{self.config.base_uri}agent/{bucket}/{quote(agent.identifier, safe='')}"

    def _agent_from_iri(self, agent_iri: str) -> AgentRef:
        prefix = f"{self.config.base_uri}agent/"
        if agent_iri.startswith(prefix + "user/"):
            return AgentRef("authenticated", unquote(agent_iri[len(prefix) + 5 :]))
        if agent_iri.startswith(prefix + "anon/"):
            return AgentRef("anonymous", unquote(agent_iri[len(prefix) + 5 :]))
        raise ProvIntegrityError(f"unrecognized agent IRI {agent_iri!r}")

    def _activity_quads(
        self, record_iri: str, seq: int, kind: str, agent: AgentRef, at: str
    ) -> GraphSet:
        prov_iri = prov_graph_iri(record_iri)
        g = iri(prov_iri)
        activity = iri(f"{prov_iri}activity/{seq}")
        v = self._vocab
        quads = GraphSet(
            [
                Quad(activity, iri(RDF_TYPE), iri(PROV_ACTIVITY), g),
                Quad(activity, iri(RDF_TYPE), iri(v[kind]), g),
                Quad(activity, iri(PROV_WAS_ASSOCIATED_WITH), iri(self.agent_iri(agent)), g),
                Quad(activity, iri(PROV_ENDED_AT_TIME), literal(at, XSD_DATETIME), g),
                Quad(activity, iri(v["sequence"]), literal(str(seq), XSD_INTEGER), g),
            ]
        )
        return quads

    def _latest_pointer_quads(self, record_iri: str, seq: int, at: str, stage: str) -> GraphSet:
        prov_iri = prov_graph_iri(record_iri)
        g = iri(prov_iri)
        working = iri(working_graph_iri(record_iri))
        activity = iri(f"{prov_iri}activity/{seq}")
        v = self._vocab
        return GraphSet(
            [
                Quad(working, iri("http://www.w3.org/ns/prov#wasGeneratedBy"), activity, g),
                Quad(working, iri(PROV_GENERATED_AT_TIME), literal(at, XSD_DATETIME), g),
                Quad(working, iri(v["stage"]), iri(v[f"stage_{stage}"]), g),
            ]
        )

    def _append_activity(
        self, record_iri: str, state: Optional[RecordState], kind: str, agent: AgentRef
    ) -> None:
        seq = len(state.history) + 1 if state else 1
        at = self.clock()
        if state and state.history and at < state.history[-1].at:
            at = state.history[-1].at  # clocks may step back; history must not
        prov_iri = prov_graph_iri(record_iri)
        existing = self.store.graph(prov_iri) if state else GraphSet()
        working = working_graph_iri(record_iri)
        v = self._vocab
        kept = GraphSet(
            q
            for q in existing
            if q.subject.value != working  # latest pointers are rewritten below
        )
        kept.update(self._activity_quads(record_iri, seq, kind, agent, at))
        kept.update(self._latest_pointer_quads(record_iri, seq, at, _KIND_TO_STAGE[kind]))
        self.store.replace_graph(prov_iri, kept)

    def _exists(self, record_iri: str) -> bool:
        return self.store.has_graph(prov_graph_iri(record_iri))

    # --- state reconstruction -------------------------------------------------

    def record_state(self, record_id: RecordId) -> RecordState:
        record_iri = self.record_iri(record_id)
        prov = self.store.graph(prov_graph_iri(record_iri))
        if len(prov) == 0:
            raise NotFound(f"no record {record_id.local!r}")
        return self.state_from_prov(record_id, prov)

    def state_from_prov(self, record_id: RecordId, prov: GraphSet) -> RecordState:
        """RecordState as a pure function of the provenance graph."""
        v = self._vocab
        kinds: dict[str, str] = {}
        agents: dict[str, str] = {}
        times: dict[str, str] = {}
        seqs: dict[str, int] = {}
        for q in prov:
            s = q.subject.value
            if q.predicate.value == RDF_TYPE:
                for kind in ("creation", "modification", "publication"):
                    if q.object.value == v[kind]:
                        kinds[s] = kind
            elif q.predicate.value == PROV_WAS_ASSOCIATED_WITH:
                agents[s] = q.object.value
            elif q.predicate.value == PROV_ENDED_AT_TIME:
                times[s] = q.object.value
            elif q.predicate.value == v["sequence"]:
                try:
                    seqs[s] = int(q.object.value)
                except ValueError:
                    raise ProvIntegrityError(f"bad sequence on {s}")

        activities = []
        for s, kind in kinds.items():
            if s not in seqs or s not in times or s not in agents:
                raise ProvIntegrityError(f"incomplete activity {s}")
            activities.append(
                ProvActivity(
                    activity_iri=s,
                    kind=kind,
                    agent=self._agent_from_iri(agents[s]),
                    at=times[s],
                    stage_after=_KIND_TO_STAGE[kind],
                )
            )
        activities.sort(key=lambda a: seqs[a.activity_iri])
        if not activities or activities[0].kind != "creation":
            raise ProvIntegrityError("history must begin with a creation activity")
        if any(a.kind == "creation" for a in activities[1:]):
            raise ProvIntegrityError("creation activity must be unique")
        for earlier, later in zip(activities, activities[1:]):
            if later.at < earlier.at:
                raise ProvIntegrityError("activity timestamps must be nondecreasing")
        return RecordState(
            record_id=record_id,
            stage=activities[-1].stage_after,
            ever_published=any(a.kind == "publication" for a in activities),
            history=tuple(activities),
        )

    # --- operations ----------------------------------------------------------

    def create_record(
        self, template: Template, data: ValidatedRecordData, agent: AgentRef
    ) -> RecordId:
        for attempt in range(5):
            record_id = RecordId(random_local_id(), template.template_id)
            record_iri = mint_record_uri(self.config, record_id, template.resource_name).value
            if not self._exists(record_iri):
                break
        else:
            raise MintCollision("could not mint a fresh record id in 5 attempts")

        with self._lock_for(record_id.local), _store_guard():
            content = to_rdf(
                data, record_iri, template, entity_minter=self._entity_minter()
            )
            self.store.replace_graph(content.graph_iri, content.quads)
            self._append_activity(record_iri, None, "creation", agent)
        return record_id

    def _entity_minter(self):
        base = self.config.base_uri

        def mint(_label: str) -> str:
            return f"{base}entity/{random_local_id()}"

        return mint

    def modify_record(self, record_id: RecordId, data: ValidatedRecordData, agent: AgentRef) -> None:
        template = self.templates.get(record_id.template_id)
        record_iri = self.record_iri(record_id)
        with self._lock_for(record_id.local), _store_guard():
            if not self._exists(record_iri):
                raise NotFound(f"no record {record_id.local!r}")
            state = self.record_state(record_id)
            if agent.kind == "anonymous":
                if self.config.auth_mode != "anonymous" or state.ever_published:
                    raise Forbidden("anonymous users cannot modify this record")
            before = self._graph_data(working_graph_iri(record_iri), template)
            content = to_rdf(data, record_iri, template, entity_minter=self._entity_minter())
            self.store.replace_graph(content.graph_iri, content.quads)
            self._append_activity(record_iri, state, "modification", agent)
            if state.ever_published:
                after = self._graph_data(working_graph_iri(record_iri), template)
                self._fire_hook(
                    record_id, record_iri, template, agent,
                    changed=self._diff_fields(before, after), first=False, verb="update",
                )

    def publish_record(self, record_id: RecordId, agent: AgentRef) -> None:
        template = self.templates.get(record_id.template_id)
        record_iri = self.record_iri(record_id)
        with self._lock_for(record_id.local), _store_guard():
            if not self._exists(record_iri):
                raise NotFound(f"no record {record_id.local!r}")
            if not (agent.kind == "authenticated" and agent.accredited):
                raise Forbidden("publishing requires an accredited user")
            state = self.record_state(record_id)
            working = self.store.graph(working_graph_iri(record_iri))
            pub_iri = pub_graph_iri(record_iri)
            snapshot = rewrite_graph(working, pub_iri)
            if state.ever_published and snapshot == self.store.graph(pub_iri):
                raise AlreadyPublishedUnchanged(
                    f"record {record_id.local!r} is already published unchanged"
                )
            if state.ever_published:
                old = self._pub_data(record_iri, template)
                new = self._graph_data(working_graph_iri(record_iri), template)
                changed = self._diff_fields(old, new)
            else:
                new = self._graph_data(working_graph_iri(record_iri), template)
                changed = tuple(sorted(new))
            self.store.replace_graph(pub_iri, snapshot)
            self._append_activity(record_iri, state, "publication", agent)
            self._fire_hook(
                record_id,
                record_iri,
                template,
                agent,
                changed=changed,
                first=not state.ever_published,
                verb="publish" if not state.ever_published else "update",
            )

    def delete_record(self, record_id: RecordId, agent: AgentRef) -> None:
        record_iri = self.record_iri(record_id)
        with self._lock_for(record_id.local), _store_guard():
            if not self._exists(record_iri):
                raise NotFound(f"no record {record_id.local!r}")
            if not (agent.kind == "authenticated" and agent.accredited):
                raise Forbidden("deleting requires an accredited user")
            state = self.record_state(record_id)
            if state.ever_published:
                raise CannotDeletePublished(
                    f"record {record_id.local!r} has been published and cannot be removed"
                )
            self.store.drop_graph(working_graph_iri(record_iri))
            self.store.drop_graph(prov_graph_iri(record_iri))

    def changed_fields_since_publication(self, record_id: RecordId) -> tuple[str, ...]:
        """Field ids whose working values differ from the published snapshot."""
        template = self.templates.get(record_id.template_id)
        record_iri = self.record_iri(record_id)
        old = self._pub_data(record_iri, template)
        new = self._graph_data(working_graph_iri(record_iri), template)
        return self._diff_fields(old, new)

    # --- vcs hook --------------------------------------------------------------

    def _graph_data(self, graph_iri: str, template: Template) -> dict:
        data, _ = from_rdf(ContentGraph(graph_iri, self.store.graph(graph_iri)), template)
        return dict(data.values)

    def _pub_data(self, record_iri: str, template: Template) -> dict:
        working = working_graph_iri(record_iri)
        pub = rewrite_graph(self.store.graph(pub_graph_iri(record_iri)), working)
        data, _ = from_rdf(ContentGraph(working, pub), template)
        return dict(data.values)

    @staticmethod
    def _diff_fields(old: dict, new: dict) -> tuple[str, ...]:
        changed = []
        for field_id in sorted(set(old) | set(new)):
            if set(old.get(field_id, ())) != set(new.get(field_id, ())):
                changed.append(field_id)
        return tuple(changed)

    def _fire_hook(
        self,
        record_id: RecordId,
        record_iri: str,
        template: Template,
        agent: AgentRef,
        *,
        changed: tuple[str, ...],
        first: bool,
        verb: str,
    ) -> None:
        if self.publish_hook is None:
            return
        event = PublishEvent(
            record_id=record_id,
            record_iri=record_iri,
            template=template,
            content=self.store.graph(working_graph_iri(record_iri)),
            provenance=self.store.graph(prov_graph_iri(record_iri)),
            changed_fields=changed,
            agent=agent,
            first_publication=first,
            verb=verb,
        )
        try:
            self.publish_hook(event)
        except GleaneryError as exc:
            # publication itself is never rolled back on backend trouble
            self.hook_failure_log(f"vcs hook failed: {exc}")
