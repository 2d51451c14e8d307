import pytest

from gleanery.editorial import (
    AgentRef,
    AlreadyPublishedUnchanged,
    CannotDeletePublished,
    EditorialEngine,
    ProvIntegrityError,
)
from gleanery.errors import Forbidden, NotFound
from gleanery.model import GraphSet, prov_graph_iri, pub_graph_iri, working_graph_iri
from gleanery.rdfio import parse, serialize
from gleanery.templates import validate_submission

from .conftest import ANON, CONTRIBUTOR, REVIEWER


def submit(engine, title="Zeri photo archive", **extra):
    template = engine.templates.get("collections")
    raw = {"title": [title]}
    raw.update(extra)
    data = validate_submission(template, raw)
    return engine.create_record(template, data, extra.pop("agent", ANON))


def create(engine, agent=ANON, title="Zeri photo archive"):
    template = engine.templates.get("collections")
    data = validate_submission(template, {"title": [title]})
    return engine.create_record(template, data, agent)


def modify(engine, record_id, agent, title="Updated title", **extra):
    template = engine.templates.get("collections")
    raw = {"title": [title]}
    raw.update(extra)
    engine.modify_record(record_id, validate_submission(template, raw), agent)


class TestCreate:
    def test_anonymous_create_history(self, engine):
        rid = create(engine)
        state = engine.record_state(rid)
        assert state.stage == "unmodified"
        assert state.ever_published is False
        assert len(state.history) == 1
        assert state.history[0].kind == "creation"
        assert state.history[0].agent == AgentRef("anonymous", "ab12cd34")

    def test_two_creates_distinct_ids(self, engine):
        a = create(engine)
        b = create(engine)
        assert a != b
        assert engine.record_iri(a) != engine.record_iri(b)

    def test_working_graph_written(self, engine):
        rid = create(engine)
        record_iri = engine.record_iri(rid)
        working = engine.store.graph(working_graph_iri(record_iri))
        assert len(working) == 2  # type + title


class TestModify:
    def test_modify_advances_stage_and_history(self, engine, clock):
        rid = create(engine)
        clock.tick()
        modify(engine, rid, ANON)
        state = engine.record_state(rid)
        assert state.stage == "modified"
        assert [a.kind for a in state.history] == ["creation", "modification"]

    def test_modify_missing_record(self, engine):
        from gleanery.model import RecordId

        with pytest.raises(NotFound):
            modify(engine, RecordId("zzzzzzzz", "collections"), ANON)

    def test_modify_published_keeps_snapshot(self, engine, clock):
        rid = create(engine)
        clock.tick()
        engine.publish_record(rid, REVIEWER)
        record_iri = engine.record_iri(rid)
        snapshot_before = serialize(engine.store.graph(pub_graph_iri(record_iri)), "nquads")
        clock.tick()
        modify(engine, rid, REVIEWER)
        assert engine.record_state(rid).stage == "modified"
        snapshot_after = serialize(engine.store.graph(pub_graph_iri(record_iri)), "nquads")
        assert snapshot_after == snapshot_before

    def test_anonymous_cannot_modify_ever_published(self, engine, clock):
        rid = create(engine)
        clock.tick()
        engine.publish_record(rid, REVIEWER)
        with pytest.raises(Forbidden):
            modify(engine, rid, ANON)

    def test_anonymous_modify_forbidden_under_oauth(self, store, templates, workdir, clock):
        from gleanery.model import Config, VcsConfig

        config = Config(
            base_uri="https://ex.org/",
            prefix="ex",
            data_dir=workdir,
            auth_mode="oauth",
            vcs=VcsConfig("org", "repo"),
        )
        engine = EditorialEngine(store, templates, config, clock=clock)
        rid = create(engine)
        with pytest.raises(Forbidden):
            modify(engine, rid, ANON)

    def test_authenticated_non_accredited_can_modify(self, engine, clock):
        rid = create(engine)
        clock.tick()
        modify(engine, rid, CONTRIBUTOR)
        assert engine.record_state(rid).stage == "modified"


class TestPublish:
    def test_snapshot_equals_working_graph(self, engine, clock):
        rid = create(engine)
        clock.tick()
        engine.publish_record(rid, REVIEWER)
        record_iri = engine.record_iri(rid)
        working = engine.store.graph(working_graph_iri(record_iri))
        snapshot = engine.store.graph(pub_graph_iri(record_iri))
        rehomed = {
            (q.subject.value, q.predicate.value, q.object) for q in snapshot
        }
        original = {(q.subject.value, q.predicate.value, q.object) for q in working}
        assert rehomed == original
        assert all(q.graph.value == pub_graph_iri(record_iri) for q in snapshot)

    def test_republish_after_modify(self, engine, clock):
        rid = create(engine)
        clock.tick()
        engine.publish_record(rid, REVIEWER)
        clock.tick()
        modify(engine, rid, REVIEWER, title="Second title")
        clock.tick()
        engine.publish_record(rid, REVIEWER)
        state = engine.record_state(rid)
        assert state.stage == "published"
        assert [a.kind for a in state.history].count("publication") == 2

    def test_anonymous_publish_forbidden(self, engine):
        rid = create(engine)
        with pytest.raises(Forbidden):
            engine.publish_record(rid, ANON)

    def test_non_accredited_publish_forbidden(self, engine):
        rid = create(engine)
        with pytest.raises(Forbidden):
            engine.publish_record(rid, CONTRIBUTOR)

    def test_publish_unchanged_is_error(self, engine, clock):
        rid = create(engine)
        clock.tick()
        engine.publish_record(rid, REVIEWER)
        clock.tick()
        with pytest.raises(AlreadyPublishedUnchanged):
            engine.publish_record(rid, REVIEWER)


class TestDelete:
    def test_delete_draft_removes_graphs(self, engine):
        rid = create(engine)
        engine.delete_record(rid, REVIEWER)
        with pytest.raises(NotFound):
            engine.record_state(rid)

    def test_delete_published_rejected(self, engine, clock):
        rid = create(engine)
        clock.tick()
        engine.publish_record(rid, REVIEWER)
        with pytest.raises(CannotDeletePublished):
            engine.delete_record(rid, REVIEWER)
        assert engine.record_state(rid).ever_published

    def test_double_delete_not_found(self, engine):
        rid = create(engine)
        engine.delete_record(rid, REVIEWER)
        with pytest.raises(NotFound):
            engine.delete_record(rid, REVIEWER)

    def test_anonymous_delete_forbidden(self, engine):
        rid = create(engine)
        with pytest.raises(Forbidden):
            engine.delete_record(rid, ANON)


class TestStoreFailures:
    def test_journal_failure_surfaces_as_store_unavailable(self, templates, workdir, clock, tmp_path):
        from gleanery.editorial import StoreUnavailable
        from gleanery.model import Config
        from gleanery.store import EmbeddedStore

        store_dir = tmp_path / "storedata"
        store = EmbeddedStore(store_dir)
        config = Config(base_uri="https://ex.org/", prefix="ex", data_dir=workdir)
        engine = EditorialEngine(store, templates, config, clock=clock)
        # make journal appends impossible: a directory where the file was
        store._journal_path.unlink()
        store._journal_path.mkdir()
        with pytest.raises(StoreUnavailable):
            create(engine)


class TestRecordState:
    def test_history_kinds_after_full_cycle(self, engine, clock):
        rid = create(engine)
        clock.tick()
        modify(engine, rid, CONTRIBUTOR)
        clock.tick()
        engine.publish_record(rid, REVIEWER)
        state = engine.record_state(rid)
        assert [a.kind for a in state.history] == ["creation", "modification", "publication"]
        assert state.history[0].at < state.history[-1].at

    def test_timestamps_come_from_stored_prov(self, engine, clock):
        rid = create(engine)
        stamp = engine.record_state(rid).history[0].at
        clock.tick(3600)  # advancing the clock must not change stored history
        assert engine.record_state(rid).history[0].at == stamp

    def test_state_is_pure_function_of_prov_graph(self, engine, clock):
        rid = create(engine)
        clock.tick()
        engine.publish_record(rid, REVIEWER)
        record_iri = engine.record_iri(rid)
        prov = engine.store.graph(prov_graph_iri(record_iri))
        dumped = serialize(prov, "nquads")
        reloaded = parse(dumped, "nquads")
        state = engine.state_from_prov(rid, reloaded)
        assert state == engine.record_state(rid)

    def test_corrupt_prov_missing_creation(self, engine, clock):
        rid = create(engine)
        clock.tick()
        modify(engine, rid, ANON)
        record_iri = engine.record_iri(rid)
        prov = engine.store.graph(prov_graph_iri(record_iri))
        vocab_creation = "https://ex.org/vocab/Creation"
        corrupted = GraphSet(
            q for q in prov
            if not (q.predicate.value.endswith("#type") and q.object.value == vocab_creation)
        )
        with pytest.raises(ProvIntegrityError):
            engine.state_from_prov(rid, corrupted)
