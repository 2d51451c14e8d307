import random

import pytest

from gleanery.explore import (
    BadPage,
    ExploreService,
    FieldNotFaceted,
    UnknownVocabulary,
)
from gleanery.model import iri, literal
from gleanery.templates import validate_submission

from .conftest import ANON, REVIEWER
from .explore_oracle import facet_counts, filtered_records, search_records
from .rdfa_extractor import extract_triples

DCT = "http://purl.org/dc/terms/"
KEYWORDS = ["music", "art history", "photography", "archives", "letters"]
CREATORS = [
    ("https://kb.example/entity/zeri", "Federico Zeri"),
    ("https://kb.example/entity/haskell", "Francis Haskell"),
    ("https://kb.example/entity/wittkower", "Rudolf Wittkower"),
]


def seed_catalogue(engine, clock, n=12, publish_every=None, seed=7):
    """n records with varied keywords/creators; most published, some drafts."""
    rng = random.Random(seed)
    template = engine.templates.get("collections")
    rids = []
    for i in range(n):
        kw = rng.sample(KEYWORDS, k=rng.randint(1, 3))
        creator_iri, creator_label = rng.choice(CREATORS)
        raw = {
            "title": [f"Collection {i} {rng.choice(['Rome', 'Bologna', 'Florence'])}"],
            "keywords": kw,
            "creator": [{"iri": creator_iri, "label": creator_label}],
            "founded": [f"{1900 + i}-01-01"],
        }
        data = validate_submission(template, raw)
        rid = engine.create_record(template, data, ANON)
        clock.tick()
        published = (i % 4 != 3) if publish_every is None else (i % publish_every == 0)
        if published:
            engine.publish_record(rid, REVIEWER)
            clock.tick()
        rids.append((rid, published))
    return rids


@pytest.fixture
def service(engine):
    return ExploreService(engine)


class TestFacets:
    def test_counts_equal_brute_force(self, engine, clock, service):
        seed_catalogue(engine, clock)
        template = engine.templates.get("collections")
        result = service.facet_values(template, "keywords")
        expected = facet_counts(
            engine.store.export_all(),
            "https://ex.org/",
            "collection",
            template.class_iri,
            DCT + "subject",
        )
        got = {b.value: b.count for b in result.buckets}
        assert got == expected

    def test_bucket_order_count_desc_label_asc(self, engine, clock, service):
        seed_catalogue(engine, clock)
        template = engine.templates.get("collections")
        buckets = service.facet_values(template, "keywords").buckets
        keys = [(-b.count, b.display_label) for b in buckets]
        assert keys == sorted(keys)

    def test_entity_facet_uses_labels(self, engine, clock, service):
        seed_catalogue(engine, clock)
        template = engine.templates.get("collections")
        buckets = service.facet_values(template, "creator").buckets
        assert buckets
        assert all(not b.display_label.startswith("https://") for b in buckets)

    def test_drafts_excluded(self, engine, clock, service):
        template = engine.templates.get("collections")
        data = validate_submission(template, {"title": ["Draft only"], "keywords": ["music"]})
        engine.create_record(template, data, ANON)  # never published
        assert service.facet_values(template, "keywords").buckets == ()

    def test_unfaceted_field_rejected(self, engine, service):
        template = engine.templates.get("collections")
        with pytest.raises(FieldNotFaceted):
            service.facet_values(template, "title")

    def test_empty_catalogue_empty_buckets(self, engine, service):
        template = engine.templates.get("collections")
        assert service.facet_values(template, "keywords").buckets == ()


class TestFilter:
    def test_single_constraint_equals_oracle(self, engine, clock, service):
        seed_catalogue(engine, clock)
        template = engine.templates.get("collections")
        value = literal("music")
        got = {
            s.record_iri
            for s in service.filter_records(template, [("keywords", value)], page=(100, 0))
        }
        expected = filtered_records(
            engine.store.export_all(), "https://ex.org/", "collection",
            template.class_iri, [(DCT + "subject", value)],
        )
        assert got == expected

    def test_conjunction_intersection_semantics(self, engine, clock, service):
        seed_catalogue(engine, clock)
        template = engine.templates.get("collections")
        c1 = ("keywords", literal("music"))
        c2 = ("creator", iri("https://kb.example/entity/zeri"))
        got = {
            s.record_iri
            for s in service.filter_records(template, [c1, c2], page=(100, 0))
        }
        expected = filtered_records(
            engine.store.export_all(), "https://ex.org/", "collection", template.class_iri,
            [(DCT + "subject", literal("music")), (DCT + "creator", iri("https://kb.example/entity/zeri"))],
        )
        assert got == expected

    def test_pagination_concatenation(self, engine, clock, service):
        seed_catalogue(engine, clock)
        template = engine.templates.get("collections")
        full = service.filter_records(template, [], page=(100, 0))
        paged = []
        k = 3
        offset = 0
        while True:
            page = service.filter_records(template, [], page=(k, offset))
            if not page:
                break
            paged.extend(page)
            offset += k
        assert paged == full

    def test_sorted_pagination_deterministic(self, engine, clock, service):
        seed_catalogue(engine, clock)
        template = engine.templates.get("collections")
        ordered = service.filter_records(template, [], sort=("founded", True), page=(100, 0))
        second = service.filter_records(template, [], sort=("founded", True), page=(1, 1))
        assert second == [ordered[1]]

    def test_bad_page_rejected(self, engine, service):
        template = engine.templates.get("collections")
        with pytest.raises(BadPage):
            service.filter_records(template, [], page=(0, 0))

    def test_constraint_on_unfaceted_field_rejected(self, engine, service):
        template = engine.templates.get("collections")
        with pytest.raises(FieldNotFaceted):
            service.filter_records(template, [("homepage", literal("x"))])


class TestQueryGeneration:
    def test_facet_query_parses_to_group_by_count_ast(self, engine, service):
        from gleanery.store import parse_query

        template = engine.templates.get("collections")
        text = service.facet_query(template, DCT + "subject")
        ast = parse_query(text)
        assert ast.group_by == "v"
        assert [(c.var, c.alias) for c in ast.aggregates] == [("r", "n")]
        assert any(p.graph is not None for p in ast.patterns)

    def test_filter_query_parses_within_subset(self, engine, service):
        from gleanery.store import parse_query

        template = engine.templates.get("collections")
        text = service.filter_query(template, [("keywords", literal("music"))])
        ast = parse_query(text)
        assert ast.distinct
        assert ast.select_vars == ("r",)


class TestSearch:
    def test_search_matches_oracle(self, engine, clock, service):
        seed_catalogue(engine, clock)
        for query in ("rome", "music", "Collection", "zz-no-hit"):
            got = {s.record_iri for s in service.text_search(query)}
            expected = set(search_records(engine.store.export_all(), "https://ex.org/", query))
            assert got == expected, query

    def test_snippet_contains_query(self, engine, clock, service):
        seed_catalogue(engine, clock)
        results = service.text_search("Rome")
        assert results
        assert all("rome" in (s.snippet or "").casefold() for s in results)

    def test_draft_only_match_invisible(self, engine, service):
        template = engine.templates.get("collections")
        data = validate_submission(template, {"title": ["Unpublished Xanadu"]})
        engine.create_record(template, data, ANON)
        assert service.text_search("Xanadu") == []

    def test_ranking_by_match_count(self, engine, clock, service):
        template = engine.templates.get("collections")
        many = validate_submission(
            template,
            {"title": ["opera opera"], "keywords": ["opera seria", "opera buffa"]},
        )
        one = validate_submission(template, {"title": ["one opera mention"]})
        rid_many = engine.create_record(template, many, ANON)
        rid_one = engine.create_record(template, one, ANON)
        clock.tick()
        engine.publish_record(rid_many, REVIEWER)
        engine.publish_record(rid_one, REVIEWER)
        results = service.text_search("opera")
        assert results[0].record_iri == engine.record_iri(rid_many)


class TestRecordPage:
    def test_published_page_rdfa_reproduces_snapshot(self, engine, clock, service):
        from gleanery.model import pub_graph_iri
        from gleanery.rdfio.rdfa import render_rdfa_rows

        rids = seed_catalogue(engine, clock, n=4)
        rid = next(r for r, published in rids if published)
        page = service.record_page(rid)
        html_text = render_rdfa_rows(page.rdfa, page.entity_labels)
        record_iri = engine.record_iri(rid)
        expected = {
            (q.subject.value, q.predicate.value, q.object)
            for q in engine.store.graph(pub_graph_iri(record_iri))
            if q.subject.value == record_iri
        }
        assert extract_triples(html_text) == expected

    def test_public_view_of_modified_record_serves_old_snapshot(self, engine, clock, service):
        template = engine.templates.get("collections")
        data = validate_submission(template, {"title": ["Original title"]})
        rid = engine.create_record(template, data, ANON)
        clock.tick()
        engine.publish_record(rid, REVIEWER)
        public_before = service.record_page(rid)
        clock.tick()
        engine.modify_record(
            rid, validate_submission(template, {"title": ["Edited title"]}), REVIEWER
        )
        page = service.record_page(rid)
        values = [r.value.value for r in page.rdfa.rows]
        assert "Original title" in values
        # public bytes are frozen: banner and digest identical to pre-modify
        assert page == public_before
        # the pending draft is visible to accredited preview only
        preview = service.record_page(rid, accredited=True, preview=True)
        assert "newer draft under review" in preview.stage_banner
        assert [r.value.value for r in preview.rdfa.rows] == ["Edited title"]

    def test_never_published_anonymous_request_not_found(self, engine, service):
        from gleanery.errors import NotFound

        template = engine.templates.get("collections")
        rid = engine.create_record(
            template, validate_submission(template, {"title": ["Draft"]}), ANON
        )
        with pytest.raises(NotFound):
            service.record_page(rid)

    def test_accredited_preview_of_draft(self, engine, service):
        template = engine.templates.get("collections")
        rid = engine.create_record(
            template, validate_submission(template, {"title": ["Draft"]}), ANON
        )
        page = service.record_page(rid, accredited=True)
        assert page.stage_banner == "draft preview"


class TestDataModelPage:
    def test_usage_counts(self, engine, clock, service):
        seed_catalogue(engine, clock, n=4)
        rows = {r.term_iri: r for r in service.datamodel_page()}
        title_row = rows[DCT + "title"]
        pub_count = len(
            [
                q
                for q in engine.store.export_all()
                if q.graph.value.endswith("/pub/") and q.predicate.value == DCT + "title"
            ]
        )
        assert title_row.usage_count == pub_count
        assert rows["https://ex.org/vocab/Collection"].usage_count > 0

    def test_empty_installation_rows_with_zero(self, engine, service):
        rows = service.datamodel_page()
        assert rows
        assert all(r.usage_count == 0 for r in rows)

    def test_row_without_metadata_has_iri_only(self, engine, service):
        rows = service.datamodel_page()
        assert all(r.label is None for r in rows)  # no vocab_meta client wired


class TestVocabPage:
    def test_unknown_vocabulary(self, engine, service):
        with pytest.raises(UnknownVocabulary):
            service.vocab_page("nope")

    def test_unused_vocabulary_counts_zero(self, engine, service, workdir):
        import json

        (workdir / "vocabularies" / "genres.json").write_text(
            json.dumps([
                {"term_iri": "https://ex.org/genre/photo", "label": "Photography"},
            ])
        )
        engine.templates.reload()
        rows = service.vocab_page("genres")
        assert rows == [("https://ex.org/genre/photo", "Photography", 0)]
