"""Minimal server-rendered HTML pages (no-JS fallback for every public view).

The single-page client under /app/ is optional; these pages keep records,
exploration, and the data model reachable without it.
"""

from __future__ import annotations

import html
from typing import Iterable, Optional, Sequence

from ..explore import DataModelRow, FacetResult, RecordPage, RecordSummary
from ..rdfio.rdfa import render_rdfa_rows

__all__ = [
    "page",
    "home_page",
    "record_html",
    "explore_html",
    "datamodel_html",
    "vocab_html",
    "sparql_form_html",
]

_STYLE = """
body { font-family: system-ui, sans-serif; margin: 2rem auto; max-width: 50rem; padding: 0 1rem; }
nav a { margin-right: 1rem; }
.banner { background: #fff5cc; border: 1px solid #e0c860; padding: .4rem .8rem; margin: 1rem 0; }
.record .row { margin: .35rem 0; }
.field-label { font-weight: 600; margin-right: .4rem; }
table { border-collapse: collapse; }
td, th { border: 1px solid #ccc; padding: .3rem .6rem; text-align: left; }
.bucket { margin-right: .8rem; }
footer { margin-top: 3rem; color: #777; font-size: .85rem; }
""".strip()


def page(title: str, body: str) -> str:
    return (
        "<!DOCTYPE html>\n"
        '<html lang="en">\n<head>\n<meta charset="utf-8">\n'
        f"<title>{html.escape(title)}</title>\n<style>{_STYLE}</style>\n</head>\n<body>\n"
        '<nav><a href="/">Home</a><a href="/datamodel">Data model</a>'
        '<a href="/sparql">SPARQL</a><a href="/app/">App</a></nav>\n'
        f"{body}\n"
        "<footer>Served as Linked Open Data; append .ttl-negotiable requests via "
        "Accept: text/turtle.</footer>\n</body>\n</html>\n"
    )


def home_page(template_rows: Sequence[tuple[str, str, str]]) -> str:
    items = "".join(
        f'<li><a href="/api/explore/{html.escape(tid, quote=True)}">{html.escape(label)}</a> '
        f'<small>({html.escape(resource)})</small></li>'
        for tid, resource, label in template_rows
    )
    body = (
        "<h1>Catalogue</h1>"
        "<p>Collaborative Linked Open Data cataloguing.</p>"
        f"<ul>{items}</ul>"
    )
    return page("Catalogue", body)


def record_html(title: str, record: RecordPage) -> str:
    digest_rows = "".join(
        f"<tr><td>{html.escape(kind)}</td><td>{html.escape(agent)}</td><td>{html.escape(at)}</td></tr>"
        for kind, agent, at in record.provenance_digest
    )
    body = (
        f"<h1>{html.escape(title)}</h1>"
        f'<div class="banner">{html.escape(record.stage_banner)}</div>'
        + render_rdfa_rows(record.rdfa, record.entity_labels)
        + "<h2>Provenance</h2>"
        f"<table><tr><th>Activity</th><th>Agent</th><th>At</th></tr>{digest_rows}</table>"
    )
    return page(title, body)


def explore_html(
    template_label: str,
    facets: Sequence[FacetResult],
    records: Sequence[RecordSummary],
) -> str:
    facet_blocks = []
    for facet in facets:
        buckets = " ".join(
            f'<span class="bucket">{html.escape(b.display_label)} ({b.count})</span>'
            for b in facet.buckets
        )
        facet_blocks.append(f"<h3>{html.escape(facet.field_id)}</h3><p>{buckets}</p>")
    rows = "".join(
        f'<tr><td><a href="{html.escape(s.record_iri, quote=True)}">{html.escape(s.label)}</a></td>'
        f"<td>{html.escape(s.stage)}</td>"
        f"<td>{html.escape(s.snippet or '')}</td></tr>"
        for s in records
    )
    body = (
        f"<h1>Explore: {html.escape(template_label)}</h1>"
        + "".join(facet_blocks)
        + f"<table><tr><th>Record</th><th>Stage</th><th></th></tr>{rows}</table>"
    )
    return page(f"Explore {template_label}", body)


def datamodel_html(rows: Iterable[DataModelRow]) -> str:
    cells = "".join(
        "<tr>"
        f"<td><code>{html.escape(r.term_iri)}</code></td>"
        f"<td>{html.escape(r.label or '')}</td>"
        f"<td>{html.escape(r.comment or '')}</td>"
        f"<td>{html.escape(r.source_vocabulary or '')}</td>"
        f"<td>{r.usage_count}</td>"
        "</tr>"
        for r in rows
    )
    body = (
        "<h1>Data model</h1>"
        "<table><tr><th>Term</th><th>Label</th><th>Definition</th>"
        f"<th>Vocabulary</th><th>Usage</th></tr>{cells}</table>"
    )
    return page("Data model", body)


def vocab_html(vocabulary_id: str, rows: Sequence[tuple[str, str, int]]) -> str:
    cells = "".join(
        f"<tr><td><code>{html.escape(term)}</code></td><td>{html.escape(label)}</td><td>{count}</td></tr>"
        for term, label, count in rows
    )
    body = (
        f"<h1>Vocabulary: {html.escape(vocabulary_id)}</h1>"
        f"<table><tr><th>Term</th><th>Label</th><th>Usage</th></tr>{cells}</table>"
    )
    return page(f"Vocabulary {vocabulary_id}", body)


def sparql_form_html(error: Optional[str] = None, docs_path: str = "/datamodel") -> str:
    notice = (
        f'<div class="banner">{html.escape(error)} — see the documented subset in '
        f'<a href="{docs_path}">the docs</a>.</div>'
        if error
        else ""
    )
    body = (
        "<h1>SPARQL</h1>"
        + notice
        + '<form method="post" action="/sparql">'
        '<textarea name="query" rows="8" cols="70">'
        "SELECT ?s ?p ?o WHERE { GRAPH ?g { ?s ?p ?o } } LIMIT 25</textarea><br>"
        '<button type="submit">Run</button></form>'
    )
    return page("SPARQL", body)
