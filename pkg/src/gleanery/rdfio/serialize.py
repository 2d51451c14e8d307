"""Canonical Turtle / N-Quads serialization.

Output is deterministic for a given GraphSet: quads are sorted by the
lexicographic order of their N-Triples encodings, prefixes are emitted
alphabetically, and each predicate-object pair sits on its own line. Stable
bytes are what make VCS diffs of record files reviewable.
"""

from __future__ import annotations

import re
from typing import Mapping, Optional

from ..model import GraphSet, Term
from .namespaces import DEFAULT_PREFIXES, RDF_TYPE
from .syntax import MixedGraphsInTurtle, encode_term, quad_sort_key

__all__ = ["serialize", "serialize_nquads_lines"]

_SAFE_LOCAL_RE = re.compile(r"^[A-Za-z0-9_][A-Za-z0-9_-]*$|^$")


def _abbreviate(term: Term, prefixes: list[tuple[str, str]], used: set[str]) -> str:
    if term.kind != "iri":
        return encode_term(term)
    value = term.value
    for name, ns in prefixes:
        if value.startswith(ns):
            local = value[len(ns) :]
            if _SAFE_LOCAL_RE.match(local):
                used.add(name)
                return f"{name}:{local}"
    return f"<{value}>"


def _encode_object(term: Term, prefixes: list[tuple[str, str]], used: set[str]) -> str:
    if term.kind == "literal" and term.datatype is not None:
        body = encode_term(Term("literal", term.value))
        dt_text = _abbreviate(Term("iri", term.datatype), prefixes, used)
        return f"{body}^^{dt_text}"
    return _abbreviate(term, prefixes, used)


def serialize_nquads_lines(graphs: GraphSet) -> list[str]:
    """Canonically ordered N-Quads statement lines (no trailing newline)."""
    quads = sorted(graphs, key=quad_sort_key)
    return [
        f"{encode_term(q.subject)} {encode_term(q.predicate)} "
        f"{encode_term(q.object)} {encode_term(q.graph)} ."
        for q in quads
    ]


def serialize(
    graphs: GraphSet,
    format: str,
    *,
    prefixes: Optional[Mapping[str, str]] = None,
) -> bytes:
    """Serialize to canonical Turtle or N-Quads bytes.

    Turtle requires all quads to live in a single graph. The prefix map
    defaults to a fixed well-known table; only prefixes actually used are
    emitted.
    """
    if format == "nquads":
        lines = serialize_nquads_lines(graphs)
        return ("\n".join(lines) + "\n").encode("utf-8") if lines else b""
    if format != "turtle":
        raise ValueError(f"unknown RDF format: {format!r}")

    graph_iris = graphs.graph_iris()
    if len(graph_iris) > 1:
        raise MixedGraphsInTurtle(f"turtle serialization of {len(graph_iris)} graphs")

    prefix_list = sorted((prefixes or DEFAULT_PREFIXES).items(), key=lambda kv: kv[0])
    used: set[str] = set()
    quads = sorted(graphs, key=quad_sort_key)

    body: list[str] = []
    current_subject: Optional[str] = None
    statements: list[str] = []
    for q in quads:
        subj_text = _abbreviate(q.subject, prefix_list, used)
        if q.predicate.value == RDF_TYPE:
            pred_text = "a"
        else:
            pred_text = _abbreviate(q.predicate, prefix_list, used)
        obj_text = _encode_object(q.object, prefix_list, used)
        if subj_text != current_subject:
            if statements:
                body.append(" ;\n".join(statements) + " .")
                statements = []
            current_subject = subj_text
            body.append(subj_text)
        statements.append(f"  {pred_text} {obj_text}")
    if statements:
        body.append(" ;\n".join(statements) + " .")

    header = [f"@prefix {name}: <{dict(prefix_list)[name]}> ." for name in sorted(used)]
    parts = []
    if header:
        parts.append("\n".join(header))
    if body:
        parts.append("\n".join(body))
    if not parts:
        return b""
    return ("\n\n".join(parts) + "\n").encode("utf-8")
