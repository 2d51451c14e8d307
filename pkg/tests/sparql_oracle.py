"""Brute-force oracle for the SPARQL subset.

A naive nested-loop evaluator over a plain quad list, written against the
documented semantics and kept independent of the store's evaluator. Both
must agree exactly on every query in the subset.
"""

from __future__ import annotations

import re

from gleanery.model import Quad, Term, literal
from gleanery.rdfio import encode_term
from gleanery.store.ast import QueryAst, Var

XSD_INTEGER = "http://www.w3.org/2001/XMLSchema#integer"


def _match_part(part, value: Term, binding: dict) -> dict | None:
    if isinstance(part, Var):
        bound = binding.get(part.name)
        if bound is None:
            out = dict(binding)
            out[part.name] = value
            return out
        return binding if bound == value else None
    return binding if part == value else None


def _solutions(quads: list[Quad], ast: QueryAst) -> list[dict]:
    bindings = [{}]
    for gp in ast.patterns:
        if not gp.triples and isinstance(gp.graph, Var):
            nxt = []
            for b in bindings:
                seen = set()
                for q in quads:
                    trial = _match_part(gp.graph, q.graph, b)
                    if trial is not None:
                        key = tuple(sorted((k, encode_term(v)) for k, v in trial.items()))
                        if key not in seen:
                            seen.add(key)
                            nxt.append(trial)
            bindings = nxt
            continue
        for tp in gp.triples:
            nxt = []
            for b in bindings:
                for q in quads:
                    trial = b
                    if gp.graph is not None:
                        trial = _match_part(gp.graph, q.graph, trial)
                        if trial is None:
                            continue
                    trial = _match_part(tp.subject, q.subject, trial)
                    if trial is None:
                        continue
                    trial = _match_part(tp.predicate, q.predicate, trial)
                    if trial is None:
                        continue
                    trial = _match_part(tp.object, q.object, trial)
                    if trial is None:
                        continue
                    nxt.append(trial)
            bindings = nxt
    return bindings


def _filter_ok(f, binding: dict) -> bool:
    term = binding.get(f.arg.var)
    if term is None:
        return False
    text = term.value
    if f.arg.fn == "lcase":
        text = text.lower()
    if f.kind == "eq":
        return term == f.value if f.arg.fn is None else text == f.value.value
    if f.kind == "neq":
        return term != f.value if f.arg.fn is None else text != f.value.value
    if f.kind == "contains":
        return f.value.value in text
    if f.kind == "regex":
        flags = re.IGNORECASE if "i" in f.flags else 0
        return re.search(f.value.value, text, flags) is not None
    raise AssertionError(f.kind)


def _row_key(binding: dict):
    return tuple(sorted((v, encode_term(t)) for v, t in binding.items()))


def brute_force(quads: list[Quad], ast: QueryAst) -> list[dict]:
    """All solutions, fully processed: filter, canonical sort, group, project,
    distinct, order, slice. Returns rows as var->Term dicts."""
    rows = [b for b in _solutions(quads, ast) if all(_filter_ok(f, b) for f in ast.filters)]
    rows.sort(key=_row_key)

    if ast.group_by is not None:
        grouped: dict = {}
        order = []
        for b in rows:
            term = b.get(ast.group_by)
            if term is None:
                continue
            key = encode_term(term)
            if key not in grouped:
                grouped[key] = (term, [])
                order.append(key)
            grouped[key][1].append(b)
        out = []
        for key in order:
            term, members = grouped[key]
            row = {ast.group_by: term}
            for agg in ast.aggregates:
                row[agg.alias] = literal(
                    str(sum(1 for m in members if agg.var in m)), datatype=XSD_INTEGER
                )
            out.append(row)
        rows = out

    rows = [{v: b[v] for v in ast.select_vars if v in b} for b in rows]

    if ast.distinct:
        seen = set()
        unique = []
        for r in rows:
            key = _row_key(r)
            if key not in seen:
                seen.add(key)
                unique.append(r)
        rows = unique

    if ast.order_by is not None:
        var, ascending = ast.order_by
        rows.sort(
            key=lambda r: (var in r, encode_term(r[var]) if var in r else ""),
            reverse=not ascending,
        )

    start = ast.offset or 0
    end = start + ast.limit if ast.limit is not None else None
    return rows[start:end]
