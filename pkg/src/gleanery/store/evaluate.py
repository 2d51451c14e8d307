"""Subset-SPARQL evaluation over a quad-matching source.

Semantics are the brute-force ones: enumerate all bindings satisfying all
patterns, apply filters, group/aggregate, order, slice. Before any modifier
runs, solutions are put in a canonical order (lexicographic on the encoded
bindings) so pagination and ORDER BY ties are deterministic regardless of
index iteration order.
"""

from __future__ import annotations

import re
from typing import Iterable, Iterator, Optional, Protocol

from ..model import Quad, Term, literal
from ..rdfio.syntax import encode_term
from .ast import Count, Filter, GraphPattern, QueryAst, SolutionTable, TriplePattern, Var

__all__ = ["QuadSource", "evaluate", "canonical_row_key"]

XSD_INTEGER = "http://www.w3.org/2001/XMLSchema#integer"

Binding = dict[str, Term]


class QuadSource(Protocol):
    def match(
        self,
        graph: Optional[Term],
        subject: Optional[Term],
        predicate: Optional[Term],
        object: Optional[Term],
    ) -> Iterable[Quad]:
        ...


def _resolve(term, binding: Binding) -> Optional[Term]:
    if isinstance(term, Var):
        return binding.get(term.name)
    return term


def _extend(
    source: QuadSource, pattern: TriplePattern, graph, binding: Binding
) -> Iterator[Binding]:
    g = _resolve(graph, binding) if graph is not None else None
    s = _resolve(pattern.subject, binding)
    p = _resolve(pattern.predicate, binding)
    o = _resolve(pattern.object, binding)
    for quad in source.match(g, s, p, o):
        out = dict(binding)
        ok = True
        for part, value in (
            (graph, quad.graph),
            (pattern.subject, quad.subject),
            (pattern.predicate, quad.predicate),
            (pattern.object, quad.object),
        ):
            if isinstance(part, Var):
                bound = out.get(part.name)
                if bound is None:
                    out[part.name] = value
                elif bound != value:
                    ok = False
                    break
        if ok:
            yield out


def _solutions(source: QuadSource, patterns: Iterable[GraphPattern]) -> list[Binding]:
    bindings: list[Binding] = [{}]
    for gp in patterns:
        for tp in gp.triples:
            nxt: list[Binding] = []
            for b in bindings:
                nxt.extend(_extend(source, tp, gp.graph, b))
            bindings = nxt
            if not bindings:
                return []
        if not gp.triples and isinstance(gp.graph, Var):
            # GRAPH ?g {} — match every named graph
            nxt = []
            for b in bindings:
                for quad in source.match(_resolve(gp.graph, b), None, None, None):
                    out = dict(b)
                    out.setdefault(gp.graph.name, quad.graph)
                    if out not in nxt:
                        nxt.append(out)
            bindings = nxt
    return bindings


def _string_value(term: Term) -> str:
    return term.value


def _apply_arg(term: Term, fn: Optional[str]) -> str:
    value = _string_value(term)
    if fn == "lcase":
        return value.lower()
    return value


def _passes(f: Filter, binding: Binding) -> bool:
    term = binding.get(f.arg.var)
    if term is None:
        return False
    if f.kind == "eq":
        if f.arg.fn is None:
            return term == f.value
        return _apply_arg(term, f.arg.fn) == f.value.value
    if f.kind == "neq":
        if f.arg.fn is None:
            return term != f.value
        return _apply_arg(term, f.arg.fn) != f.value.value
    if f.kind == "contains":
        return f.value.value in _apply_arg(term, f.arg.fn)
    if f.kind == "regex":
        flags = re.IGNORECASE if "i" in f.flags else 0
        return re.search(f.value.value, _apply_arg(term, f.arg.fn), flags) is not None
    raise ValueError(f"unknown filter kind {f.kind!r}")


def canonical_row_key(binding: Binding) -> tuple[tuple[str, str], ...]:
    return tuple(sorted((v, encode_term(t)) for v, t in binding.items()))


def _group(bindings: list[Binding], group_var: str, aggregates: tuple[Count, ...]) -> list[Binding]:
    groups: dict[str, tuple[Term, list[Binding]]] = {}
    for b in bindings:
        key_term = b.get(group_var)
        if key_term is None:
            continue
        key = encode_term(key_term)
        groups.setdefault(key, (key_term, []))[1].append(b)
    out: list[Binding] = []
    for key in groups:  # first-occurrence order over canonical input
        key_term, members = groups[key]
        row: Binding = {group_var: key_term}
        for agg in aggregates:
            n = sum(1 for m in members if agg.var in m)
            row[agg.alias] = literal(str(n), datatype=XSD_INTEGER)
        out.append(row)
    return out


def evaluate(source: QuadSource, ast: QueryAst) -> SolutionTable:
    bindings = _solutions(source, ast.patterns)
    bindings = [b for b in bindings if all(_passes(f, b) for f in ast.filters)]
    bindings.sort(key=canonical_row_key)

    if ast.group_by is not None:
        bindings = _group(bindings, ast.group_by, ast.aggregates)

    projected: list[Binding] = [
        {v: b[v] for v in ast.select_vars if v in b} for b in bindings
    ]

    if ast.distinct:
        seen: set[tuple[tuple[str, str], ...]] = set()
        unique: list[Binding] = []
        for row in projected:
            key = canonical_row_key(row)
            if key not in seen:
                seen.add(key)
                unique.append(row)
        projected = unique

    if ast.order_by is not None:
        var, ascending = ast.order_by
        # rows missing the sort variable order first; stable sort keeps
        # canonical order among ties
        projected.sort(
            key=lambda row: (var in row, encode_term(row[var]) if var in row else ""),
            reverse=not ascending,
        )

    start = ast.offset or 0
    end = start + ast.limit if ast.limit is not None else None
    projected = projected[start:end]

    return SolutionTable(vars=list(ast.select_vars), rows=projected)
