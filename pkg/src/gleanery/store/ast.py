"""Query AST for the embedded SPARQL subset (docs/sparql-subset.md)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from ..model import Term

__all__ = [
    "Var",
    "PatternTerm",
    "TriplePattern",
    "GraphPattern",
    "FilterArg",
    "Filter",
    "Count",
    "QueryAst",
    "SolutionTable",
]


@dataclass(frozen=True)
class Var:
    name: str


PatternTerm = Union[Var, Term]


@dataclass(frozen=True)
class TriplePattern:
    subject: PatternTerm
    predicate: PatternTerm
    object: PatternTerm

    def variables(self) -> set[str]:
        return {t.name for t in (self.subject, self.predicate, self.object) if isinstance(t, Var)}


@dataclass(frozen=True)
class GraphPattern:
    """A basic graph pattern, optionally scoped to one named graph.

    graph=None matches the union of all named graphs.
    """

    graph: Optional[PatternTerm]
    triples: tuple[TriplePattern, ...]

    def variables(self) -> set[str]:
        out: set[str] = set()
        if isinstance(self.graph, Var):
            out.add(self.graph.name)
        for t in self.triples:
            out |= t.variables()
        return out


@dataclass(frozen=True)
class FilterArg:
    var: str
    fn: Optional[str] = None  # None | "lcase" | "str"


@dataclass(frozen=True)
class Filter:
    kind: str  # "eq" | "neq" | "contains" | "regex"
    arg: FilterArg
    value: Term
    flags: str = ""


@dataclass(frozen=True)
class Count:
    var: str
    alias: str


@dataclass(frozen=True)
class QueryAst:
    select_vars: tuple[str, ...]
    distinct: bool = False
    patterns: tuple[GraphPattern, ...] = ()
    filters: tuple[Filter, ...] = ()
    group_by: Optional[str] = None
    aggregates: tuple[Count, ...] = ()
    order_by: Optional[tuple[str, bool]] = None  # (var, ascending)
    limit: Optional[int] = None
    offset: Optional[int] = None

    def pattern_variables(self) -> set[str]:
        out: set[str] = set()
        for p in self.patterns:
            out |= p.variables()
        return out


@dataclass
class SolutionTable:
    vars: list[str]
    rows: list[dict[str, Term]] = field(default_factory=list)

    def column(self, var: str) -> list[Optional[Term]]:
        return [row.get(var) for row in self.rows]
