"""Embedded in-memory named-graph store with an append-only journal.

Mutations are serialized through one writer lock and swap immutable graph
snapshots, so readers always see a consistent dataset without locking.
The journal (data/journal.nq) records whole-graph replacements and drops
as N-Quads blocks under ``# REPLACE <g>`` / ``# DROP <g>`` directives and
is compacted on startup.
"""

from __future__ import annotations

import os
import threading
from pathlib import Path
from typing import Iterable, Iterator, Optional

from ..errors import GleaneryError
from ..model import GraphSet, Quad, Term
from ..rdfio.serialize import serialize_nquads_lines
from ..rdfio.syntax import quad_sort_key, parse
from .ast import QueryAst, SolutionTable
from .evaluate import evaluate
from .parser import parse_query

__all__ = ["JournalWriteFailed", "EmbeddedStore"]


class JournalWriteFailed(GleaneryError):
    pass


class _GraphIndex:
    """Immutable per-graph snapshot with hash lookups for (s,p) and (p,o)."""

    __slots__ = ("graph_iri", "quads", "by_sp", "by_po")

    def __init__(self, graph_iri: str, quads: Iterable[Quad]) -> None:
        self.graph_iri = graph_iri
        self.quads: tuple[Quad, ...] = tuple(sorted(GraphSet(quads), key=quad_sort_key))
        self.by_sp: dict[tuple[Term, Term], list[Quad]] = {}
        self.by_po: dict[tuple[Term, Term], list[Quad]] = {}
        for q in self.quads:
            self.by_sp.setdefault((q.subject, q.predicate), []).append(q)
            self.by_po.setdefault((q.predicate, q.object), []).append(q)

    def match(
        self, s: Optional[Term], p: Optional[Term], o: Optional[Term]
    ) -> Iterator[Quad]:
        if s is not None and p is not None:
            candidates = self.by_sp.get((s, p), ())
        elif p is not None and o is not None:
            candidates = self.by_po.get((p, o), ())
        else:
            candidates = self.quads
        for q in candidates:
            if (s is None or q.subject == s) and (p is None or q.predicate == p) and (
                o is None or q.object == o
            ):
                yield q


class EmbeddedStore:
    """The embedded quadstore; also a QuadSource for the evaluator."""

    def __init__(self, data_dir: Optional[Path] = None) -> None:
        self._graphs: dict[str, _GraphIndex] = {}
        self._write_lock = threading.Lock()
        self._journal_path: Optional[Path] = None
        if data_dir is not None:
            data_dir = Path(data_dir)
            data_dir.mkdir(parents=True, exist_ok=True)
            self._journal_path = data_dir / "journal.nq"
            self._recover()
            self._compact()

    # --- journal ----------------------------------------------------------

    def _recover(self) -> None:
        path = self._journal_path
        if path is None or not path.exists():
            return
        graphs: dict[str, list[str]] = {}
        current: Optional[str] = None
        for line in path.read_text("utf-8").splitlines():
            if line.startswith("# REPLACE "):
                current = line[len("# REPLACE ") :].strip().strip("<>")
                graphs[current] = []
            elif line.startswith("# DROP "):
                graphs.pop(line[len("# DROP ") :].strip().strip("<>"), None)
                current = None
            elif line.strip() and current is not None:
                graphs[current].append(line)
        rebuilt: dict[str, _GraphIndex] = {}
        for graph_iri, lines in graphs.items():
            quads = parse("\n".join(lines), "nquads")
            rebuilt[graph_iri] = _GraphIndex(graph_iri, quads)
        self._graphs = rebuilt

    def _compact(self) -> None:
        path = self._journal_path
        if path is None:
            return
        lines: list[str] = []
        for graph_iri in sorted(self._graphs):
            lines.append(f"# REPLACE <{graph_iri}>")
            lines.extend(serialize_nquads_lines(GraphSet(self._graphs[graph_iri].quads)))
        tmp = path.with_suffix(".tmp")
        try:
            tmp.write_text("\n".join(lines) + ("\n" if lines else ""), "utf-8")
            os.replace(tmp, path)
        except OSError as exc:
            raise JournalWriteFailed(str(exc)) from exc

    def _append_journal(self, header: str, quads: Optional[GraphSet]) -> None:
        path = self._journal_path
        if path is None:
            return
        lines = [header]
        if quads is not None:
            lines.extend(serialize_nquads_lines(quads))
        try:
            with open(path, "a", encoding="utf-8") as fh:
                fh.write("\n".join(lines) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
        except OSError as exc:
            raise JournalWriteFailed(str(exc)) from exc

    # --- mutations ---------------------------------------------------------

    def replace_graph(self, graph_iri: str, quads: GraphSet) -> None:
        for q in quads:
            if q.graph.value != graph_iri:
                raise ValueError(f"quad in {q.graph.value!r} passed to replace_graph({graph_iri!r})")
        with self._write_lock:
            index = _GraphIndex(graph_iri, quads)
            self._append_journal(f"# REPLACE <{graph_iri}>", GraphSet(index.quads))
            updated = dict(self._graphs)
            if index.quads:
                updated[graph_iri] = index
            else:
                updated.pop(graph_iri, None)
            self._graphs = updated

    def drop_graph(self, graph_iri: str) -> None:
        with self._write_lock:
            self._append_journal(f"# DROP <{graph_iri}>", None)
            updated = dict(self._graphs)
            updated.pop(graph_iri, None)
            self._graphs = updated

    # --- reads --------------------------------------------------------------

    def has_graph(self, graph_iri: str) -> bool:
        return graph_iri in self._graphs

    def graph(self, graph_iri: str) -> GraphSet:
        index = self._graphs.get(graph_iri)
        return GraphSet(index.quads) if index else GraphSet()

    def graph_iris(self) -> list[str]:
        return sorted(self._graphs)

    def match(
        self,
        graph: Optional[Term],
        subject: Optional[Term],
        predicate: Optional[Term],
        object: Optional[Term],
    ) -> Iterator[Quad]:
        snapshot = self._graphs
        if graph is not None:
            index = snapshot.get(graph.value)
            if index is None:
                return
            yield from index.match(subject, predicate, object)
            return
        for graph_iri in sorted(snapshot):
            yield from snapshot[graph_iri].match(subject, predicate, object)

    def evaluate(self, ast: QueryAst) -> SolutionTable:
        return evaluate(self, ast)

    def select(self, query_text: str) -> SolutionTable:
        return self.evaluate(parse_query(query_text))

    def export_all(self) -> GraphSet:
        out = GraphSet()
        snapshot = self._graphs
        for graph_iri in sorted(snapshot):
            out.update(snapshot[graph_iri].quads)
        return GraphSet(sorted(out, key=quad_sort_key))

    def import_dataset(self, quads: GraphSet) -> None:
        """Bulk-load by whole graphs (used by the CLI import command)."""
        for graph_iri in quads.graph_iris():
            self.replace_graph(graph_iri, quads.in_graph(graph_iri))
