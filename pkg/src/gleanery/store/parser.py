"""Recursive-descent parser for the documented SPARQL subset.

Constructs outside the subset raise UnsupportedFeature (distinct from
ParseError) so the service can route such queries to a remote endpoint
when one is configured.
"""

from __future__ import annotations

import re
from typing import Optional

from ..errors import GleaneryError
from ..model import Term, iri, is_absolute_iri, literal
from .ast import Count, Filter, FilterArg, GraphPattern, QueryAst, TriplePattern, Var

__all__ = ["ParseError", "UnsupportedFeature", "parse_query"]

RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"


class ParseError(GleaneryError):
    def __init__(self, line: int, col: int, expected: str) -> None:
        super().__init__(f"line {line}, column {col}: {expected}")
        self.line = line
        self.col = col
        self.expected = expected


class UnsupportedFeature(GleaneryError):
    """The query is valid SPARQL but outside the embedded subset."""

    def __init__(self, name: str) -> None:
        super().__init__(f"feature outside the embedded SPARQL subset: {name}")
        self.name = name


_UNSUPPORTED_KEYWORDS = {
    "OPTIONAL",
    "UNION",
    "MINUS",
    "SERVICE",
    "BIND",
    "VALUES",
    "EXISTS",
    "HAVING",
    "CONSTRUCT",
    "ASK",
    "DESCRIBE",
    "INSERT",
    "DELETE",
    "LOAD",
    "CLEAR",
    "DROP",
    "CREATE",
    "SUM",
    "AVG",
    "MIN",
    "MAX",
    "SAMPLE",
    "GROUP_CONCAT",
    "REDUCED",
    "FROM",
}

_KEYWORDS = {
    "PREFIX",
    "BASE",
    "SELECT",
    "DISTINCT",
    "WHERE",
    "GRAPH",
    "FILTER",
    "GROUP",
    "BY",
    "ORDER",
    "ASC",
    "DESC",
    "LIMIT",
    "OFFSET",
    "COUNT",
    "AS",
    "CONTAINS",
    "REGEX",
    "LCASE",
    "STR",
    "A",
} | _UNSUPPORTED_KEYWORDS

_PNAME_RE = re.compile(r"^([A-Za-z_][\w.-]*)?:([A-Za-z0-9_][\w.-]*|)$")
_VAR_RE = re.compile(r"^[?$]([A-Za-z_][\w]*)$")
_INT_RE = re.compile(r"^[0-9]+$")


class _Token:
    __slots__ = ("kind", "value", "line", "col", "language", "datatype")

    def __init__(self, kind: str, value: str, line: int, col: int) -> None:
        self.kind = kind  # keyword, var, iri, pname, string, int, punct, eof
        self.value = value
        self.line = line
        self.col = col
        self.language: Optional[str] = None
        self.datatype: Optional["_Token"] = None


class _Lexer:
    def __init__(self, text: str) -> None:
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1

    def _advance(self, n: int = 1) -> None:
        for _ in range(n):
            if self.pos < len(self.text) and self.text[self.pos] == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
            self.pos += 1

    def _skip_ws(self) -> None:
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch in " \t\r\n":
                self._advance()
            elif ch == "#":
                while self.pos < len(self.text) and self.text[self.pos] != "\n":
                    self._advance()
            else:
                return

    def tokens(self) -> list[_Token]:
        out = []
        while True:
            tok = self._next()
            out.append(tok)
            if tok.kind == "eof":
                return out

    def _next(self) -> _Token:
        self._skip_ws()
        if self.pos >= len(self.text):
            return _Token("eof", "", self.line, self.col)
        line, col = self.line, self.col
        ch = self.text[self.pos]
        if ch == "<":
            return self._iri(line, col)
        if ch in "\"'":
            return self._string(line, col)
        if ch in "{}()=,;.*":
            self._advance()
            return _Token("punct", ch, line, col)
        if ch == "!":
            if self.text.startswith("!=", self.pos):
                self._advance(2)
                return _Token("punct", "!=", line, col)
            raise ParseError(line, col, "expected '!='")
        if ch in "?$":
            return self._word(line, col)
        return self._word(line, col)

    def _iri(self, line: int, col: int) -> _Token:
        end = self.text.find(">", self.pos + 1)
        if end < 0:
            raise ParseError(line, col, "unterminated IRI")
        value = self.text[self.pos + 1 : end]
        self._advance(end - self.pos + 1)
        return _Token("iri", value, line, col)

    def _string(self, line: int, col: int) -> _Token:
        quote = self.text[self.pos]
        self._advance()
        out = []
        while True:
            if self.pos >= len(self.text):
                raise ParseError(line, col, "unterminated string")
            ch = self.text[self.pos]
            if ch == "\\":
                nxt = self.text[self.pos + 1] if self.pos + 1 < len(self.text) else ""
                mapping = {"n": "\n", "t": "\t", "r": "\r", '"': '"', "'": "'", "\\": "\\"}
                if nxt not in mapping:
                    raise ParseError(self.line, self.col, f"invalid escape '\\{nxt}'")
                out.append(mapping[nxt])
                self._advance(2)
                continue
            if ch == quote:
                self._advance()
                break
            if ch == "\n":
                raise ParseError(line, col, "unterminated string")
            out.append(ch)
            self._advance()
        tok = _Token("string", "".join(out), line, col)
        if self.pos < len(self.text) and self.text[self.pos] == "@":
            self._advance()
            start = self.pos
            while self.pos < len(self.text) and (
                self.text[self.pos].isalnum() or self.text[self.pos] == "-"
            ):
                self._advance()
            tok.language = self.text[start : self.pos]
        elif self.text.startswith("^^", self.pos):
            self._advance(2)
            nxt = self._next()
            if nxt.kind not in ("iri", "pname"):
                raise ParseError(nxt.line, nxt.col, "datatype IRI expected after '^^'")
            tok.datatype = nxt
        return tok

    def _word(self, line: int, col: int) -> _Token:
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] not in ' \t\r\n<>"{}()=,;*!#':
            if self.text[self.pos] == ".":
                nxt = self.text[self.pos + 1] if self.pos + 1 < len(self.text) else ""
                if nxt == "" or nxt in " \t\r\n{}()#<?\"'":
                    break
            self._advance()
        word = self.text[start : self.pos]
        if not word:
            raise ParseError(line, col, f"unexpected character {self.text[self.pos]!r}")
        if word.startswith("_:"):
            raise UnsupportedFeature("blank nodes in query patterns")
        m = _VAR_RE.match(word)
        if m:
            return _Token("var", m.group(1), line, col)
        if word.upper() in _KEYWORDS:
            return _Token("keyword", word.upper(), line, col)
        if word == "a":
            return _Token("keyword", "A", line, col)
        if _INT_RE.match(word):
            return _Token("int", word, line, col)
        if _PNAME_RE.match(word):
            return _Token("pname", word, line, col)
        raise ParseError(line, col, f"unrecognized token {word!r}")


class _QueryParser:
    def __init__(self, text: str) -> None:
        self.toks = _Lexer(text).tokens()
        self.i = 0
        self.prefixes: dict[str, str] = {}
        # surface out-of-subset features before any grammar error can mask them
        for tok in self.toks:
            if tok.kind == "keyword" and tok.value in _UNSUPPORTED_KEYWORDS:
                raise UnsupportedFeature(tok.value)

    def peek(self) -> _Token:
        return self.toks[self.i]

    def take(self) -> _Token:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def at_keyword(self, *names: str) -> bool:
        tok = self.peek()
        return tok.kind == "keyword" and tok.value in names

    def expect_keyword(self, name: str) -> None:
        tok = self.take()
        if tok.kind != "keyword" or tok.value != name:
            raise ParseError(tok.line, tok.col, f"expected {name}, found {tok.value!r}")

    def expect_punct(self, ch: str) -> None:
        tok = self.take()
        if tok.kind != "punct" or tok.value != ch:
            raise ParseError(tok.line, tok.col, f"expected {ch!r}, found {tok.value!r}")

    def check_unsupported(self, tok: _Token) -> None:
        if tok.kind == "keyword" and tok.value in _UNSUPPORTED_KEYWORDS:
            raise UnsupportedFeature(tok.value)

    def resolve_iri(self, tok: _Token) -> Term:
        if tok.kind == "iri":
            if not is_absolute_iri(tok.value):
                raise ParseError(tok.line, tok.col, f"IRI must be absolute: {tok.value!r}")
            return iri(tok.value)
        m = _PNAME_RE.match(tok.value)
        if m is None:
            raise ParseError(tok.line, tok.col, f"expected IRI, found {tok.value!r}")
        prefix = m.group(1) or ""
        if prefix not in self.prefixes:
            raise ParseError(tok.line, tok.col, f"undeclared prefix {prefix!r}")
        return iri(self.prefixes[prefix] + m.group(2))

    def parse_term(self, tok: _Token, *, allow_var: bool = True):
        self.check_unsupported(tok)
        if tok.kind == "var":
            if not allow_var:
                raise ParseError(tok.line, tok.col, "variable not allowed here")
            return Var(tok.value)
        if tok.kind in ("iri", "pname"):
            return self.resolve_iri(tok)
        if tok.kind == "keyword" and tok.value == "A":
            return iri(RDF_TYPE)
        if tok.kind == "string":
            datatype = None
            if tok.datatype is not None:
                datatype = self.resolve_iri(tok.datatype).value
            return literal(tok.value, datatype=datatype, language=tok.language or None)
        if tok.kind == "int":
            return literal(tok.value, datatype="http://www.w3.org/2001/XMLSchema#integer")
        raise ParseError(tok.line, tok.col, f"expected term, found {tok.value!r}")

    # --- grammar ---------------------------------------------------------

    def parse(self) -> QueryAst:
        while self.at_keyword("PREFIX", "BASE"):
            tok = self.take()
            if tok.value == "BASE":
                raise UnsupportedFeature("BASE")
            name_tok = self.take()
            m = _PNAME_RE.match(name_tok.value) if name_tok.kind == "pname" else None
            if m is None or m.group(2):
                raise ParseError(name_tok.line, name_tok.col, "expected 'prefix:' after PREFIX")
            iri_tok = self.take()
            if iri_tok.kind != "iri":
                raise ParseError(iri_tok.line, iri_tok.col, "expected IRI in PREFIX declaration")
            self.prefixes[m.group(1) or ""] = iri_tok.value

        tok = self.peek()
        self.check_unsupported(tok)
        self.expect_keyword("SELECT")
        distinct = False
        if self.at_keyword("DISTINCT"):
            self.take()
            distinct = True

        select_vars: list[str] = []
        aggregates: list[Count] = []
        select_all = False
        while True:
            tok = self.peek()
            if tok.kind == "var":
                select_vars.append(self.take().value)
            elif tok.kind == "punct" and tok.value == "*":
                self.take()
                select_all = True
            elif tok.kind == "punct" and tok.value == "(":
                self.take()
                inner = self.take()
                self.check_unsupported(inner)
                if not (inner.kind == "keyword" and inner.value == "COUNT"):
                    raise ParseError(inner.line, inner.col, "only COUNT aggregates are supported")
                self.expect_punct("(")
                var_tok = self.take()
                if var_tok.kind != "var":
                    if var_tok.kind == "punct" and var_tok.value == "*":
                        raise UnsupportedFeature("COUNT(*)")
                    if var_tok.kind == "keyword" and var_tok.value == "DISTINCT":
                        raise UnsupportedFeature("COUNT(DISTINCT)")
                    raise ParseError(var_tok.line, var_tok.col, "COUNT expects a variable")
                self.expect_punct(")")
                self.expect_keyword("AS")
                alias_tok = self.take()
                if alias_tok.kind != "var":
                    raise ParseError(alias_tok.line, alias_tok.col, "AS expects a variable")
                self.expect_punct(")")
                aggregates.append(Count(var_tok.value, alias_tok.value))
                select_vars.append(alias_tok.value)
            else:
                break
        if not select_vars and not select_all:
            tok = self.peek()
            raise ParseError(tok.line, tok.col, "SELECT expects variables, aggregates, or *")

        if self.at_keyword("WHERE"):
            self.take()
        self.expect_punct("{")
        patterns: list[GraphPattern] = []
        filters: list[Filter] = []
        loose: list[TriplePattern] = []
        while True:
            tok = self.peek()
            self.check_unsupported(tok)
            if tok.kind == "punct" and tok.value == "}":
                self.take()
                break
            if tok.kind == "keyword" and tok.value == "SELECT":
                raise UnsupportedFeature("subquery")
            if tok.kind == "keyword" and tok.value == "GRAPH":
                if loose:
                    patterns.append(GraphPattern(None, tuple(loose)))
                    loose = []
                self.take()
                graph_term = self.parse_term(self.take())
                if isinstance(graph_term, Term) and not graph_term.is_iri:
                    tok2 = self.toks[self.i - 1]
                    raise ParseError(tok2.line, tok2.col, "GRAPH expects a variable or IRI")
                self.expect_punct("{")
                triples = self.parse_triples_until("}")
                self.expect_punct("}")
                patterns.append(GraphPattern(graph_term, tuple(triples)))
            elif tok.kind == "keyword" and tok.value == "FILTER":
                self.take()
                filters.append(self.parse_filter())
            else:
                loose.extend(self.parse_triples_until("}", "GRAPH", "FILTER", single_statement=True))
        if loose:
            patterns.append(GraphPattern(None, tuple(loose)))

        group_by = None
        if self.at_keyword("GROUP"):
            self.take()
            self.expect_keyword("BY")
            var_tok = self.take()
            if var_tok.kind != "var":
                raise ParseError(var_tok.line, var_tok.col, "GROUP BY expects a variable")
            group_by = var_tok.value

        order_by = None
        if self.at_keyword("ORDER"):
            self.take()
            self.expect_keyword("BY")
            ascending = True
            if self.at_keyword("ASC", "DESC"):
                ascending = self.take().value == "ASC"
                self.expect_punct("(")
                var_tok = self.take()
                if var_tok.kind != "var":
                    raise ParseError(var_tok.line, var_tok.col, "ORDER BY expects a variable")
                self.expect_punct(")")
            else:
                var_tok = self.take()
                if var_tok.kind != "var":
                    raise ParseError(var_tok.line, var_tok.col, "ORDER BY expects a variable")
            order_by = (var_tok.value, ascending)

        limit = offset = None
        while self.at_keyword("LIMIT", "OFFSET"):
            which = self.take().value
            num = self.take()
            if num.kind != "int":
                raise ParseError(num.line, num.col, f"{which} expects an integer")
            if which == "LIMIT":
                limit = int(num.value)
            else:
                offset = int(num.value)

        tail = self.peek()
        self.check_unsupported(tail)
        if tail.kind != "eof":
            raise ParseError(tail.line, tail.col, f"unexpected trailing {tail.value!r}")

        ast = QueryAst(
            select_vars=tuple(select_vars),
            distinct=distinct,
            patterns=tuple(patterns),
            filters=tuple(filters),
            group_by=group_by,
            aggregates=tuple(aggregates),
            order_by=order_by,
            limit=limit,
            offset=offset,
        )
        if select_all:
            ast = QueryAst(
                select_vars=tuple(sorted(ast.pattern_variables())),
                distinct=ast.distinct,
                patterns=ast.patterns,
                filters=ast.filters,
                group_by=ast.group_by,
                aggregates=ast.aggregates,
                order_by=ast.order_by,
                limit=ast.limit,
                offset=ast.offset,
            )
        self.validate(ast)
        return ast

    def parse_triples_until(self, *stops: str, single_statement: bool = False) -> list[TriplePattern]:
        triples: list[TriplePattern] = []
        while True:
            tok = self.peek()
            self.check_unsupported(tok)
            if tok.kind == "punct" and tok.value in stops:
                return triples
            if tok.kind == "keyword" and tok.value in stops:
                return triples
            subject = self.parse_term(self.take())
            if isinstance(subject, Term) and subject.is_literal:
                prev = self.toks[self.i - 1]
                raise ParseError(prev.line, prev.col, "literal cannot be a subject")
            while True:
                pred_tok = self.take()
                self.check_unsupported(pred_tok)
                predicate = self.parse_term(pred_tok)
                if isinstance(predicate, Term) and not predicate.is_iri:
                    raise ParseError(pred_tok.line, pred_tok.col, "predicate must be an IRI or variable")
                while True:
                    obj = self.parse_term(self.take())
                    triples.append(TriplePattern(subject, predicate, obj))
                    nxt = self.peek()
                    if nxt.kind == "punct" and nxt.value == ",":
                        self.take()
                        continue
                    break
                nxt = self.peek()
                if nxt.kind == "punct" and nxt.value == ";":
                    self.take()
                    after = self.peek()
                    if after.kind == "punct" and after.value in (".", "}"):
                        break
                    continue
                break
            nxt = self.peek()
            if nxt.kind == "punct" and nxt.value == ".":
                self.take()
            if single_statement:
                return triples

    def parse_filter(self) -> Filter:
        self.expect_punct("(")
        tok = self.take()
        self.check_unsupported(tok)
        if tok.kind == "keyword" and tok.value in ("CONTAINS", "REGEX"):
            fn_name = tok.value
            self.expect_punct("(")
            arg = self.parse_filter_arg()
            self.expect_punct(",")
            pat_tok = self.take()
            if pat_tok.kind != "string":
                raise ParseError(pat_tok.line, pat_tok.col, f"{fn_name} expects a string")
            flags = ""
            if fn_name == "REGEX":
                nxt = self.peek()
                if nxt.kind == "punct" and nxt.value == ",":
                    self.take()
                    flag_tok = self.take()
                    if flag_tok.kind != "string":
                        raise ParseError(flag_tok.line, flag_tok.col, "REGEX flags must be a string")
                    flags = flag_tok.value
            self.expect_punct(")")
            self.expect_punct(")")
            return Filter(
                kind=fn_name.lower(),
                arg=arg,
                value=literal(pat_tok.value),
                flags=flags,
            )
        # comparison form: arg (=|!=) value
        self.i -= 1
        arg = self.parse_filter_arg()
        op_tok = self.take()
        if op_tok.kind != "punct" or op_tok.value not in ("=", "!="):
            raise ParseError(op_tok.line, op_tok.col, "expected '=' or '!=' in FILTER")
        value_tok = self.take()
        value = self.parse_term(value_tok, allow_var=False)
        if isinstance(value, Var):
            raise ParseError(value_tok.line, value_tok.col, "FILTER comparisons bind a constant")
        self.expect_punct(")")
        return Filter(kind="eq" if op_tok.value == "=" else "neq", arg=arg, value=value)

    def parse_filter_arg(self) -> FilterArg:
        tok = self.take()
        self.check_unsupported(tok)
        if tok.kind == "keyword" and tok.value in ("LCASE", "STR"):
            fn = tok.value.lower()
            self.expect_punct("(")
            inner = self.take()
            if inner.kind == "keyword" and inner.value == "STR" and fn == "lcase":
                # LCASE(STR(?x)) is accepted as plain LCASE
                self.expect_punct("(")
                inner = self.take()
                if inner.kind != "var":
                    raise ParseError(inner.line, inner.col, "STR expects a variable")
                self.expect_punct(")")
            elif inner.kind != "var":
                raise ParseError(inner.line, inner.col, f"{tok.value} expects a variable")
            self.expect_punct(")")
            return FilterArg(inner.value, fn)
        if tok.kind == "var":
            return FilterArg(tok.value, None)
        raise ParseError(tok.line, tok.col, "FILTER expects a variable or LCASE/STR call")

    def validate(self, ast: QueryAst) -> None:
        pattern_vars = ast.pattern_variables()
        if not ast.patterns:
            tok = self.peek()
            raise ParseError(tok.line, tok.col, "WHERE clause has no triple patterns")
        aliases = {c.alias for c in ast.aggregates}
        for v in ast.select_vars:
            if v not in pattern_vars and v not in aliases:
                raise ParseError(0, 0, f"projected variable ?{v} is not bound by any pattern")
        if (ast.group_by is None) != (not ast.aggregates):
            raise ParseError(0, 0, "GROUP BY and COUNT must be used together")
        if ast.group_by is not None:
            if ast.group_by not in pattern_vars:
                raise ParseError(0, 0, f"GROUP BY variable ?{ast.group_by} is not bound")
            for v in ast.select_vars:
                if v != ast.group_by and v not in aliases:
                    raise ParseError(0, 0, f"?{v} must be the GROUP BY variable or an aggregate")
            for c in ast.aggregates:
                if c.var not in pattern_vars:
                    raise ParseError(0, 0, f"COUNT variable ?{c.var} is not bound")
        for f in ast.filters:
            if f.arg.var not in pattern_vars:
                raise ParseError(0, 0, f"FILTER variable ?{f.arg.var} is not bound")
        if ast.order_by is not None and ast.order_by[0] not in pattern_vars | aliases:
            raise ParseError(0, 0, f"ORDER BY variable ?{ast.order_by[0]} is not bound")


def parse_query(text: str) -> QueryAst:
    """Parse subset-SPARQL text into a QueryAst (see docs/sparql-subset.md)."""
    return _QueryParser(text).parse()
