"""Term encoding and the Turtle / N-Quads parser.

The accepted grammar is the documented subset (docs/turtle-subset.md):
prefixed names, IRIs, string literals (short and long, with escapes),
language tags, datatypes, blank node labels, `a`, predicate/object lists.
Collections, anonymous blank nodes, and numeric shorthand are out of scope.
"""

from __future__ import annotations

import re
from typing import Optional
from urllib.parse import urljoin

from ..errors import GleaneryError
from ..model import GraphSet, Quad, Term, blank, iri, is_absolute_iri, literal

__all__ = [
    "RdfSyntaxError",
    "MixedGraphsInTurtle",
    "encode_term",
    "quad_sort_key",
    "parse",
    "parse_term_text",
]


class RdfSyntaxError(GleaneryError):
    """Lexical or grammatical error, with 1-based line/column."""

    code = "SyntaxError"

    def __init__(self, line: int, column: int, message: str) -> None:
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
        self.reason = message


class MixedGraphsInTurtle(GleaneryError):
    pass


_ESCAPES = {
    "\\": "\\\\",
    '"': '\\"',
    "\n": "\\n",
    "\r": "\\r",
    "\t": "\\t",
}

_UNESCAPES = {
    "t": "\t",
    "b": "\b",
    "n": "\n",
    "r": "\r",
    "f": "\f",
    '"': '"',
    "'": "'",
    "\\": "\\",
}


def _escape_string(value: str) -> str:
    out = []
    for ch in value:
        if ch in _ESCAPES:
            out.append(_ESCAPES[ch])
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04X}")
        else:
            out.append(ch)
    return "".join(out)


def encode_term(term: Term) -> str:
    """N-Triples encoding; also the canonical sort key for a term."""
    if term.kind == "iri":
        return f"<{term.value}>"
    if term.kind == "blank":
        return f"_:{term.value}"
    body = f'"{_escape_string(term.value)}"'
    if term.language is not None:
        return f"{body}@{term.language}"
    if term.datatype is not None:
        return f"{body}^^<{term.datatype}>"
    return body


def quad_sort_key(quad: Quad) -> tuple[str, str, str, str]:
    """Canonical ordering key: (subject, predicate, object, graph) encodings."""
    return (
        encode_term(quad.subject),
        encode_term(quad.predicate),
        encode_term(quad.object),
        encode_term(quad.graph),
    )


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

_PNAME_RE = re.compile(r"^([A-Za-z_][\w.-]*)?:([A-Za-z0-9_][\w.-]*|)$")
_BLANK_RE = re.compile(r"^_:[A-Za-z0-9_][\w.-]*$")


class _Token:
    __slots__ = ("kind", "value", "line", "col", "language", "datatype")

    def __init__(self, kind: str, value: str, line: int, col: int) -> None:
        self.kind = kind  # iri, pname, blank, string, punct, keyword, langtag, eof
        self.value = value
        self.line = line
        self.col = col
        self.language: Optional[str] = None
        self.datatype: Optional[object] = None  # _Token of kind iri/pname


class _Tokenizer:
    def __init__(self, text: str) -> None:
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1

    def error(self, message: str) -> RdfSyntaxError:
        return RdfSyntaxError(self.line, self.col, message)

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
        out: list[_Token] = []
        while True:
            tok = self.next_token()
            out.append(tok)
            if tok.kind == "eof":
                return out

    def next_token(self) -> _Token:
        self._skip_ws()
        if self.pos >= len(self.text):
            return _Token("eof", "", self.line, self.col)
        line, col = self.line, self.col
        ch = self.text[self.pos]
        if ch == "<":
            return self._read_iri(line, col)
        if ch in '"\'':
            tok = self._read_string(line, col)
            # optional language tag or datatype suffix
            if self.pos < len(self.text) and self.text[self.pos] == "@":
                self._advance()
                start = self.pos
                while self.pos < len(self.text) and (
                    self.text[self.pos].isalnum() or self.text[self.pos] == "-"
                ):
                    self._advance()
                tag = self.text[start : self.pos]
                if not tag:
                    raise RdfSyntaxError(line, col, "empty language tag")
                tok.language = tag
            elif self.text.startswith("^^", self.pos):
                self._advance(2)
                self._skip_ws()
                if self.pos >= len(self.text):
                    raise RdfSyntaxError(self.line, self.col, "datatype expected after '^^'")
                if self.text[self.pos] == "<":
                    tok.datatype = self._read_iri(self.line, self.col)
                else:
                    tok.datatype = self._read_word(self.line, self.col)
                    if tok.datatype.kind != "pname":
                        raise RdfSyntaxError(line, col, "datatype must be an IRI or prefixed name")
            return tok
        if ch in ".;,[]()":
            self._advance()
            return _Token("punct", ch, line, col)
        return self._read_word(line, col)

    def _read_iri(self, line: int, col: int) -> _Token:
        self._advance()  # consume <
        out = []
        while True:
            if self.pos >= len(self.text):
                raise RdfSyntaxError(line, col, "unterminated IRI")
            ch = self.text[self.pos]
            if ch == ">":
                self._advance()
                break
            if ch == "\\":
                out.append(self._read_unicode_escape(line, col))
                continue
            if ch in ' <"{}|^`' or ch == "\n":
                raise RdfSyntaxError(self.line, self.col, f"character {ch!r} not allowed in IRI")
            out.append(ch)
            self._advance()
        return _Token("iri", "".join(out), line, col)

    def _read_unicode_escape(self, line: int, col: int) -> str:
        # positioned at backslash
        self._advance()
        if self.pos >= len(self.text):
            raise RdfSyntaxError(line, col, "dangling escape")
        kind = self.text[self.pos]
        if kind == "u":
            width = 4
        elif kind == "U":
            width = 8
        else:
            raise RdfSyntaxError(self.line, self.col, f"invalid IRI escape '\\{kind}'")
        self._advance()
        digits = self.text[self.pos : self.pos + width]
        if len(digits) < width or not all(c in "0123456789abcdefABCDEF" for c in digits):
            raise RdfSyntaxError(self.line, self.col, "malformed unicode escape")
        self._advance(width)
        return chr(int(digits, 16))

    def _read_string(self, line: int, col: int) -> _Token:
        quote = self.text[self.pos]
        long_form = self.text.startswith(quote * 3, self.pos)
        delim = quote * 3 if long_form else quote
        self._advance(len(delim))
        out = []
        while True:
            if self.pos >= len(self.text):
                raise RdfSyntaxError(line, col, "unterminated string literal")
            if self.text.startswith(delim, self.pos):
                self._advance(len(delim))
                break
            ch = self.text[self.pos]
            if ch == "\\":
                nxt = self.text[self.pos + 1] if self.pos + 1 < len(self.text) else ""
                if nxt in ("u", "U"):
                    out.append(self._read_unicode_escape(line, col))
                elif nxt in _UNESCAPES:
                    out.append(_UNESCAPES[nxt])
                    self._advance(2)
                else:
                    raise RdfSyntaxError(self.line, self.col, f"invalid string escape '\\{nxt}'")
                continue
            if ch == "\n" and not long_form:
                raise RdfSyntaxError(line, col, "unterminated string literal")
            out.append(ch)
            self._advance()
        return _Token("string", "".join(out), line, col)

    def _read_word(self, line: int, col: int) -> _Token:
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] not in ' \t\r\n<>"#;,()[]':
            # '.' terminates a word only when followed by whitespace/EOF so that
            # prefixed names may contain dots (e.g. dc.terms:x is rare but legal).
            if self.text[self.pos] == ".":
                nxt = self.text[self.pos + 1] if self.pos + 1 < len(self.text) else ""
                if nxt == "" or nxt in " \t\r\n#":
                    break
            self._advance()
        word = self.text[start : self.pos]
        if not word:
            raise RdfSyntaxError(line, col, f"unexpected character {self.text[self.pos]!r}")
        if word.startswith("_:"):
            if not _BLANK_RE.match(word):
                raise RdfSyntaxError(line, col, f"malformed blank node label {word!r}")
            return _Token("blank", word[2:], line, col)
        if word in ("@prefix", "@base", "a") or word.upper() in ("PREFIX", "BASE"):
            return _Token("keyword", word, line, col)
        if _PNAME_RE.match(word):
            return _Token("pname", word, line, col)
        raise RdfSyntaxError(line, col, f"unrecognized token {word!r}")


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str, base: Optional[str], graph_iri: Optional[str]) -> None:
        self.toks = _Tokenizer(text).tokens()
        self.i = 0
        self.base = base
        self.prefixes: dict[str, str] = {}
        self.graph_iri = graph_iri

    def peek(self) -> _Token:
        return self.toks[self.i]

    def take(self) -> _Token:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect_punct(self, ch: str) -> None:
        tok = self.take()
        if tok.kind != "punct" or tok.value != ch:
            raise RdfSyntaxError(tok.line, tok.col, f"expected {ch!r}, found {tok.value!r}")

    def resolve_iri(self, tok: _Token) -> Term:
        value = tok.value
        if not is_absolute_iri(value):
            if self.base:
                value = urljoin(self.base, value)
            if not is_absolute_iri(value):
                raise RdfSyntaxError(tok.line, tok.col, f"relative IRI without base: {tok.value!r}")
        return iri(value)

    def expand_pname(self, tok: _Token) -> Term:
        m = _PNAME_RE.match(tok.value)
        assert m is not None
        prefix = m.group(1) or ""
        if prefix not in self.prefixes:
            raise RdfSyntaxError(tok.line, tok.col, f"undeclared prefix {prefix!r}")
        return iri(self.prefixes[prefix] + m.group(2))

    def term_from(self, tok: _Token, *, as_predicate: bool = False) -> Term:
        if tok.kind == "iri":
            return self.resolve_iri(tok)
        if tok.kind == "pname":
            return self.expand_pname(tok)
        if tok.kind == "keyword" and tok.value == "a":
            from .namespaces import RDF_TYPE

            return iri(RDF_TYPE)
        if as_predicate:
            raise RdfSyntaxError(tok.line, tok.col, f"predicate must be an IRI, found {tok.value!r}")
        if tok.kind == "blank":
            return blank(tok.value)
        if tok.kind == "string":
            datatype = None
            if tok.datatype is not None:
                dt_tok = tok.datatype
                dt = self.resolve_iri(dt_tok) if dt_tok.kind == "iri" else self.expand_pname(dt_tok)
                datatype = dt.value
            try:
                return literal(tok.value, datatype=datatype, language=tok.language)
            except ValueError as exc:
                raise RdfSyntaxError(tok.line, tok.col, str(exc)) from exc
        raise RdfSyntaxError(tok.line, tok.col, f"unexpected token {tok.value!r}")

    def parse_directive(self) -> bool:
        tok = self.peek()
        if tok.kind != "keyword" or tok.value == "a":
            return False
        word = tok.value
        self.take()
        if word == "@prefix" or word.upper() == "PREFIX":
            name_tok = self.take()
            m = _PNAME_RE.match(name_tok.value) if name_tok.kind == "pname" else None
            if m is None or m.group(2):
                raise RdfSyntaxError(name_tok.line, name_tok.col, "prefix declaration expects 'name:'")
            iri_tok = self.take()
            if iri_tok.kind != "iri":
                raise RdfSyntaxError(iri_tok.line, iri_tok.col, "prefix declaration expects an IRI")
            self.prefixes[m.group(1) or ""] = self.resolve_iri(iri_tok).value
        elif word == "@base" or word.upper() == "BASE":
            iri_tok = self.take()
            if iri_tok.kind != "iri":
                raise RdfSyntaxError(iri_tok.line, iri_tok.col, "base declaration expects an IRI")
            self.base = self.resolve_iri(iri_tok).value
        if word.startswith("@"):
            self.expect_punct(".")
        return True

    def parse_turtle(self) -> GraphSet:
        if self.graph_iri is None:
            raise ValueError("turtle parsing requires a target graph_iri")
        g = iri(self.graph_iri)
        out = GraphSet()
        while True:
            if self.peek().kind == "eof":
                return out
            if self.parse_directive():
                continue
            subject = self.term_from(self.take())
            if subject.is_literal:
                tok = self.toks[self.i - 1]
                raise RdfSyntaxError(tok.line, tok.col, "literal cannot be a subject")
            while True:
                predicate = self.term_from(self.take(), as_predicate=True)
                while True:
                    obj = self.term_from(self.take())
                    out.add(Quad(subject, predicate, obj, g))
                    nxt = self.peek()
                    if nxt.kind == "punct" and nxt.value == ",":
                        self.take()
                        continue
                    break
                nxt = self.peek()
                if nxt.kind == "punct" and nxt.value == ";":
                    self.take()
                    # permit trailing ';' before '.'
                    if self.peek().kind == "punct" and self.peek().value == ".":
                        break
                    continue
                break
            self.expect_punct(".")

    def parse_nquads(self) -> GraphSet:
        out = GraphSet()
        while True:
            if self.peek().kind == "eof":
                return out
            subject = self.term_from(self.take())
            if subject.is_literal:
                tok = self.toks[self.i - 1]
                raise RdfSyntaxError(tok.line, tok.col, "literal cannot be a subject")
            predicate = self.term_from(self.take(), as_predicate=True)
            obj = self.term_from(self.take())
            graph_tok = self.take()
            if graph_tok.kind not in ("iri", "pname"):
                raise RdfSyntaxError(
                    graph_tok.line, graph_tok.col, "N-Quads statement requires a graph IRI"
                )
            graph = self.term_from(graph_tok)
            out.add(Quad(subject, predicate, obj, graph))
            self.expect_punct(".")


def parse_term_text(text: str) -> Term:
    """One term in N-Triples syntax; bare text parses as a plain literal."""
    stripped = text.strip()
    if not stripped.startswith(("<", '"', "_:")):
        return literal(stripped)
    tokenizer = _Tokenizer(stripped)
    tok = tokenizer.next_token()
    term = _Parser("", None, None).term_from(tok)
    rest = tokenizer.next_token()
    if rest.kind != "eof":
        raise RdfSyntaxError(rest.line, rest.col, f"trailing content after term: {rest.value!r}")
    return term


def parse(
    data: bytes | str,
    format: str,
    *,
    base: Optional[str] = None,
    graph_iri: Optional[str] = None,
) -> GraphSet:
    """Parse a Turtle or N-Quads document into a GraphSet.

    Turtle carries no graph component, so ``graph_iri`` names the target
    graph for all parsed statements.
    """
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    if format == "turtle":
        return _Parser(text, base, graph_iri).parse_turtle()
    if format == "nquads":
        return _Parser(text, base, None).parse_nquads()
    raise ValueError(f"unknown RDF format: {format!r}")
