"""RDF input/output: mapping, Turtle/N-Quads syntax, canonical serialization, RDFa."""

from .mapping import (
    ContentGraph,
    UnmappedProperty,
    from_rdf,
    record_label,
    resolve_new_entities,
    rewrite_graph,
    to_rdf,
)
from .namespaces import (
    DEFAULT_PREFIXES,
    PROV,
    RDF,
    RDFS,
    RDFS_COMMENT,
    RDFS_LABEL,
    RDF_TYPE,
    XSD,
    local_vocab,
)
from .rdfa import RdfaPageModel, RdfaRow, rdfa_model, render_rdfa_rows
from .serialize import serialize, serialize_nquads_lines
from .syntax import MixedGraphsInTurtle, RdfSyntaxError, encode_term, parse, quad_sort_key

__all__ = [
    "ContentGraph",
    "UnmappedProperty",
    "from_rdf",
    "record_label",
    "resolve_new_entities",
    "rewrite_graph",
    "to_rdf",
    "DEFAULT_PREFIXES",
    "PROV",
    "RDF",
    "RDFS",
    "RDFS_COMMENT",
    "RDFS_LABEL",
    "RDF_TYPE",
    "XSD",
    "local_vocab",
    "RdfaPageModel",
    "RdfaRow",
    "rdfa_model",
    "render_rdfa_rows",
    "serialize",
    "serialize_nquads_lines",
    "MixedGraphsInTurtle",
    "RdfSyntaxError",
    "encode_term",
    "parse",
    "quad_sort_key",
]
