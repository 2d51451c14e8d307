"""Well-known vocabulary IRIs and the default prefix table for serialization."""

from __future__ import annotations

RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDFS = "http://www.w3.org/2000/01/rdf-schema#"
XSD = "http://www.w3.org/2001/XMLSchema#"
PROV = "http://www.w3.org/ns/prov#"
DCTERMS = "http://purl.org/dc/terms/"

RDF_TYPE = RDF + "type"
RDFS_LABEL = RDFS + "label"
RDFS_COMMENT = RDFS + "comment"

XSD_STRING = XSD + "string"
XSD_BOOLEAN = XSD + "boolean"
XSD_DATE = XSD + "date"
XSD_DATETIME = XSD + "dateTime"
XSD_INTEGER = XSD + "integer"
XSD_ANYURI = XSD + "anyURI"
XSD_DECIMAL = XSD + "decimal"

PROV_ACTIVITY = PROV + "Activity"
PROV_WAS_ASSOCIATED_WITH = PROV + "wasAssociatedWith"
PROV_WAS_GENERATED_BY = PROV + "wasGeneratedBy"
PROV_GENERATED_AT_TIME = PROV + "generatedAtTime"
PROV_ENDED_AT_TIME = PROV + "endedAtTime"

# Prefixes used for abbreviation in canonical Turtle; emitted alphabetically
# and only when actually used by a document.
DEFAULT_PREFIXES: dict[str, str] = {
    "dcterms": DCTERMS,
    "prov": PROV,
    "rdf": RDF,
    "rdfs": RDFS,
    "xsd": XSD,
}


def local_vocab(base_uri: str) -> dict[str, str]:
    """Installation-local predicates and stage IRIs (see docs/provenance.md)."""
    v = base_uri + "vocab/"
    return {
        "stage": v + "stage",
        "sequence": v + "sequence",
        "stage_unmodified": v + "stage/unmodified",
        "stage_modified": v + "stage/modified",
        "stage_published": v + "stage/published",
        "creation": v + "Creation",
        "modification": v + "Modification",
        "publication": v + "Publication",
        "archived_at": v + "archivedAt",
        "source_vocabulary": v + "sourceVocabulary",
        "fetched_at": v + "fetchedAt",
    }
