"""gleanery: a self-hostable, Linked-Open-Data-native collaborative
cataloguing engine.

Records are named graphs with PROV-tracked editorial history; templates map
web forms onto ontology terms; published snapshots feed facets, RDFa pages,
a SPARQL endpoint, versioned commits, and archival hooks.
"""

__version__ = "0.1.0"
