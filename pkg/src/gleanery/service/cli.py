"""Command-line entry point: init, serve, validate-template, export, import."""

from __future__ import annotations

import argparse
import ipaddress
import json
import sys
from pathlib import Path

from ..errors import GleaneryError
from ..model import ConfigError
from ..rdfio import parse, serialize
from ..store import EmbeddedStore
from ..templates import TemplateError, parse_template
from .config import load_config

SAMPLE_CONFIG = """\
# gleanery configuration
base_uri = https://example.org/
prefix = ex
data_dir = ./data
endpoint.mode = embedded
auth.mode = anonymous
rate_limit.max_creates = 5
rate_limit.window_seconds = 3600
archiver.enabled = false
# clients.search.base_url = https://www.wikidata.org/w/api.php
# clients.ner.base_url = https://api.dbpedia-spotlight.org/en/annotate
# clients.vocab_meta.base_url = https://lov.linkeddata.es/dataset/lov/api/v2/term/search
# clients.archiver.base_url = https://web.archive.org
# clients.geocoder.base_url = https://nominatim.openstreetmap.org
# vcs.owner = your-github-user
# vcs.repo = your-data-repo
# vcs.branch = main
"""

SAMPLE_TEMPLATE = {
    "template_id": "resources",
    "resource_name": "resource",
    "class_iri": "http://purl.org/dc/dcmitype/Collection",
    "label": "Resource",
    "fields": [
        {
            "id": "title",
            "label": "Title",
            "widget": "literal",
            "property_iri": "http://purl.org/dc/terms/title",
            "required": True,
            "cardinality": "one",
            "disambiguate": True,
        },
        {
            "id": "description",
            "label": "Description",
            "widget": "text_long",
            "property_iri": "http://purl.org/dc/terms/description",
            "ner": True,
        },
        {
            "id": "keywords",
            "label": "Keywords",
            "widget": "literal",
            "property_iri": "http://purl.org/dc/terms/subject",
            "facet_role": "facet",
        },
    ],
}


def _loopback(host: str) -> bool:
    if host in ("localhost", ""):
        return True
    try:
        return ipaddress.ip_address(host).is_loopback
    except ValueError:
        return False


def cmd_init(args) -> int:
    root = Path(args.directory)
    root.mkdir(parents=True, exist_ok=True)
    config_path = root / "gleanery.conf"
    if config_path.exists() and not args.force:
        print(f"refusing to overwrite {config_path}", file=sys.stderr)
        return 1
    config_path.write_text(SAMPLE_CONFIG, "utf-8")
    (root / "data").mkdir(exist_ok=True)
    templates_dir = root / "data" / "templates"
    templates_dir.mkdir(parents=True, exist_ok=True)
    (root / "data" / "vocabularies").mkdir(exist_ok=True)
    sample = templates_dir / "resources.json"
    if not sample.exists():
        sample.write_text(json.dumps(SAMPLE_TEMPLATE, indent=2) + "\n", "utf-8")
    print(f"initialized {root} (edit {config_path} before serving)")
    return 0


def prepare_serve(args):
    """Everything cmd_serve does short of running the server loop."""
    config, clients = load_config(Path(args.config))
    host, _, port_text = args.bind.rpartition(":")
    port = int(port_text)
    host = host or "127.0.0.1"

    limiter_divisor = 1
    if config.auth_mode == "anonymous" and not _loopback(host):
        print(
            "warning: anonymous writes on a non-loopback bind; "
            "rate limit tightened to half of rate_limit.max_creates",
            file=sys.stderr,
        )
        limiter_divisor = 2

    from ..clients import RequestsTransport
    from .app import create_app

    spa_dir = Path(args.spa_dir) if args.spa_dir else None
    app = create_app(
        config, spa_dir=spa_dir, transport=RequestsTransport(), client_settings=clients
    )
    if limiter_divisor > 1:
        limiter = app.state.gleanery.rate_limiter
        limiter.max_creates = max(1, limiter.max_creates // limiter_divisor)
    return app, host, port


def cmd_serve(args) -> int:
    try:
        app, host, port = prepare_serve(args)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except ValueError:
        print(f"bad --bind value {args.bind!r} (want host:port)", file=sys.stderr)
        return 1

    import uvicorn

    uvicorn.run(app, host=host, port=port, log_level="info")
    return 0


def cmd_validate_template(args) -> int:
    try:
        parse_template(Path(args.file).read_text("utf-8"))
    except OSError as exc:
        print(f"cannot read {args.file}: {exc}", file=sys.stderr)
        return 1
    except TemplateError as exc:
        print(f"invalid template: {exc}", file=sys.stderr)
        return 1
    print(f"{args.file}: ok")
    return 0


def _embedded_store(args) -> EmbeddedStore:
    config, _ = load_config(Path(args.config))
    if config.endpoint_mode != "embedded":
        raise ConfigError("this command needs endpoint.mode = embedded")
    return EmbeddedStore(config.data_dir / "data")


def cmd_export(args) -> int:
    try:
        store = _embedded_store(args)
        Path(args.out).write_bytes(serialize(store.export_all(), "nquads"))
    except (GleaneryError, ConfigError, OSError) as exc:
        print(f"export failed: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


def cmd_import(args) -> int:
    try:
        store = _embedded_store(args)
        dataset = parse(Path(args.infile).read_bytes(), "nquads")
        store.import_dataset(dataset)
    except (GleaneryError, ConfigError, OSError) as exc:
        print(f"import failed: {exc}", file=sys.stderr)
        return 1
    print(f"imported {len(dataset)} quads from {args.infile}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gleanery", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_init = sub.add_parser("init", help="scaffold a new installation")
    p_init.add_argument("directory", nargs="?", default=".")
    p_init.add_argument("--force", action="store_true")
    p_init.set_defaults(func=cmd_init)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--config", default="gleanery.conf")
    p_serve.add_argument("--bind", default="127.0.0.1:8080")
    p_serve.add_argument(
        "--spa-dir", default=None, help="directory with the built web client (served at /app/)"
    )
    p_serve.set_defaults(func=cmd_serve)

    p_validate = sub.add_parser("validate-template", help="check one template file")
    p_validate.add_argument("file")
    p_validate.set_defaults(func=cmd_validate_template)

    p_export = sub.add_parser("export", help="dump the dataset as N-Quads")
    p_export.add_argument("out")
    p_export.add_argument("--config", default="gleanery.conf")
    p_export.set_defaults(func=cmd_export)

    p_import = sub.add_parser("import", help="bulk-load N-Quads into working graphs")
    p_import.add_argument("infile")
    p_import.add_argument("--config", default="gleanery.conf")
    p_import.set_defaults(func=cmd_import)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
