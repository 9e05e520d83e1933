"""Jinja2 environment for the SVG and scenario-file templates."""

import json as _json
from pathlib import Path

from jinja2 import Environment, FileSystemLoader, StrictUndefined, select_autoescape

TEMPLATES_DIR = Path(__file__).resolve().parent.parent / "templates"

templates = Environment(
    loader=FileSystemLoader(TEMPLATES_DIR),
    # Markup is escaped; TOML output is not
    autoescape=select_autoescape(enabled_extensions=("svg.j2",), default=False),
    undefined=StrictUndefined,
    trim_blocks=True,
    lstrip_blocks=True,
    keep_trailing_newline=True,
)
# JSON strings are valid TOML basic strings
templates.filters["tojson"] = lambda v: _json.dumps(v, ensure_ascii=False)
# Compact coordinates for drawing; exact values use repr
templates.filters["num"] = lambda v: f"{float(v):.6g}"
templates.filters["exact"] = lambda v: repr(float(v))
