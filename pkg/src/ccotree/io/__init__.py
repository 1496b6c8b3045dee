"""Configuration, mask, tree CSV and SVG file formats."""

from .config import RunConfig, load_config, parse_config, parse_override
from .mask import load_mask, write_mask
from .svg import export_svg, render_svg
from .treefile import HEADER, format_tree, read_tree, write_tree

__all__ = [
    "HEADER",
    "RunConfig",
    "export_svg",
    "format_tree",
    "load_config",
    "load_mask",
    "parse_config",
    "parse_override",
    "read_tree",
    "render_svg",
    "write_mask",
    "write_tree",
]
