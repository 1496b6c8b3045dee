"""2D SVG rendering of a tree over its domain outline.

Coordinates stay in domain units; a group transform flips y so the picture
is upright. Masks are drawn as one rectangle per horizontal run of set
voxels.
"""

from pathlib import Path

import numpy as np

from ..domain import BallDomain, BoxDomain, MaskDomain
from ..errors import UsageError

PADDING = 0.05
DOMAIN_STYLE = 'fill="#f3e9e4" stroke="#b08878"'


def _n(x):
    return format(float(x), ".17g")


def _mask_runs(domain):
    occ = domain.occupancy
    (sx, sy), (ox, oy) = domain.spacing, domain.origin
    for j in range(occ.shape[1]):
        col = np.concatenate([[False], occ[:, j], [False]]).astype(np.int8)
        edges = np.flatnonzero(np.diff(col))
        for a, b in zip(edges[::2], edges[1::2]):
            yield ox + a * sx, oy + j * sy, (b - a) * sx, sy


def _outline(domain):
    if isinstance(domain, BallDomain):
        cx, cy = domain.center
        return [f'<circle cx="{_n(cx)}" cy="{_n(cy)}" r="{_n(domain.radius)}" {DOMAIN_STYLE}/>']
    if isinstance(domain, BoxDomain):
        (x0, y0), (x1, y1) = domain.bounds()
        return [f'<rect x="{_n(x0)}" y="{_n(y0)}" width="{_n(x1 - x0)}" '
                f'height="{_n(y1 - y0)}" {DOMAIN_STYLE}/>']
    if isinstance(domain, MaskDomain):
        rects = [f'<rect x="{_n(x)}" y="{_n(y)}" width="{_n(w)}" height="{_n(h)}"/>'
                 for x, y, w, h in _mask_runs(domain)]
        return ['<g fill="#f3e9e4" stroke="none">'] + rects + ["</g>"]
    return []


def render_svg(tree, domain=None):
    if tree.dim != 2:
        raise UsageError("SVG export needs a 2D tree")
    tree._require_radii()
    if domain is not None:
        lo, hi = domain.bounds()
    else:
        pts = np.vstack([tree.proximal_points, tree.distal_points])
        lo, hi = pts.min(axis=0), pts.max(axis=0)
    pad = PADDING * (hi - lo)
    lo, hi = lo - pad, hi + pad
    w, h = hi - lo
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'viewBox="{_n(lo[0])} {_n(lo[1])} {_n(w)} {_n(h)}">',
        f'<g transform="matrix(1 0 0 -1 0 {_n(lo[1] + hi[1])})">',
    ]
    if domain is not None:
        out += _outline(domain)
    out.append('<g stroke="#a01818" stroke-linecap="round">')
    for i in tree.preorder():
        (x1, y1), (x2, y2) = tree._prox[i], tree._dist[i]
        out.append(f'<line x1="{_n(x1)}" y1="{_n(y1)}" x2="{_n(x2)}" y2="{_n(y2)}" '
                   f'stroke-width="{_n(2.0 * tree._radius[i])}"/>')
    out += ["</g>", "</g>", "</svg>"]
    return "\n".join(out) + "\n"


def export_svg(tree, domain, path):
    Path(path).write_bytes(render_svg(tree, domain).encode("utf-8"))
