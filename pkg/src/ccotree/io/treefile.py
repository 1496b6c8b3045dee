"""Tree CSV serialization.

Rows are written in preorder (root first, left subtree before right), so
ids are dense and every parent precedes its children. Left is the
continuation of the split segment, right is the leaf attached by that
split. Numbers use 17 significant digits, which round-trips doubles.
"""

import math
from pathlib import Path

from ..errors import (
    ArityError,
    ConsistencyError,
    DanglingParentError,
    MalformedRowError,
    MultipleRootsError,
)
from ..params import CcoParams
from ..tree import VesselTree

HEADER = "id,parent,px,py,pz,dx,dy,dz,radius,flow,beta"
REL_TOL = 1e-9


def _num(x):
    return format(float(x), ".17g")


def _xyz(p):
    c = [float(v) for v in p]
    return c + [0.0] * (3 - len(c))


def format_tree(tree):
    tree._require_radii()
    order = tree.preorder()
    new_id = {old: new for new, old in enumerate(order)}
    lines = [HEADER]
    for old in order:
        parent = tree.parent[old]
        cells = [str(new_id[old]), str(new_id[parent] if parent >= 0 else -1)]
        cells += [_num(v) for v in _xyz(tree._prox[old]) + _xyz(tree._dist[old])]
        cells += [_num(tree._radius[old]), _num(tree.flow(old)), _num(tree.beta[old])]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def write_tree(tree, path):
    Path(path).write_bytes(format_tree(tree).encode("ascii"))


def _close(a, b):
    return abs(a - b) <= REL_TOL * max(abs(a), abs(b))


def _parse_rows(text):
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0].rstrip("\r") != HEADER:
        raise MalformedRowError(f"expected header {HEADER!r}", line=1)
    rows = []
    for n, line in enumerate(lines[1:], start=2):
        cells = line.rstrip("\r").split(",")
        if len(cells) != 11:
            raise MalformedRowError(f"expected 11 fields, got {len(cells)}", line=n)
        try:
            ident, parent = int(cells[0]), int(cells[1])
            vals = [float(c) for c in cells[2:]]
        except ValueError:
            raise MalformedRowError("non-numeric field", line=n) from None
        if not all(math.isfinite(v) for v in vals):
            raise MalformedRowError("non-finite number", line=n)
        if ident != len(rows):
            raise MalformedRowError(f"id {ident} out of sequence, expected {len(rows)}", line=n)
        rows.append((parent, vals))
    if not rows:
        raise MalformedRowError("no segments", line=2)
    return rows


def read_tree(path, params=None, dim=None):
    """Rebuild a tree and check its stored beta and flow against recomputation.

    ``params`` defaults to the standard physiology with ``q_perf`` taken
    from the root row; ``dim`` defaults to 3 iff any z coordinate is
    nonzero. Stored betas and radii are kept verbatim, so writing the
    result reproduces the file byte for byte.
    """
    rows = _parse_rows(Path(path).read_text(encoding="ascii", errors="replace"))
    roots = [i for i, (p, _) in enumerate(rows) if p == -1]
    if len(roots) > 1:
        raise MultipleRootsError(f"{len(roots)} rows have parent -1", line=roots[1] + 2)
    children = [[] for _ in rows]
    for i, (p, _) in enumerate(rows):
        if p == -1 and i == 0:
            continue
        if not 0 <= p < i:
            raise DanglingParentError(f"parent {p} does not precede segment {i}", line=i + 2)
        children[p].append(i)
    for i, c in enumerate(children):
        if len(c) not in (0, 2):
            raise ArityError(f"segment {i} has {len(c)} children", line=i + 2)

    if dim is None:
        has_z = any(v[2] != 0.0 or v[5] != 0.0 for _, v in rows)
        dim = 3 if has_z else 2
    elif dim == 2 and any(v[2] != 0.0 or v[5] != 0.0 for _, v in rows):
        raise MalformedRowError("nonzero z coordinate in a 2D tree")
    if params is None:
        params = CcoParams(q_perf=rows[0][1][7], dim=dim)

    tree = VesselTree(params, dim=dim)
    for i, (p, v) in enumerate(rows):
        tree._append(v[0:dim], v[3:3 + dim], p)
    tree.root = 0
    for i, c in enumerate(children):
        if c:
            tree.left[i], tree.right[i] = c
            if tree._prox[c[0]].tolist() != tree._dist[i].tolist() or \
                    tree._prox[c[1]].tolist() != tree._dist[i].tolist():
                raise ConsistencyError(
                    f"children of segment {i} do not start at its distal point", line=i + 2)
    for i in range(len(rows)):
        if tree.length[i] == 0.0:
            raise MalformedRowError(f"segment {i} has zero length", line=i + 2)
    tree.recompute_all()

    for i, (_, v) in enumerate(rows):
        radius, flow, beta = v[6], v[7], v[8]
        if not radius > 0:
            raise MalformedRowError("radius must be positive", line=i + 2)
        if not _close(beta, tree.beta[i]):
            raise ConsistencyError(
                f"segment {i}: stored beta {beta!r} but geometry gives {tree.beta[i]!r}",
                line=i + 2)
        if not _close(flow, tree.flow(i)):
            raise ConsistencyError(
                f"segment {i}: stored flow {flow!r} but terminal count gives {tree.flow(i)!r}",
                line=i + 2)
        p = rows[i][0]
        if p >= 0 and not _close(radius, beta * rows[p][1][6]):
            raise ConsistencyError(
                f"segment {i}: radius is not beta times the parent radius", line=i + 2)
    for i, (_, v) in enumerate(rows):
        tree.beta[i] = v[8]
        tree._radius[i] = v[6]
    tree.radii_realized = True
    return tree
