"""Voxel mask files.

A mask is a JSON header (``.maskmeta``) plus a data file. The header holds
``dim``, ``nx``, ``ny``, ``nz`` (1 or absent in 2D), ``spacing`` and
``origin``. The data file is either raw bytes (``nx*ny*nz`` of them, x
fastest, then y, then z; nonzero = inside) or, in 2D, a binary PGM (P5)
image whose row j holds voxels with y index j.
"""

import json
from pathlib import Path

import numpy as np
from PIL import Image

from ..domain import MaskDomain
from ..errors import InputError


def read_maskmeta(path):
    try:
        meta = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: not valid JSON ({e})") from None
    if not isinstance(meta, dict):
        raise InputError(f"{path}: header must be a JSON object")
    dim = meta.get("dim")
    if dim not in (2, 3):
        raise InputError(f"{path}: dim must be 2 or 3")
    for key in ("nx", "ny") + (("nz",) if dim == 3 else ()):
        v = meta.get(key)
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise InputError(f"{path}: {key} must be a positive integer")
    if dim == 2 and meta.get("nz", 1) != 1:
        raise InputError(f"{path}: a 2D mask needs nz = 1")
    for key in ("spacing", "origin"):
        v = meta.get(key)
        if (not isinstance(v, list) or len(v) != dim
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)):
            raise InputError(f"{path}: {key} must be a list of {dim} numbers")
    return meta


def _grid_shape(meta):
    if meta["dim"] == 2:
        return meta["nx"], meta["ny"]
    return meta["nx"], meta["ny"], meta["nz"]


def read_mask_data(meta, data_path):
    """Occupancy array indexed [x, y(, z)]."""
    data_path = Path(data_path)
    shape = _grid_shape(meta)
    if data_path.suffix.lower() == ".pgm":
        if meta["dim"] != 2:
            raise InputError(f"{data_path}: PGM masks are 2D only")
        with Image.open(data_path) as img:
            if img.format != "PPM" or img.mode not in ("L", "1", "I"):
                raise InputError(f"{data_path}: expected a greyscale binary PGM")
            rows = np.asarray(img)
        if rows.shape != (shape[1], shape[0]):
            raise InputError(
                f"{data_path}: image is {rows.shape[1]}x{rows.shape[0]}, "
                f"header says {shape[0]}x{shape[1]}")
        return rows.T != 0
    raw = data_path.read_bytes()
    expected = int(np.prod(shape))
    if len(raw) != expected:
        raise InputError(f"{data_path}: {len(raw)} bytes, expected {expected}")
    flat = np.frombuffer(raw, dtype=np.uint8)
    return flat.reshape(shape[::-1]).T != 0


def load_mask(meta_path, data_path):
    meta = read_maskmeta(meta_path)
    occ = read_mask_data(meta, data_path)
    if not occ.any():
        raise InputError(f"{data_path}: mask has no voxel set")
    try:
        return MaskDomain(occ, meta["spacing"], meta["origin"])
    except ValueError as e:
        raise InputError(f"{meta_path}: {e}") from None


def write_mask(occupancy, spacing, origin, meta_path, data_path):
    """Write a mask pair; a ``.pgm`` data path selects the 2D image format."""
    occ = np.asarray(occupancy).astype(bool)
    dim = occ.ndim
    meta = {"dim": dim, "nx": occ.shape[0], "ny": occ.shape[1],
            "nz": occ.shape[2] if dim == 3 else 1,
            "spacing": [float(s) for s in spacing],
            "origin": [float(o) for o in origin]}
    Path(meta_path).write_text(json.dumps(meta) + "\n", encoding="utf-8")
    data_path = Path(data_path)
    if data_path.suffix.lower() == ".pgm":
        Image.fromarray((occ.T * 255).astype(np.uint8), mode="L").save(data_path)
    else:
        data_path.write_bytes(occ.astype(np.uint8).T.tobytes())
