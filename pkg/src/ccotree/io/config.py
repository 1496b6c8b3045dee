"""Run configuration: flat ``key = value`` text.

One entry per line, ``#`` starts a comment. Values are JSON literals:
numbers, quoted strings, ``true``/``false`` and lists. Unknown keys,
duplicates, wrong types and invariant violations raise ConfigError naming
the key. Relative paths resolve against the config file's directory.

Keys besides the CcoParams fields:

    domain.kind     "disk2d" | "sphere3d" | "box" | "voxel-mask"   (required)
    domain.center   ball center, defaults to the origin
    domain.radius   ball radius
    domain.lo/hi    box corners
    domain.meta     mask header file (.maskmeta)
    domain.data     mask data file (.mask or .pgm)
    root            desired root position (default: middle of the lower-y face)
    out             tree CSV path (default "tree.csv")
    svg             also write <out stem>.svg (2D only)
    log             evaluation log path
    seed_tree       tree CSV to continue growing from
    threads         evaluation workers
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..domain import BallDomain, BoxDomain
from ..errors import ConfigError
from ..params import PARAM_FIELDS, CcoParams
from .mask import load_mask, read_maskmeta

DOMAIN_KINDS = {"disk2d": 2, "sphere3d": 3, "box": None, "voxel-mask": None}

# key -> (checker, description); CcoParams fields are added below
_EXTRA_KEYS = {
    "domain.kind": ("str", "a string"),
    "domain.center": ("vec", "a list of numbers"),
    "domain.radius": ("num", "a number"),
    "domain.lo": ("vec", "a list of numbers"),
    "domain.hi": ("vec", "a list of numbers"),
    "domain.meta": ("str", "a string"),
    "domain.data": ("str", "a string"),
    "root": ("vec", "a list of numbers"),
    "out": ("str", "a string"),
    "svg": ("bool", "true or false"),
    "log": ("str", "a string"),
    "seed_tree": ("str", "a string"),
    "threads": ("int", "an integer"),
}
KEYS = {**{k: ("int", "an integer") if t in (int, "int") else ("num", "a number")
           for k, t in PARAM_FIELDS.items()}, **_EXTRA_KEYS}


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


_CHECKS = {
    "int": lambda v: isinstance(v, int) and not isinstance(v, bool),
    "num": _is_num,
    "str": lambda v: isinstance(v, str),
    "bool": lambda v: isinstance(v, bool),
    "vec": lambda v: isinstance(v, list) and len(v) > 0 and all(_is_num(x) for x in v),
}


@dataclass
class RunConfig:
    params: CcoParams
    domain: dict
    root: list | None = None
    out: Path = Path("tree.csv")
    svg: bool = False
    log: Path | None = None
    seed_tree: Path | None = None
    threads: int = 1
    raw: dict = field(default_factory=dict)

    def build_domain(self):
        d = self.domain
        kind = d["kind"]
        if kind in ("disk2d", "sphere3d"):
            dim = DOMAIN_KINDS[kind]
            return BallDomain(d.get("center", [0.0] * dim), d["radius"])
        if kind == "box":
            return BoxDomain(d["lo"], d["hi"])
        return load_mask(d["meta"], d["data"])

    @property
    def svg_path(self):
        return self.out.with_suffix(".svg")


def _parse_value(key, text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        raise ConfigError(key, f"cannot parse value {text!r}") from None


def parse_lines(text):
    """Raw key -> value dict; syntax errors name the key (or the line)."""
    raw = {}
    for n, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        if "=" not in s:
            raise ConfigError(f"line {n}", f"expected 'key = value', got {s!r}")
        key, value = (part.strip() for part in s.split("=", 1))
        if "#" in value and not value.startswith('"'):
            value = value.split("#", 1)[0].strip()
        if key in raw:
            raise ConfigError(key, "given twice")
        raw[key] = _parse_value(key, value)
    return raw


def parse_override(item):
    """``key=value`` from the command line; a bare word is taken as a string."""
    if "=" not in item:
        raise ConfigError(item, "override must look like key=value")
    key, value = (part.strip() for part in item.split("=", 1))
    try:
        return key, json.loads(value)
    except json.JSONDecodeError:
        return key, value


def _resolve(base_dir, value):
    p = Path(value)
    return p if p.is_absolute() else Path(base_dir) / p


def _require_file(key, path):
    if not path.is_file():
        raise ConfigError(key, f"file not found: {path}")
    return path


def build_config(raw, base_dir="."):
    for key, value in raw.items():
        if key not in KEYS:
            raise ConfigError(key, "unknown key")
        check, what = KEYS[key]
        if not _CHECKS[check](value):
            raise ConfigError(key, f"expected {what}, got {value!r}")
    for key in ("k_term", "domain.kind"):
        if key not in raw:
            raise ConfigError(key, "required key missing")

    kind = raw["domain.kind"]
    if kind not in DOMAIN_KINDS:
        raise ConfigError("domain.kind", f"unknown kind {kind!r}")
    domain = {"kind": kind}
    allowed = {"disk2d": ("center", "radius"), "sphere3d": ("center", "radius"),
               "box": ("lo", "hi"), "voxel-mask": ("meta", "data")}[kind]
    for key in raw:
        if key.startswith("domain.") and key != "domain.kind" \
                and key.split(".", 1)[1] not in allowed:
            raise ConfigError(key, f"not used by domain.kind = {kind!r}")
    required = {"disk2d": ("radius",), "sphere3d": ("radius",), "box": ("lo", "hi"),
                "voxel-mask": ("meta", "data")}[kind]
    for name in required:
        if f"domain.{name}" not in raw:
            raise ConfigError(f"domain.{name}", f"required for domain.kind = {kind!r}")
    for name in allowed:
        if f"domain.{name}" in raw:
            domain[name] = raw[f"domain.{name}"]

    if kind in ("disk2d", "sphere3d"):
        dim = DOMAIN_KINDS[kind]
        if "center" in domain and len(domain["center"]) != dim:
            raise ConfigError("domain.center", f"needs {dim} coordinates")
        if not domain["radius"] > 0:
            raise ConfigError("domain.radius", "must be > 0")
    elif kind == "box":
        dim = len(domain["lo"])
        if dim not in (2, 3) or len(domain["hi"]) != dim:
            raise ConfigError("domain.hi", "box corners need 2 or 3 matching coordinates")
        if not all(h > l for l, h in zip(domain["lo"], domain["hi"])):
            raise ConfigError("domain.hi", "must exceed domain.lo on every axis")
    else:
        domain["meta"] = _require_file("domain.meta", _resolve(base_dir, domain["meta"]))
        domain["data"] = _require_file("domain.data", _resolve(base_dir, domain["data"]))
        try:
            dim = read_maskmeta(domain["meta"])["dim"]
        except Exception as e:
            raise ConfigError("domain.meta", str(e)) from None

    if "dim" in raw and raw["dim"] != dim:
        raise ConfigError("dim", f"{raw['dim']} contradicts the {dim}D domain")
    values = {k: raw[k] for k in PARAM_FIELDS if k in raw}
    values["dim"] = dim
    values = {k: float(v) if KEYS[k][0] == "num" else v for k, v in values.items()}
    params = CcoParams(**values)

    cfg = RunConfig(params=params, domain=domain, raw=dict(raw))
    if "root" in raw:
        if len(raw["root"]) != dim:
            raise ConfigError("root", f"needs {dim} coordinates")
        cfg.root = [float(x) for x in raw["root"]]
    cfg.out = _resolve(base_dir, raw.get("out", "tree.csv"))
    cfg.svg = raw.get("svg", False)
    if cfg.svg and dim != 2:
        raise ConfigError("svg", "SVG export is 2D only")
    if "log" in raw:
        cfg.log = _resolve(base_dir, raw["log"])
    if "seed_tree" in raw:
        cfg.seed_tree = _require_file("seed_tree", _resolve(base_dir, raw["seed_tree"]))
    cfg.threads = raw.get("threads", 1)
    if cfg.threads < 1:
        raise ConfigError("threads", "must be >= 1")
    return cfg


def parse_config(text, base_dir=".", overrides=()):
    """Parse config text; ``overrides`` (key, value) pairs win over the file."""
    raw = parse_lines(text)
    for key, value in overrides:
        raw[key] = value
    return build_config(raw, base_dir)


def load_config(path, overrides=()):
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), path.parent, overrides)
