"""Physiological and algorithmic parameters of a growth run."""

import math
from dataclasses import dataclass, fields, replace

from .errors import ConfigError


@dataclass(frozen=True)
class CcoParams:
    """All constants of a run, in SI units.

    Defaults are standard human-arterial values from the CCO literature.
    """

    k_term: int = 100
    q_perf: float = 8.33e-6       # m^3/s
    p_perf: float = 13_332.0      # Pa
    p_term: float = 8_000.0       # Pa
    mu: float = 3.6e-3            # Pa.s
    gamma: float = 3.0
    n_con: int = 20
    eta: float = 1.0
    seed: int = 0
    tol: float = 1e-6
    max_iter: int = 100
    dim: int = 2
    clearance_margin: float = 0.01
    discard_cap: int = 1000
    relax_factor: float = 0.9
    relax_every: int = 10

    def __post_init__(self):
        checks = [
            ("k_term", self.k_term >= 1, "must be >= 1"),
            ("q_perf", self.q_perf > 0, "must be > 0"),
            ("p_perf", self.p_perf > self.p_term, "must exceed p_term"),
            ("mu", self.mu > 0, "must be > 0"),
            ("gamma", self.gamma >= 1, "must be >= 1"),
            ("n_con", self.n_con >= 1, "must be >= 1"),
            ("eta", self.eta > 0, "must be > 0"),
            ("seed", 0 <= self.seed < 2**64, "must fit in 64 unsigned bits"),
            ("tol", self.tol > 0, "must be > 0"),
            ("max_iter", self.max_iter >= 1, "must be >= 1"),
            ("dim", self.dim in (2, 3), "must be 2 or 3"),
            ("clearance_margin", self.clearance_margin >= 0, "must be >= 0"),
            ("discard_cap", self.discard_cap >= 1, "must be >= 1"),
            ("relax_factor", 0 < self.relax_factor <= 1, "must be in (0, 1]"),
            ("relax_every", self.relax_every >= 1, "must be >= 1"),
        ]
        for key, ok, msg in checks:
            if not ok:
                raise ConfigError(key, f"{msg} (got {getattr(self, key)!r})")

    @property
    def hydraulic_constant(self):
        """8*mu/pi: Poiseuille resistance per unit length for unit radius."""
        return 8.0 * self.mu / math.pi

    @property
    def pressure_drop(self):
        return self.p_perf - self.p_term

    def with_(self, **changes):
        return replace(self, **changes)


PARAM_FIELDS = {f.name: f.type for f in fields(CcoParams)}
