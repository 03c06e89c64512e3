"""Experiment description: geometry, fading, and the full scenario record."""

from dataclasses import dataclass, field, replace

from .ris import Mode, Architecture


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


def dbm_to_watts(dbm):
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class Geometry:
    """Deployment geometry and large-scale propagation parameters.

    Defaults: BS 50 m from the surface, users on a 2.5 m ring around it,
    -30 dB attenuation at the 1 m reference distance with exponent 2.2.
    """

    d_bi: float = 50.0
    d_iu: float = 2.5
    d0: float = 1.0
    zeta0_db: float = -30.0
    pathloss_exp: float = 2.2

    def __post_init__(self):
        if self.d_bi <= 0 or self.d_iu <= 0 or self.d0 <= 0:
            raise ValueError("distances must be positive")


@dataclass(frozen=True)
class FadingSpec:
    """Small-scale fading model; kappa factors are linear and ignored for Rayleigh."""

    kind: str = "rayleigh"
    kappa_bi: float = 0.0
    kappa_iu: float = 0.0

    def __post_init__(self):
        if self.kind not in ("rayleigh", "rician"):
            raise ValueError(f"unknown fading kind {self.kind!r}")
        if self.kappa_bi < 0 or self.kappa_iu < 0:
            raise ValueError("Rician factors must be non-negative")


@dataclass(frozen=True)
class Scenario:
    """Everything needed to reproduce one optimization run.

    Users are ordered reflective side first: indices 0..k_r-1 are reflective,
    k_r..k-1 transmissive.
    """

    n: int
    k_r: int
    k_t: int
    m: int
    mode: Mode
    arch: Architecture
    power: float
    noise: float
    geometry: Geometry = field(default_factory=Geometry)
    fading: FadingSpec = field(default_factory=FadingSpec)
    seed: int = 0
    max_outer: int = 500
    rel_tol: float = 1e-4
    sc_algorithm: str = "efficient"

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("antenna and cell counts must be positive")
        if self.k_r < 0 or self.k_t < 0 or self.k_r + self.k_t < 1:
            raise ValueError("need at least one user")
        if self.power <= 0 or self.noise <= 0:
            raise ValueError("power and noise must be positive")
        if self.rel_tol <= 0 or self.max_outer < 1:
            raise ValueError("rel_tol must be positive and max_outer at least 1")
        if self.sc_algorithm not in ("efficient", "manifold"):
            raise ValueError(f"unknown sc_algorithm {self.sc_algorithm!r}")
        self.arch.group_count(self.m)  # raises if groups do not divide m

    @property
    def k(self):
        return self.k_r + self.k_t

    @property
    def sides(self):
        return ("reflective",) * self.k_r + ("transmissive",) * self.k_t

    def with_seed(self, seed):
        return replace(self, seed=seed)
