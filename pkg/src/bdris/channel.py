"""Reproducible channel realizations: pathloss times small-scale fading.

Only sector-1 links exist in this geometry: the BS-to-surface matrix G and
one surface-to-user vector h_k per user. Each link draws from its own named
sub-stream, so a realization is a pure function of (scenario, seed) and
adding users never perturbs existing channels.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .rng import substream, STREAM_CHANNEL

_MAGIC = b"BDRC"
_VERSION = 1
_HEADER = struct.Struct("<4sIQIIII")


class MalformedChannelFileError(ValueError):
    """Raised when a channel file fails header or size validation."""


@dataclass(eq=False)
class ChannelSet:
    """One channel realization: g is M x N, h holds K vectors of length M."""

    g: np.ndarray
    h: list
    sides: tuple
    seed: int = 0

    def __post_init__(self):
        self.g = np.asarray(self.g, dtype=np.complex128)
        self.h = [np.asarray(v, dtype=np.complex128) for v in self.h]
        self.sides = tuple(self.sides)
        if len(self.h) != len(self.sides):
            raise ValueError("one side label per user is required")
        m = self.g.shape[0]
        if any(v.shape != (m,) for v in self.h):
            raise ValueError("every user vector must have length equal to the cell count")

    @property
    def m(self):
        return self.g.shape[0]

    @property
    def n(self):
        return self.g.shape[1]

    @property
    def k(self):
        return len(self.h)

    def restrict(self, users):
        """View of the same realization keeping only the given user indices."""
        return ChannelSet(self.g, [self.h[k] for k in users],
                          tuple(self.sides[k] for k in users), self.seed)

    def equals(self, other):
        return (self.sides == other.sides and self.seed == other.seed
                and np.array_equal(self.g, other.g)
                and all(np.array_equal(a, b) for a, b in zip(self.h, other.h)))


def pathloss(d, d0, zeta0_db, exponent):
    """Distance-dependent large-scale gain: zeta0_linear * (d/d0)^(-exponent)."""
    if d <= 0 or d0 <= 0:
        raise ValueError("distances must be positive")
    return 10.0 ** (zeta0_db / 10.0) * (d / d0) ** (-exponent)


def steering(n, azimuth):
    """Unit-modulus steering vector of a half-wavelength ULA."""
    return np.exp(1j * np.pi * np.arange(n) * np.sin(azimuth))


def complex_gaussian(rng, shape):
    """I.i.d. circularly symmetric complex normal entries with unit variance."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def rician_sample(rng, pl, kappa, los):
    """Draw sqrt(pl) * (sqrt(kappa/(1+kappa)) * los + sqrt(1/(1+kappa)) * nlos).

    With kappa = 0 this is exactly the Rayleigh draw, using the same
    generator path.
    """
    nlos = complex_gaussian(rng, np.shape(los))
    return np.sqrt(pl) * (np.sqrt(kappa / (1.0 + kappa)) * los
                          + np.sqrt(1.0 / (1.0 + kappa)) * nlos)


def generate_channels(scenario, seed):
    """One channel realization for ``scenario`` from the given seed.

    Rayleigh entries are i.i.d. CN(0, PL). Rician draws mix a unit-modulus
    line-of-sight term with the same scattered component: a random-phase
    full-rank matrix for the BS-to-surface link (drawn once per realization,
    so the multiuser pipe keeps its spatial degrees of freedom), and a ULA
    steering vector at a per-user azimuth for each surface-to-user link.
    """
    geom = scenario.geometry
    fad = scenario.fading
    pl_bi = pathloss(geom.d_bi, geom.d0, geom.zeta0_db, geom.pathloss_exp)
    pl_iu = pathloss(geom.d_iu, geom.d0, geom.zeta0_db, geom.pathloss_exp)
    kap_bi = fad.kappa_bi if fad.kind == "rician" else 0.0
    kap_iu = fad.kappa_iu if fad.kind == "rician" else 0.0

    rng = substream(seed, STREAM_CHANNEL, 0)
    g_los = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, (scenario.m, scenario.n)))
    g = rician_sample(rng, pl_bi, kap_bi, g_los)

    h = []
    for k in range(scenario.k):
        rng = substream(seed, STREAM_CHANNEL, 1 + k)
        azimuth = rng.uniform(-np.pi / 2, np.pi / 2)
        h.append(rician_sample(rng, pl_iu, kap_iu, steering(scenario.m, azimuth)))
    return ChannelSet(g, h, scenario.sides, seed=int(seed))


def _pack(a):
    return np.ascontiguousarray(a, dtype="<c16").tobytes()


def save_channels(cs, path):
    """Write a realization to a self-describing binary file (bit exact)."""
    k_r = sum(1 for s in cs.sides if s == "reflective")
    if cs.sides != ("reflective",) * k_r + ("transmissive",) * (cs.k - k_r):
        raise ValueError("sides must be ordered reflective first")
    header = _HEADER.pack(_MAGIC, _VERSION, cs.seed & (1 << 64) - 1,
                          cs.m, cs.n, cs.k, k_r)
    with open(path, "wb") as f:
        f.write(header)
        f.write(_pack(cs.g))
        for v in cs.h:
            f.write(_pack(v))


def load_channels(path):
    """Read a realization written by :func:`save_channels`."""
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < _HEADER.size:
        raise MalformedChannelFileError("file shorter than header")
    magic, version, seed, m, n, k, k_r = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise MalformedChannelFileError(f"bad magic {magic!r}")
    if version != _VERSION:
        raise MalformedChannelFileError(f"unsupported version {version}")
    if k_r > k or m < 1 or n < 1 or k < 1:
        raise MalformedChannelFileError("inconsistent dimensions in header")
    expected = _HEADER.size + 16 * (m * n + k * m)
    if len(raw) != expected:
        raise MalformedChannelFileError(
            f"file size {len(raw)} does not match declared dimensions (expected {expected})")
    body = memoryview(raw)[_HEADER.size:]
    g = np.frombuffer(body[:16 * m * n], dtype="<c16").reshape(m, n).copy()
    h = []
    off = 16 * m * n
    for _ in range(k):
        h.append(np.frombuffer(body[off:off + 16 * m], dtype="<c16").copy())
        off += 16 * m
    sides = ("reflective",) * k_r + ("transmissive",) * (k - k_r)
    return ChannelSet(g, h, sides, seed=seed)
