"""Scattering-matrix model of a beyond-diagonal RIS.

An M-cell surface exposes a pair of M x M matrices (phi_t, phi_r) acting on
transmissive- and reflective-side users. The mode (reflective, transmissive,
hybrid) fixes how the lossless power budget is split between the pair, and
the architecture (cell-wise single-, group-, or fully-connected) fixes the
sparsity structure: diagonal, block diagonal with G blocks, or full. The
nine mode/architecture combinations share one validation routine.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .numerics import herm, as_complex, principal_inverse_sqrt


class Mode(str, Enum):
    REFLECTIVE = "reflective"
    TRANSMISSIVE = "transmissive"
    HYBRID = "hybrid"

    @property
    def sides(self):
        """Active scattering sides, as a subset of ("t", "r")."""
        if self is Mode.REFLECTIVE:
            return ("r",)
        if self is Mode.TRANSMISSIVE:
            return ("t",)
        return ("t", "r")


class ArchKind(str, Enum):
    CW_SC = "cw_sc"
    CW_GC = "cw_gc"
    CW_FC = "cw_fc"


@dataclass(frozen=True)
class Architecture:
    """Inter-cell circuit topology: single-, group-, or fully-connected."""

    kind: ArchKind
    groups: int | None = None

    def __post_init__(self):
        if self.kind is ArchKind.CW_GC:
            if self.groups is None or self.groups < 1:
                raise ValueError("cw_gc architecture requires a positive group count")
        elif self.groups is not None:
            raise ValueError(f"{self.kind.value} does not take a group count")

    @classmethod
    def single(cls):
        return cls(ArchKind.CW_SC)

    @classmethod
    def group(cls, groups):
        return cls(ArchKind.CW_GC, groups)

    @classmethod
    def full(cls):
        return cls(ArchKind.CW_FC)

    def group_count(self, m):
        """Number of independent blocks for an M-cell surface."""
        if self.kind is ArchKind.CW_SC:
            return m
        if self.kind is ArchKind.CW_FC:
            return 1
        if m % self.groups != 0:
            raise ValueError(f"group count {self.groups} does not divide cell count {m}")
        return self.groups

    def block_size(self, m):
        return m // self.group_count(m)

    @property
    def label(self):
        return self.kind.value


class DegenerateInputError(ValueError):
    """Raised when a projection target has no usable active block."""


@dataclass(frozen=True, eq=False)
class BdRisState:
    """One mode/architecture case together with its (phi_t, phi_r) pair."""

    mode: Mode
    arch: Architecture
    phi_t: np.ndarray
    phi_r: np.ndarray

    def __post_init__(self):
        pt = as_complex(self.phi_t)
        pr = as_complex(self.phi_r)
        if pt.shape != pr.shape or pt.ndim != 2 or pt.shape[0] != pt.shape[1]:
            raise ValueError(f"phi_t/phi_r must be equal square matrices, got {pt.shape} and {pr.shape}")
        object.__setattr__(self, "phi_t", pt)
        object.__setattr__(self, "phi_r", pr)

    @property
    def m(self):
        return self.phi_t.shape[0]

    def phi(self, side):
        return self.phi_t if side == "t" else self.phi_r


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    residual: float
    reason: str = ""

    def __bool__(self):
        return self.ok


def structure_mask(m, arch):
    """Boolean mask of positions a given architecture may populate."""
    g = arch.group_count(m)
    mb = m // g
    mask = np.zeros((m, m), dtype=bool)
    for i in range(g):
        mask[i * mb:(i + 1) * mb, i * mb:(i + 1) * mb] = True
    return mask


def _blocks(a, groups):
    mb = a.shape[0] // groups
    for g in range(groups):
        yield a[g * mb:(g + 1) * mb, g * mb:(g + 1) * mb]


def validate(state, tol=1e-8):
    """Check a state against its mode/architecture constraint set.

    Structural zeros are checked exactly; the power-splitting equality is
    checked to ``tol`` in Frobenius norm per block. Returns a report whose
    ``residual`` is the worst block residual encountered.
    """
    m = state.m
    groups = state.arch.group_count(m)
    mask = structure_mask(m, state.arch)
    active = state.mode.sides

    for side in ("t", "r"):
        phi = state.phi(side)
        if side not in active:
            if np.any(phi != 0):
                return ValidationReport(False, float(np.abs(phi).max()),
                                        f"phi_{side} must be exactly zero in {state.mode.value} mode")
        elif np.any(phi[~mask] != 0):
            worst = float(np.abs(phi[~mask]).max())
            return ValidationReport(False, worst,
                                    f"phi_{side} has non-zero entries outside the {state.arch.label} structure")

    eye = np.eye(m // groups)
    worst = 0.0
    for g, blocks in enumerate(zip(*(_blocks(state.phi(s), groups) for s in active))):
        gram = sum(herm(b) @ b for b in blocks)
        res = float(np.linalg.norm(gram - eye))
        worst = max(worst, res)
        if res > tol:
            return ValidationReport(False, res,
                                    f"block {g} power-splitting residual {res:.3e} exceeds {tol:.1e}")
    return ValidationReport(True, worst)


def validate_lossless_partition(phi_r, phi_t, tol=1e-8):
    """Check that the stacked [phi_r; phi_t] has orthonormal columns within tol.

    This is the condition for the pair to form the first block column of a
    unitary scattering matrix of a lossless 2M-port network.
    """
    phi_r = as_complex(phi_r)
    phi_t = as_complex(phi_t)
    if phi_r.shape != phi_t.shape:
        raise ValueError("phi_r and phi_t must have equal shapes")
    gram = herm(phi_r) @ phi_r + herm(phi_t) @ phi_t
    return bool(np.linalg.norm(gram - np.eye(phi_r.shape[1])) <= tol)


def effective_channel(state, cs, k):
    """Effective BS-to-user channel (h_k^H Phi_i G)^H for user k.

    Reflective-side users see phi_r, transmissive-side users see phi_t.
    """
    side = "r" if cs.sides[k] == "reflective" else "t"
    return herm(cs.g) @ herm(state.phi(side)) @ cs.h[k]


def project_to_case(phi_t, phi_r, mode, arch):
    """Project an arbitrary pair onto the feasible set of (mode, arch).

    Structurally forbidden entries are zeroed (the whole inactive matrix for
    pure modes); each group's stacked active block is then renormalized via
    the inverse principal square root of its Gram matrix, which makes the
    power-splitting equality hold exactly.
    """
    phi_t = as_complex(phi_t).copy()
    phi_r = as_complex(phi_r).copy()
    if phi_t.shape != phi_r.shape or phi_t.shape[0] != phi_t.shape[1]:
        raise ValueError("phi_t and phi_r must be equal square matrices")
    m = phi_t.shape[0]
    groups = arch.group_count(m)
    mb = m // groups
    mask = structure_mask(m, arch)
    phi_t[~mask] = 0.0
    phi_r[~mask] = 0.0
    active = mode.sides
    if "t" not in active:
        phi_t[:] = 0.0
    if "r" not in active:
        phi_r[:] = 0.0

    mats = {"t": phi_t, "r": phi_r}
    for g in range(groups):
        sel = slice(g * mb, (g + 1) * mb)
        stack = np.vstack([mats[s][sel, sel] for s in active])
        if np.linalg.norm(stack) == 0.0:
            raise DegenerateInputError(f"group {g} active block is zero after masking")
        gram = herm(stack) @ stack
        w = np.linalg.eigvalsh(gram)
        if w[0] <= 1e-12 * max(w[-1], 1.0):
            raise DegenerateInputError(f"group {g} active block is rank deficient")
        stack = stack @ principal_inverse_sqrt(gram)
        for i, s in enumerate(active):
            mats[s][sel, sel] = stack[i * mb:(i + 1) * mb, :]
    return BdRisState(mode, arch, phi_t, phi_r)
