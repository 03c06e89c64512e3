"""Per-cell solver for the single-connected architecture.

Every cell carries one transmissive and one reflective coefficient
phi_i = sqrt(alpha_i) e^{j theta_i} with alpha_t + alpha_r = 1. Cycling over
cells, the phases have a closed form and the amplitude split is a
one-dimensional convex minimization handled by golden-section search.
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .numerics import herm, as_complex
from .ris import Mode

GOLDEN_TOL = 1e-8
ALPHA_EDGE = 1e-9
SWEEP_TOL = 1e-6
MAX_SWEEPS = 100

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_INVPHI2 = (3.0 - math.sqrt(5.0)) / 2.0


@dataclass(frozen=True, eq=False)
class ScDiagonalData:
    """Quadratic (v_t, v_r: M x M Hermitian PSD) and linear (vtil: length M) coefficients."""

    v_t: np.ndarray
    v_r: np.ndarray
    vtil_t: np.ndarray
    vtil_r: np.ndarray

    def v(self, side):
        return self.v_t if side == "t" else self.v_r

    def vtil(self, side):
        return self.vtil_t if side == "t" else self.vtil_r


def build_sc_data(cs, w, iota, tau):
    """Assemble the per-cell coefficients from channels, precoder, auxiliaries.

    With v_kp = h_k * conj(G w_p) elementwise:
    v_i = sum_{k in side i} |tau_k|^2 sum_p v_kp v_kp^H,
    vtil_i = sum_{k in side i} sqrt(1+iota_k) tau_k v_kk.
    """
    w = as_complex(w)
    iota = np.asarray(iota, dtype=np.float64)
    tau = np.asarray(tau, dtype=np.complex128)
    gw = cs.g @ w
    m = cs.m
    out = {}
    for side, label in (("t", "transmissive"), ("r", "reflective")):
        v = np.zeros((m, m), dtype=np.complex128)
        vt = np.zeros(m, dtype=np.complex128)
        for k, s in enumerate(cs.sides):
            if s != label:
                continue
            vk = cs.h[k][:, None] * gw.conj()  # column p = v_kp
            v += (np.abs(tau[k]) ** 2) * (vk @ herm(vk))
            vt += np.sqrt(1.0 + iota[k]) * tau[k] * vk[:, k]
        out["v_" + side] = v
        out["vt_" + side] = vt
    return ScDiagonalData(v_t=out["v_t"], v_r=out["v_r"],
                          vtil_t=out["vt_t"], vtil_r=out["vt_r"])


def sc_objective(data, phi_t, phi_r, sides=("t", "r")):
    """Value being maximized: sum_i 2 Re(vtil_i^H phi_i) - phi_i^H v_i phi_i."""
    vecs = {"t": np.asarray(phi_t, dtype=np.complex128),
            "r": np.asarray(phi_r, dtype=np.complex128)}
    total = 0.0
    for s in sides:
        phi = vecs[s]
        total += 2.0 * np.vdot(data.vtil(s), phi).real - np.vdot(phi, data.v(s) @ phi).real
    return float(total)


def chi(data, phi_t, phi_r, m):
    """Coupling scalars for cell m: chi_i = sum_{n != m} v_i[m,n] phi_i[n] - vtil_i[m]."""
    vecs = {"t": phi_t, "r": phi_r}
    out = []
    for s in ("t", "r"):
        row = data.v(s)[m]
        phi = vecs[s]
        out.append(complex(row @ phi - row[m] * phi[m] - data.vtil(s)[m]))
    return tuple(out)


def optimal_phase(c):
    """Phase in [0, 2*pi) opposing the coupling scalar: cos(angle(c) - theta) = -1."""
    return (cmath.phase(c) + math.pi) % (2.0 * math.pi)


def amplitude_objective(upsilon, abs_chi_t, abs_chi_r, alpha):
    """Cell objective after phase optimization, as a function of the transmissive split.

    upsilon * alpha - 2 |chi_t| sqrt(alpha) - 2 |chi_r| sqrt(1 - alpha);
    convex on (0, 1) since both square-root terms enter with negative sign.
    """
    return (upsilon * alpha - 2.0 * abs_chi_t * math.sqrt(alpha)
            - 2.0 * abs_chi_r * math.sqrt(1.0 - alpha))


def optimal_amplitude(upsilon, abs_chi_t, abs_chi_r):
    """Golden-section minimizer of the cell amplitude objective on (0, 1).

    The interval is clipped by ALPHA_EDGE to stay away from the square-root
    derivative singularities; a fully flat objective returns 0.5.
    """
    if upsilon == 0.0 and abs_chi_t == 0.0 and abs_chi_r == 0.0:
        return 0.5
    a = ALPHA_EDGE
    b = 1.0 - ALPHA_EDGE

    def f(x):
        return amplitude_objective(upsilon, abs_chi_t, abs_chi_r, x)

    h = b - a
    c = a + _INVPHI2 * h
    d = a + _INVPHI * h
    yc = f(c)
    yd = f(d)
    while h > GOLDEN_TOL:
        if yc < yd:
            b, d, yd = d, c, yc
            h = b - a
            c = a + _INVPHI2 * h
            yc = f(c)
        else:
            a, c, yc = c, d, yd
            h = b - a
            d = a + _INVPHI * h
            yd = f(d)
    return 0.5 * (a + b)


def solve_single_connected(data, phi_t, phi_r, mode=Mode.HYBRID,
                           sweep_tol=SWEEP_TOL, max_sweeps=MAX_SWEEPS):
    """Cyclic per-cell update of the diagonal coefficient vectors.

    Each cell first takes its closed-form phases, then its amplitude split
    (golden section, kept only when it does not increase the cell objective;
    pure modes pin the split at 0/1). Stops when no coefficient moves more
    than ``sweep_tol`` or after ``max_sweeps`` sweeps. Returns the updated
    (phi_t, phi_r) vectors; the inactive side of a pure mode is exact zero.
    """
    m = data.v_t.shape[0]
    pt = np.zeros(m, dtype=np.complex128)
    pr = np.zeros(m, dtype=np.complex128)
    if "t" in mode.sides:
        pt[:] = np.asarray(phi_t, dtype=np.complex128)
    if "r" in mode.sides:
        pr[:] = np.asarray(phi_r, dtype=np.complex128)

    for _ in range(max_sweeps):
        max_change = 0.0
        for cell in range(m):
            chi_t, chi_r = chi(data, pt, pr, cell)
            if mode is Mode.HYBRID:
                theta_t = optimal_phase(chi_t) if chi_t != 0 else cmath.phase(pt[cell]) % (2 * math.pi)
                theta_r = optimal_phase(chi_r) if chi_r != 0 else cmath.phase(pr[cell]) % (2 * math.pi)
                upsilon = data.v_t[cell, cell].real - data.v_r[cell, cell].real
                at, ar = abs(chi_t), abs(chi_r)
                alpha_cur = min(max(abs(pt[cell]) ** 2, 0.0), 1.0)
                alpha = optimal_amplitude(upsilon, at, ar)
                if amplitude_objective(upsilon, at, ar, alpha) > amplitude_objective(upsilon, at, ar, alpha_cur):
                    alpha = alpha_cur
                new_t = math.sqrt(alpha) * cmath.exp(1j * theta_t)
                new_r = math.sqrt(1.0 - alpha) * cmath.exp(1j * theta_r)
            elif mode is Mode.REFLECTIVE:
                theta_r = optimal_phase(chi_r) if chi_r != 0 else cmath.phase(pr[cell]) % (2 * math.pi)
                new_t, new_r = 0.0, cmath.exp(1j * theta_r)
            else:
                theta_t = optimal_phase(chi_t) if chi_t != 0 else cmath.phase(pt[cell]) % (2 * math.pi)
                new_t, new_r = cmath.exp(1j * theta_t), 0.0
            max_change = max(max_change, abs(new_t - pt[cell]), abs(new_r - pr[cell]))
            pt[cell] = new_t
            pr[cell] = new_r
        if max_change < sweep_tol:
            break
    return pt, pr
