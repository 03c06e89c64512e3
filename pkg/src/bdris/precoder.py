"""Precoder block: closed-form columns plus a bisection on the power multiplier.

Each column solves w_k = (sum_p hbar_p hbar_p^H + lam I)^{-1} sqrt(1+iota_k)
hbar_k where hbar_k are the multiplier-scaled effective channels. The Gram
matrix is diagonalized once, so the transmit power is an explicit rational
function of lam and the bisection costs O(NK) per evaluation.
"""

from dataclasses import dataclass

import numpy as np

from .numerics import herm, as_complex, regularized_hermitian_solve
from .ris import effective_channel

BISECTION_MAX_ITER = 200
POWER_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class PrecoderSolution:
    w: np.ndarray
    lam: float
    power_used: float


def _power_profile(eigvals, proj2, lam):
    # ||W(lam)||_F^2 = sum_{k,i} |proj_{i,k}|^2 / (s_i + lam)^2
    return float(np.sum(proj2 / (eigvals[:, None] + lam) ** 2))


def update_precoder(h_bar, iota, p):
    """Solve the precoder subproblem under the total power budget ``p``.

    Args:
        h_bar: K x N array of multiplier-scaled effective channels.
        iota: surrogate SINRs, length K.
        p: transmit power budget in watts.

    Returns a :class:`PrecoderSolution` with lam = 0 whenever the
    unconstrained minimum-norm solution already fits the budget, otherwise
    the unique positive multiplier driving ||W||_F^2 to p (bisection ends on
    the feasible side, so power_used never exceeds p).
    """
    if p <= 0:
        raise ValueError("power budget must be positive")
    h_bar = np.atleast_2d(as_complex(h_bar))
    iota = np.asarray(iota, dtype=np.float64)
    k, n = h_bar.shape
    if iota.shape != (k,):
        raise ValueError("iota length must match the number of channels")

    rhs = h_bar.T * np.sqrt(1.0 + iota)  # N x K, column k = sqrt(1+iota_k) hbar_k
    if not np.any(h_bar):
        return PrecoderSolution(np.zeros((n, k), dtype=np.complex128), 0.0, 0.0)

    gram = h_bar.T @ h_bar.conj()  # sum_p hbar_p hbar_p^H, formed once
    s, u = np.linalg.eigh(gram)
    s = np.maximum(s, 0.0)
    proj2 = np.abs(herm(u) @ rhs) ** 2

    def solution(lam):
        w = u @ ((herm(u) @ rhs) / (s[:, None] + lam))
        return w

    # The unconstrained solution stays in range(gram) because every rhs does;
    # a tiny ridge stands in for the exact pseudo-inverse when gram is singular.
    ridge = 1e-12 * np.trace(gram).real / n
    lam0 = 0.0 if s[0] > 1e-12 * max(s[-1], 1.0) else ridge
    if _power_profile(s, proj2, lam0) <= p:
        w = solution(lam0)
        return PrecoderSolution(w, 0.0, float(np.linalg.norm(w) ** 2))

    lam_hi = 1.0
    while _power_profile(s, proj2, lam_hi) >= p:
        lam_hi *= 2.0
    lam_lo = 0.0
    for _ in range(BISECTION_MAX_ITER):
        mid = 0.5 * (lam_lo + lam_hi)
        if mid == lam_lo or mid == lam_hi:
            break
        if _power_profile(s, proj2, mid) > p:
            lam_lo = mid
        else:
            lam_hi = mid
        pw = _power_profile(s, proj2, lam_hi)
        if abs(pw - p) <= POWER_TOL * p and lam_hi * (p - pw) <= POWER_TOL * p:
            break
    w = solution(lam_hi)
    return PrecoderSolution(w, float(lam_hi), float(np.linalg.norm(w) ** 2))


def mmse_initial_precoder(cs, state, sigma2, p):
    """Regularized matched-filter start scaled to use the full power budget.

    Wtilde = (H H^H + sigma2 I)^{-1} H with H holding the effective channels
    column-wise, then W = sqrt(p) Wtilde / ||Wtilde||_F so ||W||_F^2 = p.
    """
    heff = np.stack([effective_channel(state, cs, k) for k in range(cs.k)], axis=1)
    a = heff @ herm(heff)
    wt = regularized_hermitian_solve(a, float(sigma2), heff)
    norm = np.linalg.norm(wt)
    if norm == 0.0:
        raise ValueError("all effective channels are zero; cannot normalize")
    return np.sqrt(p) * wt / norm
