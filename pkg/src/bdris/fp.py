"""Sum-rate objective and its two fractional-programming reformulations.

The SINR ratios are first pulled out of the log with an auxiliary vector
iota (one surrogate SINR per user), then each remaining ratio is replaced by
a concave quadratic with a complex multiplier tau_k. Both auxiliary updates
are closed form and, evaluated at their optima, collapse the surrogate back
onto the true sum-rate. Rates are in bits (log base 2) throughout.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(eq=False)
class Auxiliaries:
    """Surrogate SINRs (iota, real >= 0) and quadratic multipliers (tau, complex)."""

    iota: np.ndarray
    tau: np.ndarray

    def __post_init__(self):
        self.iota = np.asarray(self.iota, dtype=np.float64)
        self.tau = np.asarray(self.tau, dtype=np.complex128)
        if self.iota.shape != self.tau.shape:
            raise ValueError("iota and tau must have equal length")
        if not (np.all(np.isfinite(self.iota)) and np.all(np.isfinite(self.tau))):
            raise ValueError("auxiliaries must be finite")
        if np.any(self.iota < 0):
            raise ValueError("iota must be non-negative")


@dataclass(eq=False)
class LinkContext:
    """Precoder, effective channels, and per-user noise powers for one evaluation.

    ``w`` is N x K (one column per user), ``h_eff`` is K x N (one row per
    user), ``sigma2`` broadcasts to length K.
    """

    w: np.ndarray
    h_eff: np.ndarray
    sigma2: np.ndarray

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.complex128)
        self.h_eff = np.atleast_2d(np.asarray(self.h_eff, dtype=np.complex128))
        k = self.h_eff.shape[0]
        self.sigma2 = np.broadcast_to(np.asarray(self.sigma2, dtype=np.float64), (k,)).copy()
        if self.w.shape != (self.h_eff.shape[1], k):
            raise ValueError(
                f"precoder shape {self.w.shape} does not match {k} users with "
                f"{self.h_eff.shape[1]} antennas")
        if np.any(self.sigma2 <= 0):
            raise ValueError("noise powers must be positive")

    @property
    def k(self):
        return self.h_eff.shape[0]

    def gains(self):
        """K x K matrix with entry (k, p) = h_k^H w_p."""
        return self.h_eff.conj() @ self.w


def _signal_and_denominator(ctx):
    c = ctx.gains()
    p2 = np.abs(c) ** 2
    sig = np.diagonal(p2).copy()
    den_full = p2.sum(axis=1) + ctx.sigma2  # includes the own-signal term
    return sig, den_full


def sinr(k, ctx):
    """Per-user SINR |h_k^H w_k|^2 / (sum_{p != k} |h_k^H w_p|^2 + sigma_k^2)."""
    sig, den_full = _signal_and_denominator(ctx)
    return float(sig[k] / (den_full[k] - sig[k]))


def all_sinr(ctx):
    sig, den_full = _signal_and_denominator(ctx)
    return sig / (den_full - sig)


def sum_rate(ctx):
    """Sum of log2(1 + SINR_k) in bits/s/Hz; blocked users contribute zero."""
    return float(np.sum(np.log2(1.0 + all_sinr(ctx))))


def update_iota(ctx):
    """Closed-form surrogate-SINR update: iota_k equals the current SINR."""
    return all_sinr(ctx)


def update_tau(ctx, iota):
    """Closed-form multiplier update.

    tau_k = sqrt(1 + iota_k) h_k^H w_k / (sum_p |h_k^H w_p|^2 + sigma_k^2).
    """
    iota = np.asarray(iota, dtype=np.float64)
    c = ctx.gains()
    den_full = np.sum(np.abs(c) ** 2, axis=1) + ctx.sigma2
    return np.sqrt(1.0 + iota) * np.diagonal(c) / den_full


def _f_tau_terms(ctx, aux):
    c = ctx.gains()
    quad = np.sum(np.abs(c) ** 2, axis=1)
    lin = 2.0 * np.sqrt(1.0 + aux.iota) * (aux.tau.conj() * np.diagonal(c)).real
    logs = np.log2(1.0 + aux.iota) - aux.iota
    return logs, lin, quad


def f_tau(ctx, aux):
    """Quadratic-transform surrogate with the noise term inside the user sum.

    Each user contributes log2(1+iota_k) - iota_k
    + 2 sqrt(1+iota_k) Re{tau_k^* h_k^H w_k}
    - |tau_k|^2 sum_p (|h_k^H w_p|^2 + sigma_k^2),
    i.e. the noise enters K times per user. This differs from
    :func:`f_tau_tight` by the constant (K-1) sum_k |tau_k|^2 sigma_k^2,
    which does not depend on the precoder or the scattering matrices.
    """
    logs, lin, quad = _f_tau_terms(ctx, aux)
    t2 = np.abs(aux.tau) ** 2
    return float(np.sum(logs + lin - t2 * (quad + ctx.k * ctx.sigma2)))


def f_tau_tight(ctx, aux):
    """Quadratic-transform surrogate with the noise counted once per user.

    This is the form whose tau-stationary point is :func:`update_tau`; after
    both auxiliary updates it equals :func:`sum_rate` exactly.
    """
    logs, lin, quad = _f_tau_terms(ctx, aux)
    t2 = np.abs(aux.tau) ** 2
    return float(np.sum(logs + lin - t2 * (quad + ctx.sigma2)))


def noise_placement_offset(ctx, aux):
    """Constant by which f_tau_tight exceeds f_tau: (K-1) sum_k |tau_k|^2 sigma_k^2."""
    return float((ctx.k - 1) * np.sum(np.abs(aux.tau) ** 2 * ctx.sigma2))


def dual_objective_nats(ctx, iota):
    """Ratio-outside-the-log surrogate in natural-log units.

    sum_k ( ln(1+iota_k) - iota_k
            + (1+iota_k) |h_k^H w_k|^2 / (sum_p |h_k^H w_p|^2 + sigma_k^2) ).

    Maximized over iota exactly at iota_k = SINR_k, where its value is the
    sum rate in nats; the bit-scaled variant used for reporting shares the
    same maximizer trajectory because none of the block updates depend on
    the log base.
    """
    iota = np.asarray(iota, dtype=np.float64)
    sig, den_full = _signal_and_denominator(ctx)
    return float(np.sum(np.log1p(iota) - iota + (1.0 + iota) * sig / den_full))
