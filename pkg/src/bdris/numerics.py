"""Dense complex linear-algebra kernels shared by all solver stages.

Complex matrices and vectors are plain ``numpy.ndarray`` objects with dtype
``complex128``; every routine here is a pure function of its inputs. Problem
sizes stay small (at most a few hundred rows), so everything is dense and
double precision throughout.
"""

import numpy as np

# Eigenvalues below this floor are clamped before forming an inverse square
# root; keeps the factorization stable for semidefinite inputs.
EIG_CLAMP = 1e-14


def herm(a):
    """Conjugate transpose."""
    return a.conj().T


def as_complex(a):
    return np.asarray(a, dtype=np.complex128)


def ensure_finite(name, a):
    if not np.all(np.isfinite(np.asarray(a).view(np.float64) if np.iscomplexobj(a) else a)):
        raise ValueError(f"{name} contains non-finite entries")


def blkdiag_assemble(blocks):
    """Assemble a block-diagonal matrix from a non-empty list of blocks.

    Block ``g`` occupies the row/column range owned by the g-th group;
    all off-block entries are exactly zero.
    """
    if not blocks:
        raise ValueError("blkdiag_assemble requires at least one block")
    blocks = [np.atleast_2d(as_complex(b)) for b in blocks]
    for i, b in enumerate(blocks):
        ensure_finite(f"block {i}", b)
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    out = np.zeros((rows, cols), dtype=np.complex128)
    r = c = 0
    for b in blocks:
        out[r:r + b.shape[0], c:c + b.shape[1]] = b
        r += b.shape[0]
        c += b.shape[1]
    return out


def block_slice(a, row_range, col_range):
    """Return the contiguous submatrix ``a[r0:r1, c0:c1]`` as a copy.

    Ranges are half-open ``(start, stop)`` pairs, zero based.
    """
    a = np.atleast_2d(np.asarray(a))
    r0, r1 = row_range
    c0, c1 = col_range
    if not (0 <= r0 <= r1 <= a.shape[0] and 0 <= c0 <= c1 <= a.shape[1]):
        raise ValueError(
            f"block range rows={row_range} cols={col_range} out of bounds for {a.shape}")
    return a[r0:r1, c0:c1].copy()


def _check_hermitian(a, what):
    asym = np.linalg.norm(a - herm(a))
    if asym > 1e-8 * max(1.0, np.linalg.norm(a)):
        raise ValueError(f"{what} must be Hermitian (asymmetry {asym:.3e})")


def principal_inverse_sqrt(a, ridge=0.0):
    """Inverse principal square root ``(a + ridge*I)^(-1/2)`` of a Hermitian PSD matrix.

    Computed by Hermitian eigendecomposition with eigenvalues clamped at
    ``EIG_CLAMP``; the result R is Hermitian and satisfies
    ``R (a + ridge*I) R = I`` to ~1e-12 for well-conditioned inputs.
    """
    a = as_complex(np.atleast_2d(a))
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got {a.shape}")
    if ridge < 0:
        raise ValueError("ridge must be non-negative")
    _check_hermitian(a, "principal_inverse_sqrt input")
    w, v = np.linalg.eigh(a)
    w = np.maximum(w + ridge, EIG_CLAMP)
    r = (v * (1.0 / np.sqrt(w))) @ herm(v)
    return 0.5 * (r + herm(r))


def regularized_hermitian_solve(a, lam, b):
    """Solve ``(a + lam*I) x = b`` for Hermitian PSD ``a`` and ``lam >= 0``.

    When ``lam`` is zero and ``a`` is singular a ridge of
    ``1e-12 * trace(a) / n`` is applied before factorization.
    """
    a = as_complex(np.atleast_2d(a))
    b = as_complex(b)
    n = a.shape[0]
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got {a.shape}")
    if b.shape[0] != n:
        raise ValueError(f"rhs length {b.shape[0]} does not match matrix size {n}")
    if lam < 0:
        raise ValueError("lam must be non-negative")
    _check_hermitian(a, "regularized_hermitian_solve input")
    m = a + lam * np.eye(n)
    if lam == 0.0:
        try:
            np.linalg.cholesky(m)
        except np.linalg.LinAlgError:
            m = m + (1e-12 * np.trace(a).real / n) * np.eye(n)
    return np.linalg.solve(m, b)
