"""Built-in property suites: gradient, retraction, surrogate tightness, amplitude search.

Each suite draws seeded random instances, reports its worst error against a
fixed threshold, and the runner exits non-zero naming the first failure.
These are the same properties the test suite pins; the CLI entry point makes
them runnable in production environments without pytest.
"""

import numpy as np

from . import fp
from . import manifold
from . import singlecell
from .numerics import herm


def _random_stiefel(rng, rows, cols):
    q, _ = np.linalg.qr(rng.standard_normal((rows, cols))
                        + 1j * rng.standard_normal((rows, cols)))
    return q[:, :cols]


def _random_group_problem(rng, mb, sides):
    s = len(sides)
    x = rng.standard_normal((mb, s * mb)) + 1j * rng.standard_normal((mb, s * mb))
    y = rng.standard_normal((mb, mb)) + 1j * rng.standard_normal((mb, mb))
    y = y @ herm(y)
    blocks = []
    for _ in range(s):
        z = rng.standard_normal((mb, mb)) + 1j * rng.standard_normal((mb, mb))
        blocks.append(z @ herm(z))
    from .numerics import blkdiag_assemble
    return manifold.GroupProblem(g=0, x_stack=x, y_gg=y,
                                 z_stack=blkdiag_assemble(blocks), sides=tuple(sides))


def gradient_suite(problems=20, directions=10, seed=2024):
    """Central finite differences against the analytic gradient, relative error."""
    rng = np.random.default_rng(seed)
    h = 1e-6
    worst = 0.0
    for i in range(problems):
        mb = int(rng.integers(1, 4))
        sides = ("t", "r") if i % 3 else ("r",)
        gp = _random_group_problem(rng, mb, sides)
        rows = len(sides) * mb
        phi = _random_stiefel(rng, rows, mb)
        for _ in range(directions):
            t = rng.standard_normal((rows, mb)) + 1j * rng.standard_normal((rows, mb))
            t /= np.linalg.norm(t)
            analytic = float(np.vdot(t, manifold.euclidean_gradient(gp, phi)).real)
            numeric = (manifold.objective_f_g(gp, phi + h * t)
                       - manifold.objective_f_g(gp, phi - h * t)) / (2 * h)
            worst = max(worst, abs(analytic - numeric) / max(abs(numeric), 1e-8))
    return worst


def retraction_suite(samples=1000, seed=2025):
    """Feasibility of the retraction along true tangent directions, any step size."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        mb = int(rng.integers(1, 4))
        rows = int(rng.integers(1, 3)) * mb
        if rows < mb:
            rows = mb
        phi = _random_stiefel(rng, rows, mb)
        t = rng.standard_normal((rows, mb)) + 1j * rng.standard_normal((rows, mb))
        a = herm(phi) @ t
        xi = t - phi @ (0.5 * (a + herm(a)))  # tangent: phi^H xi skew-Hermitian
        delta = float(rng.uniform(0.0, 10.0))
        moved = manifold.retract(phi, delta * xi)
        worst = max(worst, float(np.linalg.norm(herm(moved) @ moved - np.eye(mb))))
    return worst


def tightness_suite(contexts=100, seed=2026):
    """After both auxiliary updates the surrogate equals the sum rate."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(contexts):
        k = int(rng.integers(1, 5))
        n = int(rng.integers(1, 5))
        ctx = fp.LinkContext(
            rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k)),
            rng.standard_normal((k, n)) + 1j * rng.standard_normal((k, n)),
            rng.uniform(0.1, 2.0, k))
        iota = fp.update_iota(ctx)
        aux = fp.Auxiliaries(iota, fp.update_tau(ctx, iota))
        f_o = fp.sum_rate(ctx)
        gap = abs(fp.f_tau_tight(ctx, aux) - f_o) / max(1.0, f_o)
        offset_gap = abs(fp.f_tau(ctx, aux) + fp.noise_placement_offset(ctx, aux)
                         - fp.f_tau_tight(ctx, aux))
        worst = max(worst, gap, offset_gap)
    return worst


def amplitude_suite(triples=200, seed=2027):
    """Golden-section minimizer against a 1e-6-step grid search.

    Also checks convexity of the split objective in the split fraction:
    non-negative second differences up to rounding, for sign-free gap
    coefficients.
    """
    rng = np.random.default_rng(seed)
    grid = np.linspace(1e-6, 1.0 - 1e-6, 10 ** 6)
    sq = np.sqrt(grid)
    sq1 = np.sqrt(1.0 - grid)
    alphas = np.linspace(0.01, 0.99, 981)
    worst = 0.0
    for _ in range(triples):
        ups = float(rng.standard_normal() * 2.0)
        at = abs(rng.standard_normal())
        ar = abs(rng.standard_normal())
        best = float(grid[np.argmin(ups * grid - 2 * at * sq - 2 * ar * sq1)])
        found = singlecell.optimal_amplitude(ups, at, ar)
        worst = max(worst, abs(found - best))
        vals = ups * alphas - 2 * at * np.sqrt(alphas) - 2 * ar * np.sqrt(1 - alphas)
        second = vals[2:] - 2 * vals[1:-1] + vals[:-2]
        if second.min() < -1e-9:
            worst = max(worst, 1.0)
    return worst


SUITES = (
    ("gradient", gradient_suite, 1e-5),
    ("retraction", retraction_suite, 1e-10),
    ("fp-tightness", tightness_suite, 1e-10),
    ("amplitude-search", amplitude_suite, 1e-4),
)


def run_all(out=print):
    """Run every suite; returns the name of the first failure or None."""
    failed = None
    for name, suite, threshold in SUITES:
        err = suite()
        ok = err < threshold
        out(f"{name}: max error {err:.3e} (tol {threshold:.1e}) {'PASS' if ok else 'FAIL'}")
        if not ok and failed is None:
            failed = name
    return failed
