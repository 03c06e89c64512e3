"""Scattering-matrix subproblem solved on the complex Stiefel manifold.

For group- and fully-connected architectures the subproblem in the pair
(phi_t, phi_r) is quadratic with a per-group orthonormality constraint on
the stacked block [phi_t_g; phi_r_g]. Each group is minimized by a
Riemannian conjugate-gradient sweep (tangent-projected gradient,
Polak-Ribiere mixing, Armijo backtracking, polar-form retraction), cycling
over groups until the blocks stop moving. Fully-connected is the
single-group case and single-connected is the all-groups-of-one case of
the same routine.
"""

from dataclasses import dataclass, replace

import numpy as np

from .numerics import EIG_CLAMP, herm, as_complex, blkdiag_assemble, principal_inverse_sqrt

GRAD_TOL_REL = 1e-6
CG_MAX_ITER = 500
SWEEP_TOL = 1e-6
MAX_SWEEPS = 100
ARMIJO_DECREASE = 1e-4
ARMIJO_SHRINK = 0.5
ARMIJO_MAX_HALVINGS = 50


@dataclass(frozen=True, eq=False)
class QuadraticData:
    """Coefficients of the scattering subproblem, all M x M.

    x_t/x_r collect the linear coupling per side, y the precoded transmit
    covariance, z_t/z_r the weighted user covariances; y and z are Hermitian
    PSD by construction.
    """

    x_t: np.ndarray
    x_r: np.ndarray
    y: np.ndarray
    z_t: np.ndarray
    z_r: np.ndarray

    def x(self, side):
        return self.x_t if side == "t" else self.x_r

    def z(self, side):
        return self.z_t if side == "t" else self.z_r


@dataclass(frozen=True, eq=False)
class GroupProblem:
    """One group's subproblem after folding in the other groups' coupling.

    ``x_stack`` is Mb x (S*Mb) with the active sides side by side,
    ``z_stack`` the matching (S*Mb) x (S*Mb) block diagonal, and feasible
    points are (S*Mb) x Mb matrices with orthonormal columns.
    """

    g: int
    x_stack: np.ndarray
    y_gg: np.ndarray
    z_stack: np.ndarray
    sides: tuple


def build_quadratic_data(cs, w, iota, tau):
    """Assemble the subproblem coefficients from channels, precoder, and auxiliaries.

    With g_k = G w_k and ttilde_k = sqrt(1+iota_k) tau_k:
    x_i = sum_{k in side i} ttilde_k^* g_k h_k^H,
    y = sum_p g_p g_p^H,
    z_i = sum_{k in side i} |tau_k|^2 h_k h_k^H.
    """
    w = as_complex(w)
    iota = np.asarray(iota, dtype=np.float64)
    tau = np.asarray(tau, dtype=np.complex128)
    gw = cs.g @ w
    hm = np.stack(cs.h, axis=1)
    y = gw @ herm(gw)
    ttilde = np.sqrt(1.0 + iota) * tau
    out = {}
    for side, label in (("t", "transmissive"), ("r", "reflective")):
        idx = [k for k, s in enumerate(cs.sides) if s == label]
        out["x_" + side] = (gw[:, idx] * ttilde[idx].conj()) @ herm(hm[:, idx])
        out["z_" + side] = (hm[:, idx] * (np.abs(tau[idx]) ** 2)) @ herm(hm[:, idx])
    return QuadraticData(x_t=out["x_t"], x_r=out["x_r"], y=y,
                         z_t=out["z_t"], z_r=out["z_r"])


def scattering_objective(data, phi_t, phi_r, sides=("t", "r")):
    """Value being maximized by the scattering update.

    sum over active sides of 2 Re Tr(phi_i x_i) - Tr(phi_i y phi_i^H z_i).
    """
    mats = {"t": as_complex(phi_t), "r": as_complex(phi_r)}
    total = 0.0
    for s in sides:
        phi = mats[s]
        total += 2.0 * np.einsum("ij,ji->", phi, data.x(s)).real
        total -= np.vdot(data.z(s) @ phi, phi @ data.y).real
    return float(total)


def group_subproblem(data, phi_t, phi_r, g, groups, sides=("t", "r")):
    """Extract group ``g``'s diagonal blocks and fold cross-group coupling.

    xfold_i = x_i[g,g] - sum_{p != g} y[g,p] phi_i[p,p]^H z_i[p,g]; the
    caller keeps the other groups' blocks fixed at their current values.
    """
    phi = {"t": as_complex(phi_t), "r": as_complex(phi_r)}
    m = data.y.shape[0]
    mb = m // groups
    sl = [slice(p * mb, (p + 1) * mb) for p in range(groups)]
    x_parts = []
    z_parts = []
    for s in sides:
        xt = data.x(s)[sl[g], sl[g]].copy()
        for p in range(groups):
            if p == g:
                continue
            xt -= data.y[sl[g], sl[p]] @ herm(phi[s][sl[p], sl[p]]) @ data.z(s)[sl[p], sl[g]]
        x_parts.append(xt)
        z_parts.append(data.z(s)[sl[g], sl[g]])
    return GroupProblem(g=g, x_stack=np.hstack(x_parts), y_gg=data.y[sl[g], sl[g]].copy(),
                        z_stack=blkdiag_assemble(z_parts), sides=tuple(sides))


def _value_zpy(gp, phi_g):
    # Shares the expensive product z (phi y) between the objective and the
    # gradient: f = Re<phi, z phi y> - 2 Re Tr(phi x), grad = 2 z phi y - 2 x^H.
    zpy = gp.z_stack @ (phi_g @ gp.y_gg)
    f = float(np.vdot(phi_g, zpy).real
              - 2.0 * np.einsum("ij,ji->", phi_g, gp.x_stack).real)
    return f, zpy


def objective_f_g(gp, phi_g):
    """Group objective Tr(phi y phi^H z) - 2 Re Tr(phi x); smaller is better."""
    return _value_zpy(gp, phi_g)[0]


def euclidean_gradient(gp, phi_g):
    """Steepest-ascent direction of the group objective: 2 z phi y - 2 x^H.

    The real directional derivative along any T equals Re Tr(T^H grad).
    """
    return 2.0 * (gp.z_stack @ (phi_g @ gp.y_gg)) - 2.0 * herm(gp.x_stack)


def project_tangent(phi_g, d, method="orthodox"):
    """Project ``d`` at the point ``phi_g``.

    "orthodox" (the default) subtracts phi times the Hermitian part of
    phi^H d, landing exactly on the tangent space of the Stiefel manifold.
    "chdiag" subtracts phi times the full complex diagonal of phi^H d
    (idempotent on the manifold, kept for comparison); it cannot represent
    per-column phase rotations, so conjugate-gradient runs built on it stall
    at points that are not stationary.
    """
    if method == "chdiag":
        diag = np.einsum("im,im->m", phi_g.conj(), d)
        return d - phi_g * diag
    if method == "orthodox":
        a = herm(phi_g) @ d
        return d - phi_g @ (0.5 * (a + herm(a)))
    raise ValueError(f"unknown projection {method!r}")


def retract(phi_g, step):
    """Map a step at ``phi_g`` back onto the manifold.

    Computed in polar form, (phi + step) ((phi + step)^H (phi + step))^(-1/2),
    which for a tangent step coincides with
    (phi + step)(I + step^H step)^(-1/2) and keeps the columns orthonormal
    for any direction the diagonal-based projection may produce.
    """
    if not np.any(step):
        return phi_g
    moved = phi_g + step
    if moved.shape[1] == 1:
        return moved / max(np.linalg.norm(moved), np.sqrt(EIG_CLAMP))
    gram = herm(moved) @ moved  # Hermitian PSD by construction
    w, v = np.linalg.eigh(gram)
    w = np.maximum(w, EIG_CLAMP)
    return moved @ ((v * (1.0 / np.sqrt(w))) @ herm(v))


def _inner(a, b):
    return float(np.vdot(a, b).real)


@dataclass(eq=False)
class CgState:
    """Iterate of the conjugate-gradient loop on one group problem."""

    phi: np.ndarray
    egrad: np.ndarray
    grad: np.ndarray
    direction: np.ndarray
    f_value: float
    step_memory: float = 1.0
    iterations: int = 0
    stationary: bool = False

    @property
    def grad_norm(self):
        return float(np.linalg.norm(self.grad))


def cg_init(gp, phi_g, projection="orthodox"):
    f, zpy = _value_zpy(gp, phi_g)
    egrad = 2.0 * zpy - 2.0 * herm(gp.x_stack)
    grad = project_tangent(phi_g, egrad, projection)
    return CgState(phi=phi_g, egrad=egrad, grad=grad, direction=-grad, f_value=f)


def _slope(state, projection):
    # Initial rate of change of f along the retraction path: the polar
    # retraction's initial velocity is the tangent-space part of the
    # direction (the direction itself under the orthodox projection).
    if projection == "orthodox":
        return _inner(state.grad, state.direction)
    velocity = project_tangent(state.phi, state.direction, "orthodox")
    return _inner(state.egrad, velocity)


def cg_step(gp, state, projection="orthodox"):
    """One conjugate-gradient iteration: line search, retraction, direction mix.

    The line search starts from the exact minimizer of the quadratic model
    along the direction (the objective is quadratic in the ambient space, so
    this is nearly exact and keeps the conjugate directions effective on
    ill-conditioned instances) and falls back to Armijo halving; a failed
    search, or a direction with no descent component, returns the current
    point with ``stationary`` set.
    """
    slope = _slope(state, projection)
    direction = state.direction
    if slope >= 0.0:
        direction = -state.grad
        state = replace(state, direction=direction)
        slope = _slope(state, projection)
        if slope >= 0.0:
            return replace(state, stationary=True, iterations=state.iterations + 1)

    # Curvature of the ambient quadratic along the direction; PSD data makes
    # it non-negative.
    curvature = float(np.vdot(gp.z_stack @ direction, direction @ gp.y_gg).real)
    if curvature > 1e-14 * abs(slope):
        step = -slope / (2.0 * curvature)
    else:
        step = 2.0 * state.step_memory
    step = min(step, 1e12)

    accepted = None
    for _ in range(ARMIJO_MAX_HALVINGS):
        trial = retract(state.phi, step * direction)
        f_trial, zpy_trial = _value_zpy(gp, trial)
        if f_trial <= state.f_value + ARMIJO_DECREASE * step * slope:
            accepted = (trial, f_trial, zpy_trial, step)
            break
        step *= ARMIJO_SHRINK
    if accepted is None:
        return replace(state, stationary=True, iterations=state.iterations + 1)

    phi_new, f_new, zpy_new, step = accepted
    egrad_new = 2.0 * zpy_new - 2.0 * herm(gp.x_stack)
    grad_new = project_tangent(phi_new, egrad_new, projection)

    denom = _inner(state.grad, state.grad)
    restart_period = max(2 * state.phi.size, 10)
    if denom <= 0.0 or (state.iterations + 1) % restart_period == 0:
        mu = 0.0
    else:
        transported_grad = project_tangent(phi_new, state.grad, projection)
        mu = _inner(grad_new, grad_new - transported_grad) / denom
        mu = max(mu, 0.0)
    direction_new = -grad_new + mu * project_tangent(phi_new, state.direction, projection)
    if _inner(direction_new, grad_new) >= 0.0:
        direction_new = -grad_new

    return CgState(phi=phi_new, egrad=egrad_new, grad=grad_new,
                   direction=direction_new, f_value=f_new, step_memory=step,
                   iterations=state.iterations + 1)


def cg_solve(gp, phi_g, grad_tol, max_iter=CG_MAX_ITER, projection="orthodox"):
    """Minimize one group problem from ``phi_g``; returns (point, final state)."""
    state = cg_init(gp, phi_g, projection)
    while state.iterations < max_iter and not state.stationary:
        if state.grad_norm <= grad_tol:
            break
        state = cg_step(gp, state, projection)
    return state.phi, state


def _stack_block(mats, sides, sel):
    return np.vstack([mats[s][sel, sel] for s in sides])


def solve_group_connected(data, phi_t, phi_r, groups, sides=("t", "r"),
                          sweep_tol=SWEEP_TOL, max_sweeps=MAX_SWEEPS,
                          cg_max_iter=CG_MAX_ITER, projection="orthodox"):
    """Block-cyclic solve of the scattering subproblem for G groups.

    Sweeps the groups in index order, each solved by Riemannian CG from its
    current block (warm start), until no block moves more than ``sweep_tol``
    in Frobenius norm or ``max_sweeps`` is reached. Inactive sides (pure
    modes) are returned as exact zeros.

    The coefficients are rescaled internally so the gradient tolerance
    1e-6 * max(1, ||x_stack||) is meaningful at physical channel magnitudes;
    the argmin is unchanged by the common positive factor.
    """
    m = data.y.shape[0]
    mb = m // groups
    scale = max(float(np.linalg.norm(data.x(s))) for s in sides)
    if scale <= 0.0:
        scale = max(float(np.linalg.norm(data.z(s)) * np.linalg.norm(data.y)) for s in sides)
    if scale <= 0.0:
        out = {"t": np.zeros((m, m), dtype=np.complex128), "r": np.zeros((m, m), dtype=np.complex128)}
        for s in sides:
            out[s] = as_complex(phi_t if s == "t" else phi_r).copy()
        return out["t"], out["r"]
    c = 1.0 / scale
    scaled = QuadraticData(x_t=c * data.x_t, x_r=c * data.x_r, y=data.y,
                           z_t=c * data.z_t, z_r=c * data.z_r)

    mats = {"t": np.zeros((m, m), dtype=np.complex128),
            "r": np.zeros((m, m), dtype=np.complex128)}
    for s in sides:
        src = as_complex(phi_t if s == "t" else phi_r)
        for g in range(groups):
            sel = slice(g * mb, (g + 1) * mb)
            mats[s][sel, sel] = src[sel, sel]

    eye = np.eye(mb)
    for g in range(groups):
        sel = slice(g * mb, (g + 1) * mb)
        stack = _stack_block(mats, sides, sel)
        if np.linalg.norm(herm(stack) @ stack - eye) > 1e-10:
            stack = stack @ principal_inverse_sqrt(herm(stack) @ stack)
            for i, s in enumerate(sides):
                mats[s][sel, sel] = stack[i * mb:(i + 1) * mb, :]

    def solve_one(g):
        sel = slice(g * mb, (g + 1) * mb)
        gp = group_subproblem(scaled, mats["t"], mats["r"], g, groups, sides)
        start = _stack_block(mats, sides, sel)
        tol = GRAD_TOL_REL * max(1.0, float(np.linalg.norm(gp.x_stack)))
        solved, _ = cg_solve(gp, start, tol, cg_max_iter, projection)
        for i, s in enumerate(sides):
            mats[s][sel, sel] = solved[i * mb:(i + 1) * mb, :]
        return float(np.linalg.norm(solved - start))

    if groups == 1:
        # No cross-group coupling to refresh; one CG run is the whole solve.
        solve_one(0)
        return mats["t"], mats["r"]

    objective = scattering_objective(scaled, mats["t"], mats["r"], sides)
    for _ in range(max_sweeps):
        max_change = max(solve_one(g) for g in range(groups))
        if max_change < sweep_tol:
            break
        new_objective = scattering_objective(scaled, mats["t"], mats["r"], sides)
        # Capped inner solves on ill-conditioned instances can keep nudging
        # blocks forever; stop once the sweep no longer moves the objective.
        if new_objective - objective < 1e-9 * max(1.0, abs(objective)):
            break
        objective = new_objective
    return mats["t"], mats["r"]
