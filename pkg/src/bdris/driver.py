"""Outer block-coordinate loop joining all the solver stages.

One iteration updates, in order: the surrogate SINRs, the quadratic-transform
multipliers, the precoder (bisection on the power multiplier), and the
scattering pair (per-cell solver for the single-connected architecture,
Riemannian CG otherwise). The recorded objective is the true sum-rate,
recomputed from raw channels each iteration, and the loop stops on its
relative change. Pure modes serve only their own side's users; the blocked
side contributes zero rate.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from . import fp
from .channel import generate_channels
from .manifold import build_quadratic_data, solve_group_connected
from .precoder import update_precoder, mmse_initial_precoder
from .ris import Mode, ArchKind, BdRisState, effective_channel, project_to_case, validate
from .rng import substream, STREAM_INIT
from .singlecell import build_sc_data, solve_single_connected


class NumericFailureError(RuntimeError):
    """Raised when the objective or an iterate stops being finite."""


# Scattering sweeps per outer iteration. One Gauss-Seidel pass over the
# groups (or cells) per iteration converges in fewer total sweeps than
# running each inner solve to its own fixed point, because the auxiliaries
# and the precoder are refreshed in between; every pass still ascends, so
# the objective trace stays monotone.
INNER_SWEEPS = 1


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    f_o: float
    power_used: float
    constraint_residual: float


@dataclass(eq=False)
class RunResult:
    sum_rate: float
    trace: list
    w: np.ndarray
    state: BdRisState
    iterations: int
    wall_time_s: float
    served_users: tuple = field(default_factory=tuple)

    @property
    def objective_trace(self):
        return np.array([row.f_o for row in self.trace])


def initialize(scenario, cs):
    """Starting point: diagonal split-half coefficients and a normalized MMSE precoder.

    Both diagonals get magnitude 1/sqrt(2) with i.i.d. uniform phases drawn
    from the scenario seed, projected onto the requested mode/architecture
    (pure modes end up with unit-modulus entries on the active side); the
    precoder is scaled to use the full power budget.
    """
    rng = substream(scenario.seed, STREAM_INIT)
    theta_t = rng.uniform(0.0, 2.0 * np.pi, scenario.m)
    theta_r = rng.uniform(0.0, 2.0 * np.pi, scenario.m)
    phi_t = np.diag(np.exp(1j * theta_t) / np.sqrt(2.0))
    phi_r = np.diag(np.exp(1j * theta_r) / np.sqrt(2.0))
    state = project_to_case(phi_t, phi_r, scenario.mode, scenario.arch)
    w = mmse_initial_precoder(cs, state, scenario.noise, scenario.power)
    return state, w


def evaluate(w, state, cs, sigma2):
    """Sum-rate from raw channels, independent of any solver-internal caching."""
    h_eff = np.stack([effective_channel(state, cs, k) for k in range(cs.k)], axis=0)
    return fp.sum_rate(fp.LinkContext(w, h_eff, sigma2))


def _served_users(scenario):
    if scenario.mode is Mode.REFLECTIVE:
        return tuple(k for k, s in enumerate(scenario.sides) if s == "reflective")
    if scenario.mode is Mode.TRANSMISSIVE:
        return tuple(k for k, s in enumerate(scenario.sides) if s == "transmissive")
    return tuple(range(scenario.k))


def run(scenario, cs=None):
    """Optimize one scenario to convergence.

    Returns a :class:`RunResult` whose trace records, per outer iteration,
    the sum-rate, the transmit power in use, and the worst scattering
    feasibility residual. Raises :class:`NumericFailureError` if the
    objective stops being finite.
    """
    t0 = time.perf_counter()
    if cs is None:
        cs = generate_channels(scenario, scenario.seed)
    state, w_full = initialize(scenario, cs)

    served = _served_users(scenario)
    if not served:
        raise ValueError(f"{scenario.mode.value} mode serves no users in this scenario")
    cs_active = cs.restrict(served) if len(served) < cs.k else cs
    w = w_full[:, list(served)]

    sigma2 = scenario.noise
    use_manifold = (scenario.arch.kind is not ArchKind.CW_SC
                    or scenario.sc_algorithm == "manifold")
    groups = scenario.arch.group_count(scenario.m)
    sides = scenario.mode.sides

    trace = []
    previous = None
    for it in range(1, scenario.max_outer + 1):
        h_eff = np.stack([effective_channel(state, cs_active, k)
                          for k in range(cs_active.k)], axis=0)
        ctx = fp.LinkContext(w, h_eff, sigma2)
        iota = fp.update_iota(ctx)
        tau = fp.update_tau(ctx, iota)

        h_bar = tau[:, None] * h_eff
        w = update_precoder(h_bar, iota, scenario.power).w

        if use_manifold:
            data = build_quadratic_data(cs_active, w, iota, tau)
            phi_t, phi_r = solve_group_connected(data, state.phi_t, state.phi_r,
                                                 groups, sides=sides,
                                                 max_sweeps=INNER_SWEEPS)
        else:
            data = build_sc_data(cs_active, w, iota, tau)
            dt, dr = solve_single_connected(data, np.diagonal(state.phi_t),
                                            np.diagonal(state.phi_r), scenario.mode,
                                            max_sweeps=INNER_SWEEPS)
            phi_t, phi_r = np.diag(dt), np.diag(dr)
        state = BdRisState(scenario.mode, scenario.arch, phi_t, phi_r)

        f_o = evaluate(w, state, cs_active, sigma2)
        if not np.isfinite(f_o):
            raise NumericFailureError(f"objective became non-finite at iteration {it}")
        report = validate(state)
        trace.append(TraceRow(it, f_o, float(np.linalg.norm(w) ** 2), report.residual))
        if not report.ok:
            raise NumericFailureError(
                f"scattering state left the feasible set at iteration {it}: {report.reason}")

        if previous is not None and abs(f_o - previous) / max(previous, 1e-12) < scenario.rel_tol:
            break
        previous = f_o

    w_out = np.zeros((scenario.n, scenario.k), dtype=np.complex128)
    w_out[:, list(served)] = w
    return RunResult(sum_rate=trace[-1].f_o, trace=trace, w=w_out, state=state,
                     iterations=len(trace), wall_time_s=time.perf_counter() - t0,
                     served_users=served)
