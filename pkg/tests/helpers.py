"""Shared construction helpers for the test suite."""

import numpy as np

from bdris import Architecture, FadingSpec, Mode, Scenario, dbm_to_watts
from bdris.channel import ChannelSet

P5 = dbm_to_watts(5.0)
NOISE = dbm_to_watts(-80.0)


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def random_unitary(rng, n):
    q, r = np.linalg.qr(crandn(rng, n, n))
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def random_stiefel(rng, rows, cols):
    q, _ = np.linalg.qr(crandn(rng, rows, cols))
    return q[:, :cols]


def make_channels(rng, m, n, k_r, k_t, scale=1.0):
    sides = ("reflective",) * k_r + ("transmissive",) * k_t
    return ChannelSet(scale * crandn(rng, m, n),
                      [scale * crandn(rng, m) for _ in range(k_r + k_t)], sides)


def make_scenario(**overrides):
    defaults = dict(n=4, k_r=2, k_t=2, m=8, mode=Mode.HYBRID,
                    arch=Architecture.single(), power=P5, noise=NOISE, seed=7)
    defaults.update(overrides)
    return Scenario(**defaults)


ALL_CASES = [(mode, arch)
             for mode in (Mode.REFLECTIVE, Mode.TRANSMISSIVE, Mode.HYBRID)
             for arch in (Architecture.single(), Architecture.group(4), Architecture.full())]


def rician(kappa_db=5.0):
    kappa = 10.0 ** (kappa_db / 10.0)
    return FadingSpec("rician", kappa, kappa)


def run_scenario_summary(sc):
    from bdris.driver import run

    res = run(sc)
    return {"rate": res.sum_rate, "iters": res.iterations, "max_outer": sc.max_outer,
            "power": sc.power,
            "trace": [(r.f_o, r.power_used, r.constraint_residual) for r in res.trace]}


def pool_run(scenarios):
    from concurrent.futures import ProcessPoolExecutor

    from bdris.experiments import _worker_init, worker_count

    n = worker_count()
    if n == 1 or len(scenarios) <= 1:
        return [run_scenario_summary(s) for s in scenarios]
    with ProcessPoolExecutor(max_workers=n, initializer=_worker_init) as pool:
        return list(pool.map(run_scenario_summary, scenarios, chunksize=1))
