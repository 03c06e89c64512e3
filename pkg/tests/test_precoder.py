import numpy as np
import pytest

from bdris import fp
from bdris.numerics import regularized_hermitian_solve
from bdris.precoder import mmse_initial_precoder, update_precoder
from bdris.ris import Architecture, Mode, effective_channel, project_to_case
from helpers import crandn, make_channels


def solved_instance(rng, n=4, k=2, p=1.0):
    h_eff = crandn(rng, k, n)
    sigma2 = rng.uniform(0.5, 1.5, k)
    w0 = crandn(rng, n, k)
    ctx0 = fp.LinkContext(w0, h_eff, sigma2)
    iota = fp.update_iota(ctx0)
    tau = fp.update_tau(ctx0, iota)
    h_bar = tau[:, None] * h_eff
    sol = update_precoder(h_bar, iota, p)
    return h_eff, sigma2, iota, tau, h_bar, sol


def test_all_zero_channels():
    sol = update_precoder(np.zeros((2, 4)), np.zeros(2), 1.0)
    np.testing.assert_array_equal(sol.w, np.zeros((4, 2)))
    assert sol.lam == 0.0 and sol.power_used == 0.0


def test_single_user_rank_one_large_budget():
    h_bar = np.zeros((1, 4), dtype=complex)
    h_bar[0, 0] = 1.0
    sol = update_precoder(h_bar, np.zeros(1), p=100.0)
    assert sol.lam == 0.0
    assert sol.power_used <= 100.0
    w = sol.w[:, 0]
    assert abs(w[0]) > 0
    np.testing.assert_allclose(w[1:], 0, atol=1e-10)


def test_power_constraint_and_slackness():
    rng = np.random.default_rng(0)
    for trial in range(20):
        p = float(rng.uniform(0.1, 5.0))
        _, _, _, _, _, sol = solved_instance(rng, n=4, k=3, p=p)
        assert sol.power_used <= p * (1 + 1e-9)
        assert sol.lam * (p - sol.power_used) <= 1e-6 * p
        if sol.lam > 0:
            assert abs(sol.power_used - p) <= 1e-6 * p


def test_power_monotone_in_lambda():
    # independent oracle: re-solve the linear systems at a grid of multipliers
    rng = np.random.default_rng(1)
    h_bar = crandn(rng, 3, 4)
    iota = rng.uniform(0.0, 3.0, 3)
    gram = h_bar.T @ h_bar.conj()
    rhs = h_bar.T * np.sqrt(1.0 + iota)
    powers = []
    for lam in (0.01, 0.1, 1.0, 10.0):
        w = np.stack([regularized_hermitian_solve(gram, lam, rhs[:, k]) for k in range(3)], axis=1)
        powers.append(np.linalg.norm(w) ** 2)
    assert all(a > b for a, b in zip(powers, powers[1:]))


def test_kkt_stationarity():
    rng = np.random.default_rng(2)
    for _ in range(10):
        _, _, iota, _, h_bar, sol = solved_instance(rng, n=4, k=2, p=0.5)
        gram = h_bar.T @ h_bar.conj()
        grad = 2.0 * (np.sqrt(1.0 + iota)[None, :] * h_bar.T - gram @ sol.w)
        scale = max(np.linalg.norm(grad), np.linalg.norm(2 * sol.lam * sol.w), 1e-12)
        assert np.linalg.norm(grad - 2.0 * sol.lam * sol.w) <= 1e-6 * scale


def test_update_is_block_optimal():
    rng = np.random.default_rng(3)
    p = 1.0
    h_eff, sigma2, iota, tau, h_bar, sol = solved_instance(rng, n=4, k=2, p=p)
    aux = fp.Auxiliaries(iota, tau)
    best = fp.f_tau_tight(fp.LinkContext(sol.w, h_eff, sigma2), aux)
    for _ in range(100):
        w = sol.w + 1e-3 * crandn(rng, 4, 2)
        power = np.linalg.norm(w) ** 2
        if power > p:
            w = w * np.sqrt(p / power)
        probe = fp.f_tau_tight(fp.LinkContext(w, h_eff, sigma2), aux)
        assert probe <= best + 1e-9 * max(1.0, abs(best))


def test_mmse_power_normalization():
    rng = np.random.default_rng(4)
    cs = make_channels(rng, 4, 3, 1, 1)
    state = project_to_case(crandn(rng, 4, 4), crandn(rng, 4, 4),
                            Mode.HYBRID, Architecture.single())
    p = 2.7
    w = mmse_initial_precoder(cs, state, 0.1, p)
    assert np.linalg.norm(w) ** 2 == pytest.approx(p, rel=1e-12)


def test_mmse_single_user_matched_filter():
    rng = np.random.default_rng(5)
    cs = make_channels(rng, 4, 3, 1, 0)
    state = project_to_case(crandn(rng, 4, 4), crandn(rng, 4, 4),
                            Mode.REFLECTIVE, Architecture.full())
    w = mmse_initial_precoder(cs, state, 0.3, 1.0)
    h = effective_channel(state, cs, 0)
    # (h h^H + s I)^{-1} h is collinear with h
    cos = abs(np.vdot(w[:, 0], h)) / (np.linalg.norm(w) * np.linalg.norm(h))
    assert cos == pytest.approx(1.0, abs=1e-10)


def test_mmse_deterministic():
    rng = np.random.default_rng(6)
    cs = make_channels(rng, 4, 3, 1, 1)
    state = project_to_case(crandn(rng, 4, 4), crandn(rng, 4, 4),
                            Mode.HYBRID, Architecture.single())
    w1 = mmse_initial_precoder(cs, state, 0.1, 1.0)
    w2 = mmse_initial_precoder(cs, state, 0.1, 1.0)
    np.testing.assert_array_equal(w1, w2)


def test_mmse_rejects_all_zero():
    rng = np.random.default_rng(7)
    cs = make_channels(rng, 4, 3, 1, 0)
    cs.g = np.zeros((4, 3), dtype=complex)
    state = project_to_case(crandn(rng, 4, 4), crandn(rng, 4, 4),
                            Mode.REFLECTIVE, Architecture.full())
    with pytest.raises(ValueError):
        mmse_initial_precoder(cs, state, 0.1, 1.0)


def test_rejects_bad_budget():
    with pytest.raises(ValueError):
        update_precoder(np.ones((1, 2)), np.zeros(1), 0.0)
