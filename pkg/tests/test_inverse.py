import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import K, constant_field
from gibc.assembly import ImpedanceField, assemble_system, solve_plane_waves
from gibc.errors import InvalidArgument
from gibc.farfield import DirectionSet, farfield_from_trace, uniform_incidence
from gibc.inverse import (LAMBDA, MU, InverseProblem, InversionConfig, eval_cost, gradient_functionals,
                          h1_smooth, initial_state, descent_step, project, reconstruct, smoothing_matrix)

N_B = 128


def observed(disc, imp, n_waves=4):
    dirs = DirectionSet.apertures(uniform_incidence(n_waves), 12)
    return farfield_from_trace(solve_plane_waves(assemble_system(disc, imp), dirs.incident), dirs)


@pytest.fixture(scope="module")
def problem(ellipse_disc):
    th = ellipse_disc.curve.t
    truth = ImpedanceField(np.full(N_B, 1j), 1.0 + 0.3 * np.cos(2 * th))
    data = observed(ellipse_disc, truth)
    return InverseProblem(ellipse_disc, data, data)


def test_gradient_matches_finite_differences(problem, rng):
    imp = constant_field(N_B, 0.6j, 0.6)
    ev = eval_cost(problem, imp)
    g_lam, g_mu = gradient_functionals(problem, ev)
    eps = 1e-6
    for which, g in ((LAMBDA, g_lam), (MU, g_mu)):
        v = rng.normal(size=N_B)
        if which == LAMBDA:
            plus, minus = imp.with_values(lam=imp.lam + 1j * eps * v), imp.with_values(lam=imp.lam - 1j * eps * v)
        else:
            plus, minus = imp.with_values(mu=imp.mu + eps * v), imp.with_values(mu=imp.mu - eps * v)
        fd = (eval_cost(problem, plus).cost - eval_cost(problem, minus).cost) / (2 * eps)
        assert g @ v == pytest.approx(fd, rel=1e-5)


def test_zero_residual_gives_zero_gradient(problem):
    disc = problem.disc
    imp = constant_field(N_B, 0.5j, 0.8)
    data = observed(disc, imp)
    p = InverseProblem(disc, data)
    ev = eval_cost(p, imp)
    assert ev.cost == 0.0
    g_lam, g_mu = gradient_functionals(p, ev)
    assert not np.any(g_lam) and not np.any(g_mu)


def test_smoothing_constant_mode(ellipse_disc):
    c = ellipse_disc.curve
    delta = h1_smooth(c, np.asarray(c.weights), 3.0, 2.0)
    assert np.allclose(delta, 2.0)


def test_smoothing_damps_oscillations_with_eta(ellipse_disc):
    c = ellipse_disc.curve
    g = c.weights * np.cos(20 * c.t)
    ratio = np.linalg.norm(h1_smooth(c, g, 1.0, 1.0)) / np.linalg.norm(h1_smooth(c, g, 100.0, 1.0))
    assert ratio >= 50


def test_smoothing_matches_dense_solve(ellipse_disc, rng):
    c = ellipse_disc.curve
    g = rng.normal(size=N_B)
    A = smoothing_matrix(c, 0.7).toarray()
    assert np.allclose(h1_smooth(c, g, 0.7, 1.5), np.linalg.solve(A, 1.5 * g))
    assert np.allclose(A, A.T)
    with pytest.raises(InvalidArgument):
        h1_smooth(c, g, 0.0, 1.0)


@given(seed=st.integers(0, 1000))
def test_projection_onto_admissible_set(seed):
    g = np.random.default_rng(seed)
    lam = g.normal(size=16) + 1j * g.normal(size=16)
    mu = g.normal(size=16) - 1j * np.abs(g.normal(size=16))
    p = project(ImpedanceField(lam, mu), 0.01)
    assert p.satisfies_h()
    assert np.array_equal(p.lam.real, lam.real) and np.array_equal(p.mu.imag, mu.imag)
    ok = (lam.imag >= 0)
    assert np.array_equal(p.lam[ok], lam[ok])
    assert np.array_equal(project(p, 0.01).lam, p.lam)


def test_config_validation():
    with pytest.raises(InvalidArgument):
        InversionConfig(eta1=0.0)
    with pytest.raises(InvalidArgument):
        InversionConfig(unknowns=("kappa",))
    with pytest.raises(InvalidArgument):
        InversionConfig(max_iter=0)


def test_lambda_step_decreases_cost(problem):
    cfg = InversionConfig()
    state = initial_state(problem, cfg, constant_field(N_B, 0.5j, 0.5))
    f0 = state.cost
    assert descent_step(problem, state, cfg, LAMBDA)
    assert state.cost < f0
    assert state.imp.satisfies_h()


def test_gradient_balance_is_recorded(problem):
    ev = eval_cost(problem, constant_field(N_B, 0.5j, 0.5))
    g_lam, g_mu = gradient_functionals(problem, ev)
    # the impedance term couples more strongly than the surface term at k=9; recorded, not enforced
    assert np.linalg.norm(g_lam) > 0 and np.linalg.norm(g_mu) > 0


def test_reconstruction_history(problem):
    cfg = InversionConfig(max_iter=12)
    init = constant_field(N_B, 0.5j, 0.5)
    state = reconstruct(problem, cfg, init)
    F = [h["F"] for h in state.history]
    assert all(b <= a for a, b in zip(F, F[1:]))
    assert state.imp.satisfies_h()
    assert state.history[0]["Error"] > state.error
    assert state.stop_reason
    assert [h["step"] for h in state.history[1:5]] == [LAMBDA, MU, LAMBDA, MU]


def test_single_unknown_keeps_the_other_fixed(problem):
    cfg = InversionConfig(max_iter=4, unknowns=(MU,))
    init = constant_field(N_B, 1j, 0.5)
    state = reconstruct(problem, cfg, init)
    assert np.array_equal(state.imp.lam, init.lam)
    assert not np.array_equal(state.imp.mu, init.mu)


def test_fixed_point_stops_immediately(problem):
    disc = problem.disc
    imp = constant_field(N_B, 1j, 1.0)
    p = InverseProblem(disc, observed(disc, imp))
    state = reconstruct(p, InversionConfig(), imp)
    assert state.stop_reason == "zero misfit" and state.iteration == 0
