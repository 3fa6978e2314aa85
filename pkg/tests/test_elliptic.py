"""Weak solver and the Caccioppoli / sup-bound / Harnack / Hoelder checks."""

import numpy as np
import pytest

from mmslab import ConfigError, NumericalError
from mmslab import space as sp_mod
from mmslab.elliptic import (Problem, check_caccioppoli, classify_harmonicity,
                             holder_fit, local_sup_bound, solve, weak_harnack,
                             weak_residual)
from mmslab.space import metric_ball


def uniform_square(h):
    return sp_mod.weighted_grid_2d(((-1.0, 1.0), (-1.0, 1.0)), h, "constant")


def interior_of(space):
    return np.setdiff1d(np.arange(space.n), space.rim)


def sqrt_square_solution(h):
    g = sp_mod.weighted_grid_2d(((-1.0, 1.0), (-1.0, 1.0)), h, "sqrt_abs_x")
    x = g.positions[:, 0]
    bc = np.sign(x) * np.sqrt(np.abs(x))
    u = solve(Problem(g, interior_of(g), bc))
    return g, u, bc


def test_affine_solved_exactly():
    g = uniform_square(1 / 16)
    affine = 0.3 + 1.7 * g.positions[:, 0] - 0.4 * g.positions[:, 1]
    prob = Problem(g, interior_of(g), affine)
    u = solve(prob)
    assert np.max(np.abs(u - affine)) <= 1e-10
    assert weak_residual(prob, u) <= 1e-10


def test_weak_residual_with_zeroth_order_term():
    g = uniform_square(1 / 8)
    prob = Problem(g, interior_of(g), np.ones(g.n),
                   lam=np.full(g.n, 0.35), source=np.zeros(g.n))
    u = solve(prob)
    assert weak_residual(prob, u) <= 1e-9 * (np.max(np.abs(u)) + 0.0 + 1.0)


def test_negative_lambda_rejected_when_indefinite():
    g = uniform_square(1 / 8)
    prob = Problem(g, interior_of(g), np.ones(g.n), lam=np.full(g.n, -1000.0))
    with pytest.raises(NumericalError):
        solve(prob)


def test_mildly_negative_lambda_certified_and_solved():
    g = uniform_square(1 / 8)
    # far below the first Dirichlet eigenvalue ~ pi^2/2 of the square
    prob = Problem(g, interior_of(g), np.ones(g.n), lam=np.full(g.n, -1.0))
    u = solve(prob)
    assert weak_residual(prob, u) <= 1e-9 * (np.max(np.abs(u)) + 1.0) * 8


def test_full_space_domain_rejected():
    # a proper domain always touches its complement on a connected graph, so
    # the lambda = 0 system is singular only when no boundary vertex is left
    g = uniform_square(1 / 4)
    with pytest.raises(ConfigError):
        Problem(g, np.arange(g.n), np.ones(g.n))


def test_detached_center_is_pinned_by_its_removed_ring():
    g = uniform_square(1 / 4)
    hole = metric_ball(g, g.vertex_at((0.0, 0.0)), 0.3).members
    domain = np.setdiff1d(interior_of(g), hole)
    domain = np.concatenate([domain, [g.vertex_at((0.0, 0.0))]])
    bc = np.full(g.n, 2.0)
    u = solve(Problem(g, domain, bc))
    assert u[g.vertex_at((0.0, 0.0))] == pytest.approx(2.0)


def test_1d_sqrt_weight_converges_at_half_rate():
    errs = []
    for h in (1 / 8, 1 / 16, 1 / 32, 1 / 64):
        g = sp_mod.weighted_grid_1d((-1.0, 1.0), h, "sqrt_abs_x")
        x = g.positions[:, 0]
        exact = np.sign(x) * np.sqrt(np.abs(x))
        u = solve(Problem(g, interior_of(g), exact))
        errs.append(float(np.max(np.abs(u - exact))))
    assert all(errs[i] > errs[i + 1] for i in range(3))
    # observed rate approaches the h^{1/2} law from below (0.385 over this
    # range, per-halving ratios increasing toward sqrt(2))
    slope = np.polyfit(np.log([1 / 8, 1 / 16, 1 / 32, 1 / 64]), np.log(errs), 1)[0]
    assert 0.3 <= slope <= 0.6
    ratios = [errs[i] / errs[i + 1] for i in range(3)]
    assert all(r1 < r2 for r1, r2 in zip(ratios, ratios[1:]))
    assert ratios[-1] >= 1.3


def test_classify_harmonicity():
    g = uniform_square(1 / 8)
    interior = interior_of(g)
    x2 = g.positions[:, 0] ** 2 + g.positions[:, 1] ** 2
    assert classify_harmonicity(g, -x2, interior)[0] == "superharmonic"
    assert classify_harmonicity(g, x2, interior)[0] == "subharmonic"
    u = solve(Problem(g, interior, g.positions[:, 0].astype(float)))
    label, margin = classify_harmonicity(g, u, interior)
    assert label == "harmonic" and margin <= 1e-9
    mixed = g.positions[:, 0] ** 3        # discrete Laplacian 6x changes sign
    assert classify_harmonicity(g, mixed, interior)[0] == "neither"


def test_maximum_principle_random_boundary():
    g = uniform_square(1 / 8)
    rng = np.random.default_rng(0)
    interior = interior_of(g)
    for _ in range(3):
        bc = rng.standard_normal(g.n)
        u = solve(Problem(g, interior, bc))
        lo, hi = bc[g.rim].min(), bc[g.rim].max()
        assert np.min(u[interior]) >= lo - 1e-10
        assert np.max(u[interior]) <= hi + 1e-10


def test_comparison_principle():
    g = uniform_square(1 / 8)
    rng = np.random.default_rng(1)
    interior = interior_of(g)
    a = rng.standard_normal(g.n)
    b = a + np.abs(rng.standard_normal(g.n))
    ua = solve(Problem(g, interior, a))
    ub = solve(Problem(g, interior, b))
    assert np.all(ua <= ub + 1e-10)


# -- Caccioppoli -------------------------------------------------------------

def test_caccioppoli_constant_field_sentinel():
    g = uniform_square(1 / 8)
    rep = check_caccioppoli(g, np.full(g.n, 2.0), np.zeros(g.n),
                            g.vertex_at((0.0, 0.0)), 0.25, 0.5)
    assert rep.lhs == 0.0 and rep.constant == 0.0


def test_caccioppoli_stable_under_refinement():
    consts = []
    for h in (1 / 8, 1 / 16):
        g = uniform_square(h)
        bc = g.positions[:, 0] ** 2 - g.positions[:, 1] ** 2
        u = solve(Problem(g, interior_of(g), bc))
        rep = check_caccioppoli(g, u, np.zeros(g.n), g.vertex_at((0.0, 0.0)),
                                0.25, 0.5)
        consts.append(rep.constant)
    assert max(consts) / min(consts) <= 2.0


def test_caccioppoli_eigen_type_across_inner_radii():
    g = uniform_square(1 / 16)
    lam = np.full(g.n, 0.8)
    prob = Problem(g, interior_of(g), np.ones(g.n), lam=lam)
    u = solve(prob)
    gfield = -lam * u
    y0 = g.vertex_at((0.0, 0.0))
    consts = [check_caccioppoli(g, u, gfield, y0, r1, 0.6).constant
              for r1 in (0.2, 0.3, 0.4)]
    assert all(np.isfinite(c) and c >= 0 for c in consts)


def test_caccioppoli_degenerate_annulus():
    g = uniform_square(1 / 8)
    with pytest.raises(ConfigError):
        check_caccioppoli(g, np.zeros(g.n), np.zeros(g.n), 0, 0.25, 0.27)


# -- Moser sup bound ---------------------------------------------------------

def test_sup_bound_constant_field():
    g = uniform_square(1 / 8)
    ball = metric_ball(g, g.vertex_at((0.0, 0.0)), 0.25)
    rep = local_sup_bound(g, np.ones(g.n), np.zeros(g.n), ball, 1.0)
    assert rep.lhs == pytest.approx(1.0) and rep.constant == pytest.approx(1.0)


def test_sup_bound_power_mean_ordering():
    g, u, _ = sqrt_square_solution(1 / 16)
    u = u + 2.0     # positive
    ball = metric_ball(g, g.vertex_at((0.0, 0.0)), 0.2)
    c1 = local_sup_bound(g, u, np.zeros(g.n), ball, 1.0).constant
    c2 = local_sup_bound(g, u, np.zeros(g.n), ball, 2.0).constant
    assert c1 >= c2 - 1e-12


def test_sup_bound_refinement_stability_and_remark_column():
    consts = []
    for h in (1 / 8, 1 / 16):
        g = uniform_square(h)
        bc = g.positions[:, 0] ** 2 - g.positions[:, 1] ** 2 + 3.0
        u = solve(Problem(g, interior_of(g), bc))
        ball = metric_ball(g, g.vertex_at((0.0, 0.0)), 0.25)
        rep = local_sup_bound(g, u, np.zeros(g.n), ball, 1.0, Q=2.5)
        assert "lambda_normalized" in rep.extras
        consts.append(rep.constant)
    assert max(consts) / min(consts) <= 2.0


# -- weak Harnack -------------------------------------------------------------

def test_harnack_constant_field_is_one():
    g = uniform_square(1 / 8)
    ball = metric_ball(g, g.vertex_at((0.0, 0.0)), 0.25)
    for q in (0.25, 0.5, 1.0, 2.0):
        rep = weak_harnack(g, np.ones(g.n), ball, q)
        assert rep.constant == pytest.approx(1.0, rel=1e-12)


def _positive_harmonic_on_annulus(n=32):
    sp = sp_mod.uniform_torus(n, n)
    y0 = sp.vertex_at((n // 2, n // 2))
    d = sp.distances_from(y0)
    domain = np.flatnonzero((d > 2) & (d < n // 3))
    u = solve(Problem(sp, domain, d.astype(float) + 1.0))
    xc = int(np.flatnonzero(d == n // 6)[0])
    return sp, u, metric_ball(sp, xc, 1.5)


def test_harnack_positive_harmonic():
    sp, u, ball = _positive_harmonic_on_annulus()
    rep = weak_harnack(sp, u, ball, 0.5)
    assert np.isfinite(rep.constant) and rep.constant >= 1.0
    assert rep.extras["largest_admissible_q"] is not None


def test_harnack_superharmonic_barrier():
    # harmonic plus a positive superharmonic bump is still superharmonic
    sp, u, ball = _positive_harmonic_on_annulus()
    y0 = ball.center
    d = sp.distances_from(y0)
    domain = np.flatnonzero(d < 4)
    bump_prob = Problem(sp, domain, np.zeros(sp.n), source=np.ones(sp.n))
    bump = solve(bump_prob)
    assert np.min(bump[domain]) >= -1e-12
    rep = weak_harnack(sp, u + bump, ball, 0.5)
    assert rep.extras["harmonicity"] in ("superharmonic", "harmonic")
    assert np.isfinite(rep.constant)


def test_harnack_rejects_sign_changing(cycle32):
    u = np.sin(2 * np.pi * np.arange(32) / 32)
    ball = metric_ball(cycle32, 0, 3.0)
    with pytest.raises(ConfigError):
        weak_harnack(cycle32, u, ball, 0.5)


# -- Hoelder -------------------------------------------------------------------

def test_holder_affine_is_lipschitz():
    g = uniform_square(1 / 16)
    u = solve(Problem(g, interior_of(g),
                      0.5 + g.positions[:, 0] - 2 * g.positions[:, 1]))
    ball = metric_ball(g, g.vertex_at((0.0, 0.0)), 0.2)
    rep = holder_fit(g, u, ball, np.zeros(g.n))
    assert rep.gamma == pytest.approx(1.0)
    assert 0 < rep.constant < 10


def test_holder_constant_field():
    g = uniform_square(1 / 16)
    ball = metric_ball(g, g.vertex_at((0.0, 0.0)), 0.2)
    rep = holder_fit(g, np.full(g.n, 3.3), ball, np.zeros(g.n))
    assert rep.gamma == 1.0 and rep.constant == 0.0


def test_holder_sqrt_counterexample_exponent():
    # the continuum solution sgn(x) sqrt|x| is exactly C^{1/2} across x = 0
    g, u, _ = sqrt_square_solution(1 / 64)
    ball = metric_ball(g, g.vertex_at((0.0, 0.0)), 0.2)
    rep = holder_fit(g, u, ball, np.zeros(g.n))
    assert 0.4 <= rep.gamma <= 0.6 + 1e-12
    assert rep.constant <= 1e3


def test_holder_small_ball_rejected():
    g = uniform_square(1 / 8)
    tiny = metric_ball(g, g.vertex_at((0.0, 0.0)), 0.05)
    with pytest.raises(ConfigError):
        holder_fit(g, np.zeros(g.n), tiny, np.zeros(g.n))
