"""Heat-semigroup curvature condition: variance bound and minimal constant.

The condition under test: for 0 < t <= T and every field g,

    T_t(g^2)(x) - [T_t g(x)]^2  <=  (2t + c_kappa(T) t^2) T_t(Gamma(g,g))(x).

`estimate_ckappa` samples the required constant over a field collection and
a time grid and reports the maximum; it is a lower estimate of the true
minimal constant, since the condition quantifies over the whole energy
space.  `check_commutation` is a sufficient-condition oracle: a nonnegative
margin min_x [T_t Gamma(g) - Gamma(T_t g)](x) for all tested g certifies
that the bound is satisfiable with c_kappa = 0, through the interpolation
identity Var_t(g) = 2 \\int_0^t T_s Gamma(T_{t-s} g) ds.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, NumericalError
from .form import carre_du_champ
from .heat import HeatOperator
from .reports import CurvatureReport

VAR_FLOOR = -1e-12      # round-off clamp threshold, scaled by max(1, |g|_inf^2)


def variance(H: HeatOperator, g, t: float) -> np.ndarray:
    """Pointwise heat variance T_t(g^2) - (T_t g)^2, clamped at zero.

    The field is recentred before squaring (the variance is invariant under
    adding constants), which keeps the cancellation at small t benign.
    Entries below the round-off floor raise, signalling a broken semigroup.
    """
    g = H.space.check_field(g)
    if t < 0:
        raise ConfigError("negative time")
    if t == 0:
        return np.zeros(H.space.n)
    gs = g - 0.5 * (g.max() + g.min())
    out = H.apply_batch(np.column_stack([gs * gs, gs]), t)
    var = out[:, 0] - out[:, 1] ** 2
    floor = VAR_FLOOR * max(1.0, float(np.max(np.abs(gs))) ** 2)
    if float(var.min()) < floor:
        raise NumericalError(
            f"variance {float(var.min()):.3e} below clamp floor {floor:.3e}")
    return np.clip(var, 0.0, None)


def default_sample_fields(H: HeatOperator, seed: int = 0, n_random: int = 32,
                          smoothed: bool = True) -> np.ndarray:
    """Default (n, k) sample stack: coordinates, seeded Gaussians, and their
    heat-smoothed versions T_{h^2} g."""
    space = H.space
    cols = []
    if space.positions is not None:
        for d in range(space.positions.shape[1]):
            cols.append(space.positions[:, d].astype(float))
    rng = np.random.default_rng(seed)
    for _ in range(n_random):
        cols.append(rng.standard_normal(space.n))
    F = np.column_stack(cols)
    if smoothed:
        h2 = space.min_edge_length ** 2
        F = np.column_stack([F, H.apply_batch(F, h2)])
    return F


def default_time_grid(H: HeatOperator, T: float, points: int = 24) -> np.ndarray:
    """Geometric grid in [h^2, T]; binding values sit at small t."""
    h2 = H.space.min_edge_length ** 2
    if T < h2 * (1 - 1e-12):
        raise ConfigError(f"horizon T={T} below the mesh time h^2={h2}")
    return np.unique(np.geomspace(min(h2, T), T, points))


def estimate_ckappa(H: HeatOperator, T: float, samples=None, t_grid=None,
                    seed: int = 0, n_random: int = 32) -> CurvatureReport:
    """Smallest sampled constant making the variance bound hold up to time T.

    For each sampled field g, time t and vertex x with T_t(Gamma(g,g))(x) > 0,

        required(g, t, x) = max(0, [Var_t(g)(x) / T_t Gamma(g)(x) - 2t] / t^2),

    and c_kappa is the maximum over the sample.  Where T_t Gamma vanishes
    the variance must vanish too (checked; anything else signals numerical
    corruption).  The result is floored at zero and is a lower estimate of
    the true minimal constant.
    """
    if not (T > 0):
        raise ConfigError("horizon T must be positive")
    if t_grid is None:
        t_grid = default_time_grid(H, T)
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid <= 0) or np.any(t_grid > T * (1 + 1e-12)):
        raise ConfigError("t grid must lie in (0, T]")
    if samples is None:
        samples = default_sample_fields(H, seed=seed, n_random=n_random)
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.shape[0] != H.space.n:
        samples = samples.T
    k = samples.shape[1]
    if k == 0:
        raise ConfigError("empty sample collection")

    # recentre per field; stack [g~^2 | g~ | Gamma(g)] and sweep the grid once
    mid = 0.5 * (samples.max(axis=0) + samples.min(axis=0))
    gs = samples - mid[None, :]
    gammas = np.column_stack([carre_du_champ(H.space, gs[:, i]) for i in range(k)])
    stack = np.column_stack([gs * gs, gs, gammas])
    scale2 = np.maximum(1.0, np.max(np.abs(gs), axis=0) ** 2)

    c_kappa = 0.0
    argmax = (0, float(t_grid[0]), 0)
    profile = []
    for t, out in H.apply_grid(stack, np.sort(t_grid)):
        var = out[:, :k] - out[:, k:2 * k] ** 2
        tg = out[:, 2 * k:]
        bad = var < VAR_FLOOR * scale2[None, :]
        if np.any(bad):
            raise NumericalError(f"variance below clamp floor at t={t}")
        np.clip(var, 0.0, None, out=var)
        wtol = 1e-13 * np.maximum(np.max(tg, axis=0), 1e-300)
        degenerate = tg <= wtol[None, :]
        if np.any(degenerate & (var > 1e-10 * scale2[None, :])):
            raise NumericalError(
                f"vanishing T_t Gamma with nonvanishing variance at t={t}")
        req = np.zeros_like(var)
        ok = ~degenerate
        req[ok] = (var[ok] / tg[ok] - 2.0 * t) / (t * t)
        np.clip(req, 0.0, None, out=req)
        m = float(req.max())
        profile.append((float(t), m))
        if m > c_kappa:
            c_kappa = m
            x, f = np.unravel_index(int(np.argmax(req)), req.shape)
            argmax = (int(f), float(t), int(x))
    return CurvatureReport(T=float(T), c_kappa=float(c_kappa), n_fields=k,
                           argmax=argmax, per_t_profile=profile)


def check_commutation(H: HeatOperator, g, t: float) -> float:
    """min_x [T_t Gamma(g,g) - Gamma(T_t g, T_t g)](x).

    Nonnegative margins across a field collection certify c_kappa = 0.
    """
    if not (t > 0):
        raise ConfigError("t must be positive")
    g = H.space.check_field(g)
    gamma = carre_du_champ(H.space, g)
    out = H.apply_batch(np.column_stack([g, gamma]), t)
    return float(np.min(out[:, 1] - carre_du_champ(H.space, out[:, 0])))
