"""Weak-form elliptic solver and local regularity checks.

Solves, on an interior vertex set Omega with Dirichlet data outside,

    -E(u, phi) - \\int lambda u phi dmu + \\int f phi dmu = 0

for every interior hat function phi (the affine right-side family
g(x, u) = -lambda(x) u + f(x) keeps the interior system symmetric positive
definite).  The checks measure the constants in the Caccioppoli inequality,
the local sup bound, the weak Harnack inequality, and the Hoelder seminorm
of the solution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, dijkstra
from scipy.sparse.linalg import ArpackNoConvergence, cg, eigsh

from .errors import ConfigError, NumericalError
from .form import carre_du_champ
from .reports import HoelderReport, VerificationReport
from .space import Ball, MetricMeasureSpace, metric_ball


@dataclass
class Problem:
    """Dirichlet problem for L u = -lambda u + f on a vertex domain.

    `boundary_values` is a full-length field whose values outside `domain`
    act as Dirichlet data; `lam` and `source` are full-length fields read on
    the domain only.
    """

    space: MetricMeasureSpace
    domain: np.ndarray
    boundary_values: np.ndarray
    lam: np.ndarray = None
    source: np.ndarray = None

    def __post_init__(self):
        self.domain = np.unique(np.asarray(self.domain, dtype=np.intp))
        n = self.space.n
        if self.domain.size == 0 or self.domain[0] < 0 or self.domain[-1] >= n:
            raise ConfigError("domain must be a nonempty set of valid vertices")
        if self.domain.size >= n:
            raise ConfigError("domain must leave at least one boundary vertex")
        self.boundary_values = self.space.check_field(self.boundary_values)
        self.lam = (np.zeros(n) if self.lam is None
                    else self.space.check_field(self.lam))
        self.source = (np.zeros(n) if self.source is None
                       else self.space.check_field(self.source))


def _interior_system(problem: Problem):
    space = problem.space
    dom = problem.domain
    L = space.laplacian().tocsr()
    A = L[dom][:, dom] + sp.diags((problem.lam * space.mu)[dom])
    u_b = problem.boundary_values.copy()
    u_b[dom] = 0.0
    b = (space.mu * problem.source)[dom] - (L @ u_b)[dom]
    return A.tocsr(), b, u_b


def _certify_positive_definite(problem: Problem, A: sp.csr_matrix):
    """Positive-definiteness certificate for the interior operator.

    With lambda >= 0 the operator is SPD as soon as every component of the
    induced interior subgraph has an edge to the boundary (or carries
    positive lambda); only for sign-indefinite lambda is a Lanczos estimate
    of the smallest eigenvalue run.
    """
    space = problem.space
    dom = problem.domain
    lam_dom = problem.lam[dom]
    if np.min(lam_dom) >= 0:
        Wd = space.conductance_matrix[dom][:, dom]
        ncomp, labels = connected_components(Wd, directed=False)
        full_deg = space.degree[dom]
        inner_deg = np.asarray(Wd.sum(axis=1)).ravel()
        leak = full_deg - inner_deg > 1e-14 * full_deg
        for comp in range(ncomp):
            members = labels == comp
            if not (np.any(leak[members]) or np.any(lam_dom[members] > 0)):
                raise ConfigError(
                    "singular problem: an interior component touches no "
                    "boundary vertex and lambda vanishes on it")
        return None
    m = A.shape[0]
    if m == 1:
        lam_min = float(A[0, 0])
    else:
        try:
            vals = eigsh(A, k=1, which="SA", tol=1e-6, maxiter=5000,
                         return_eigenvectors=False)
            lam_min = float(vals[0])
        except ArpackNoConvergence as e:
            if e.eigenvalues is not None and len(e.eigenvalues):
                lam_min = float(e.eigenvalues[0])
            else:
                raise NumericalError("Lanczos estimate did not converge") from e
    scale = float(np.max(np.abs(A.diagonal())))
    if lam_min <= 1e-12 * scale:
        raise NumericalError(
            f"interior operator not positive definite: smallest eigenvalue "
            f"estimate {lam_min:.3e} (lambda too negative)")
    return lam_min


def weak_residual(problem: Problem, u) -> float:
    """Max interior-hat residual of the weak form, evaluated from scratch."""
    space = problem.space
    u = space.check_field(u)
    L = space.laplacian()
    r = ((space.mu * problem.source) - (L @ u)
         - problem.lam * space.mu * u)[problem.domain]
    return float(np.max(np.abs(r))) if r.size else 0.0


def solve(problem: Problem, rtol: float = 1e-13, maxiter: int = None) -> np.ndarray:
    """Solve the Dirichlet problem by preconditioned conjugate gradients.

    The returned field agrees with `boundary_values` outside the domain and
    satisfies the weak form on every interior hat to within
    1e-9 * (|u|_inf + |f|_inf) * operator scale, re-verified independently
    of the solver.
    """
    A, b, u_b = _interior_system(problem)
    _certify_positive_definite(problem, A)
    if float(np.max(np.abs(b))) == 0.0:
        v = np.zeros_like(b)
    else:
        M = sp.diags(1.0 / A.diagonal())
        v, info = cg(A, b, rtol=rtol, atol=0.0, M=M,
                     maxiter=maxiter if maxiter else 40 * int(np.sqrt(A.shape[0]) + 100))
        if info != 0:
            raise NumericalError(f"CG failed to converge (info={info})")
    u = u_b
    u[problem.domain] = v

    scale = (float(np.max(np.abs(u))) + float(np.max(np.abs(problem.source))))
    op_scale = float(np.max(problem.space.degree)) + float(
        np.max(np.abs(problem.lam * problem.space.mu)))
    tol = 1e-9 * max(scale * op_scale, 1e-300)
    res = weak_residual(problem, u)
    if res > tol:
        raise NumericalError(f"weak-form residual {res:.3e} exceeds {tol:.3e}")
    return u


def classify_harmonicity(space: MetricMeasureSpace, u, domain, tol=None):
    """Classify u on a vertex set via the sign of -E(u, hat) over its hats.

    Returns (label, margin) with label in {"harmonic", "subharmonic",
    "superharmonic", "neither"}; the margin is the worst deviation from the
    defining inequalities of the assigned class.
    """
    u = space.check_field(u)
    domain = np.asarray(domain, dtype=np.intp)
    s = -(space.laplacian() @ u)[domain]
    if tol is None:
        scale = (space.degree * np.abs(u) + space.conductance_matrix @ np.abs(u))
        tol = 1e-8 * max(float(np.max(scale[domain])), 1e-300)
    lo, hi = float(np.min(s)), float(np.max(s))
    if lo >= -tol and hi <= tol:
        return "harmonic", max(abs(lo), abs(hi))
    if lo >= -tol:
        return "subharmonic", max(0.0, -lo)
    if hi <= tol:
        return "superharmonic", max(0.0, hi)
    return "neither", max(-lo, hi)


def check_caccioppoli(space: MetricMeasureSpace, u, g_field, y0: int,
                      r1: float, r2: float) -> VerificationReport:
    """Interior gradient energy against L2 mass plus the source coupling:

        \\int_{B(y0,r1)} Gamma(u,u) dmu
            <= C/(r2-r1)^2 \\int_{B(y0,r2)} u^2 dmu + \\int_{B(y0,r2)} |g||u| dmu
    """
    if not (r1 < r2):
        raise ConfigError("need r1 < r2")
    if r2 - r1 < space.min_edge_length * (1 - 1e-12):
        raise ConfigError("degenerate annulus: r2 - r1 below mesh scale")
    u = space.check_field(u)
    g_field = space.check_field(g_field)
    inner = metric_ball(space, y0, r1)
    outer = metric_ball(space, y0, r2)
    lhs = float(space.mu[inner.members]
                @ carre_du_champ(space, u)[inner.members])
    mass = float(space.mu[outer.members] @ u[outer.members] ** 2)
    coupling = float(space.mu[outer.members]
                     @ (np.abs(g_field) * np.abs(u))[outer.members])
    if lhs <= coupling or mass == 0.0:
        C = 0.0          # sentinel: the source term alone already dominates
    else:
        C = (lhs - coupling) * (r2 - r1) ** 2 / mass
    rhs = mass / (r2 - r1) ** 2
    return VerificationReport(
        name="caccioppoli", lhs=lhs, rhs=rhs,
        constant=float(C), margin=float(C * rhs + coupling - lhs),
        passed=True,
        extras={"r1": float(r1), "r2": float(r2), "mass_term": mass,
                "coupling_term": coupling})


def local_sup_bound(space: MetricMeasureSpace, u, lam, ball: Ball,
                    p: float, Q: float = None) -> VerificationReport:
    """Realized constant of |u|_inf(B) <= C (avg_{2B} |u|^p dmu)^{1/p}."""
    if not (p > 0):
        raise ConfigError("p must be positive")
    u = space.check_field(u)
    outer = metric_ball(space, ball.center, 2 * ball.radius)
    lhs = float(np.max(np.abs(u[ball.members]))) if ball.members.size else 0.0
    mu2 = space.mu[outer.members]
    rhs = float((mu2 @ np.abs(u[outer.members]) ** p / mu2.sum()) ** (1.0 / p))
    C = lhs / rhs if rhs > 0 else 0.0
    extras = {"p": float(p)}
    if Q is not None and Q > 2:
        lam = space.check_field(lam)
        lam_sup = float(np.max(np.abs(lam[outer.members])))
        extras["lambda_normalized"] = C / (1.0 + lam_sup * ball.radius ** 2) ** (Q / 4)
        extras["Q"] = float(Q)
    return VerificationReport(name="local_sup_bound", lhs=lhs, rhs=rhs,
                              constant=float(C), margin=0.0, passed=True,
                              extras=extras)


def weak_harnack(space: MetricMeasureSpace, u, ball: Ball, q: float,
                 cap: float = 1e3, q_grid=None) -> VerificationReport:
    """Realized constant of (avg_{2B} u^q dmu)^{1/q} <= C inf_B u.

    Requires u > 0 and superharmonic (or harmonic) on the doubled ball.
    Scans a q grid and reports the largest exponent whose constant stays
    below the cap.
    """
    if not (q > 0):
        raise ConfigError("q must be positive")
    u = space.check_field(u)
    outer = metric_ball(space, ball.center, 2 * ball.radius)
    if np.min(u[outer.members]) <= 0:
        raise ConfigError("u must be strictly positive on the doubled ball")
    label, margin = classify_harmonicity(space, u, outer.members)
    if label not in ("superharmonic", "harmonic"):
        raise ConfigError(f"u must be superharmonic on the doubled ball, got {label}")

    mu2 = space.mu[outer.members]
    inf_b = float(np.min(u[ball.members]))

    def realized(qq):
        avg = float(mu2 @ u[outer.members] ** qq / mu2.sum())
        return avg ** (1.0 / qq) / inf_b

    C = realized(q)
    if q_grid is None:
        q_grid = np.geomspace(1.0 / 16.0, 4.0, 15)
    scan = [(float(qq), float(realized(qq))) for qq in q_grid]
    admissible = [qq for qq, cc in scan if cc <= cap]
    return VerificationReport(
        name="weak_harnack", lhs=float(realized(q) * inf_b), rhs=inf_b,
        constant=float(C), margin=0.0, passed=C <= cap,
        extras={"q": float(q), "q_scan": scan,
                "largest_admissible_q": max(admissible) if admissible else None,
                "cap": float(cap), "harmonicity": label,
                "harmonicity_margin": float(margin)})


def _pair_distances(space: MetricMeasureSpace, hull: np.ndarray,
                    sources: np.ndarray) -> np.ndarray:
    """Distances from `sources` to every hull vertex, inside the hull subgraph.

    Geodesics between vertices of a ball stay inside the 2x hull on the
    grid-like families, so the induced distance matches the global one
    there; it never underestimates it.
    """
    loc = -np.ones(space.n, dtype=np.intp)
    loc[hull] = np.arange(hull.size)
    li, lj = loc[space.edge_i], loc[space.edge_j]
    keep = (li >= 0) & (lj >= 0)
    rows = np.concatenate([li[keep], lj[keep]])
    cols = np.concatenate([lj[keep], li[keep]])
    data = np.concatenate([space.edge_l[keep], space.edge_l[keep]])
    g = sp.csr_matrix((data, (rows, cols)), shape=(hull.size, hull.size))
    return dijkstra(g, directed=False, indices=loc[sources])


def holder_fit(space: MetricMeasureSpace, u, ball: Ball, g_field,
               gamma_step: float = 0.05, cap: float = 1e3,
               n_sources: int = 48, seed: int = 0) -> HoelderReport:
    """Hoelder exponent and constant of u over pairs in the doubled ball:

        |u(x) - u(y)| <= constant * scale * (d(x,y)/R)^gamma,
        scale = |u|_inf(4B) + R^2 |g|_inf(4B).

    The exponent is fitted by log-log regression on the upper envelope of
    |u(x)-u(y)| over distance bins (snapped to the gamma grid), because the
    largest-exponent-under-a-cap rule saturates at mesh scale; the cap is
    kept as a validity guard and gamma is lowered if the constant exceeds
    it.  Pair distances from a bounded set of seeded source vertices.
    """
    u = space.check_field(u)
    g_field = space.check_field(g_field)
    R = ball.radius
    if ball.members.size < 4:
        raise ConfigError("ball too small for a Hoelder fit (< 4 vertices)")
    two_b = metric_ball(space, ball.center, 2 * R)
    four_b = metric_ball(space, ball.center, 4 * R)
    scale = (float(np.max(np.abs(u[four_b.members])))
             + R ** 2 * float(np.max(np.abs(g_field[four_b.members]))))

    members = two_b.members
    rng = np.random.default_rng(seed)
    if members.size <= n_sources:
        sources = members
    else:
        sources = np.unique(np.concatenate(
            [[ball.center], rng.choice(members, n_sources - 1, replace=False)]))
    D = _pair_distances(space, four_b.members, sources)
    loc = -np.ones(space.n, dtype=np.intp)
    loc[four_b.members] = np.arange(four_b.members.size)
    D = D[:, loc[members]]                      # sources x 2B-members
    ud = np.abs(u[sources][:, None] - u[members][None, :])
    # single-edge increments are one-sided at mesh scale and bias the
    # envelope upward; fit over separations of at least two mesh lengths
    pos = (D >= 2 * space.min_edge_length * (1 - 1e-9)) & np.isfinite(D)
    d_all = D[pos]
    ud_all = ud[pos]
    n_pairs = int(d_all.size)
    if n_pairs == 0:
        raise ConfigError("ball too small for a Hoelder fit (no admissible pairs)")

    if scale == 0.0 or float(ud_all.max(initial=0.0)) <= 1e-14 * max(scale, 1e-300):
        return HoelderReport(gamma=1.0, constant=0.0, ball=ball,
                             pair_sample=n_pairs, scale=scale)

    # envelope: max |du| per log-spaced distance bin, regressed in log-log
    edges = np.geomspace(float(d_all.min()), float(d_all.max()) * (1 + 1e-12), 11)
    which = np.clip(np.digitize(d_all, edges) - 1, 0, 9)
    pts = []
    for b in range(10):
        m = which == b
        if not np.any(m):
            continue
        k = np.argmax(ud_all[m])
        dv, uv = d_all[m][k], ud_all[m][k]
        if uv > 1e-14 * scale:
            pts.append((np.log(dv), np.log(uv)))
    if len(pts) >= 4:
        lx, ly = np.array(pts[1:]).T        # drop the mesh-scale bin
        slope = float(np.polyfit(lx, ly, 1)[0])
    elif len(pts) >= 3:
        lx, ly = np.array(pts).T
        slope = float(np.polyfit(lx, ly, 1)[0])
    else:
        slope = 1.0
    gamma = float(np.clip(np.round(slope / gamma_step) * gamma_step,
                          gamma_step, 1.0))

    def constant_at(gam):
        return float(np.max(ud_all / (scale * (d_all / R) ** gam)))

    const = constant_at(gamma)
    while const > cap and gamma > gamma_step * 1.5:
        gamma = round(gamma - gamma_step, 10)
        const = constant_at(gamma)
    return HoelderReport(gamma=gamma, constant=const, ball=ball,
                         pair_sample=n_pairs, scale=scale)
