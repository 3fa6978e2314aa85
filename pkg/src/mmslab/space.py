"""Finite weighted graphs as metric measure spaces.

A space is a connected graph with a strictly positive vertex measure ``mu``,
symmetric edge conductances ``c`` and edge lengths ``l``.  The metric is the
shortest-path metric induced by the lengths; balls are open.  Built-in
families: two-point space, uniform cycle, uniform torus, and vertex-centered
finite-volume discretizations of weighted intervals/rectangles (weight
catalog: constant, sqrt|x|, tabulated).

Measured constants:

    mu(B(x, 2r)) <= C_d * mu(B(x, r))                       (doubling)
    mu(B(x, R))  <= C_Q * (R/r)^Q * mu(B(x, r))             (Q-doubling)
    ||u - u_B||_{L2(B)} <= C_P * r * ||sqrt(Gamma(u,u))||_{L2(2B)}

The Poincare left side is the L2 mean oscillation; it dominates the L1 one
by the power-mean inequality, so the reported C_P is valid for the weaker
L1-L2 inequality as well.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, dijkstra

from .errors import ConfigError, NumericalError
from .reports import DoublingReport, PoincareReport

_SQRT2 = np.sqrt(2.0)


class MetricMeasureSpace:
    """Connected weighted graph carrying a measure and a path metric.

    Parameters
    ----------
    mu : array_like
        Strictly positive vertex masses.
    edges : iterable of (i, j, c, l)
        Undirected edges with conductance c > 0 and length l > 0.  Each
        edge is listed once; symmetry is implicit.
    positions : array_like, optional
        Vertex coordinates (n, dim), used for coordinate fields and export.
    name : str
        Label used in reports.
    rim : array_like, optional
        Geometric boundary vertices for grid families (empty otherwise).
    """

    def __init__(self, mu, edges, positions=None, name="", rim=None):
        mu = np.asarray(mu, dtype=float)
        if mu.ndim != 1 or mu.size == 0:
            raise ConfigError("mu must be a nonempty 1-d array")
        if not np.all(np.isfinite(mu)) or np.any(mu <= 0):
            raise ConfigError("every vertex mass must be finite and strictly positive")
        self.mu = mu
        self.name = name

        n = mu.size
        ei, ej, ec, el = [], [], [], []
        seen = set()
        for (i, j, c, l) in edges:
            i, j = int(i), int(j)
            if i == j:
                raise ConfigError(f"self loop at vertex {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise ConfigError(f"edge ({i},{j}) out of range")
            if i > j:
                i, j = j, i
            if (i, j) in seen:
                raise ConfigError(f"duplicate edge ({i},{j})")
            seen.add((i, j))
            if not (c > 0 and l > 0 and np.isfinite(c) and np.isfinite(l)):
                raise ConfigError(f"edge ({i},{j}) needs c > 0 and l > 0, got c={c}, l={l}")
            ei.append(i)
            ej.append(j)
            ec.append(float(c))
            el.append(float(l))
        self.edge_i = np.asarray(ei, dtype=np.intp)
        self.edge_j = np.asarray(ej, dtype=np.intp)
        self.edge_c = np.asarray(ec, dtype=float)
        self.edge_l = np.asarray(el, dtype=float)

        if positions is not None:
            positions = np.atleast_2d(np.asarray(positions, dtype=float))
            if positions.shape[0] != n:
                raise ConfigError("positions must have one row per vertex")
        self.positions = positions
        self.rim = np.asarray([] if rim is None else rim, dtype=np.intp)

        rows = np.concatenate([self.edge_i, self.edge_j])
        cols = np.concatenate([self.edge_j, self.edge_i])
        self._W = sp.csr_matrix(
            (np.concatenate([self.edge_c, self.edge_c]), (rows, cols)), shape=(n, n))
        self._len_graph = sp.csr_matrix(
            (np.concatenate([self.edge_l, self.edge_l]), (rows, cols)), shape=(n, n))
        if n > 1:
            ncomp, _ = connected_components(self._W, directed=False)
            if ncomp != 1:
                raise ConfigError(f"graph is disconnected ({ncomp} components)")
        elif self.edge_i.size:
            raise ConfigError("single vertex cannot carry edges")

        self.degree = np.asarray(self._W.sum(axis=1)).ravel()
        self._dist_cache: dict[int, np.ndarray] = {}
        self._dist_cache_cap = 1024

    # -- basic structure ---------------------------------------------------

    @property
    def n(self) -> int:
        return self.mu.size

    @property
    def n_edges(self) -> int:
        return self.edge_i.size

    @property
    def total_mass(self) -> float:
        return float(self.mu.sum())

    @property
    def min_edge_length(self) -> float:
        return float(self.edge_l.min()) if self.n_edges else 0.0

    @property
    def conductance_matrix(self) -> sp.csr_matrix:
        return self._W

    def laplacian(self) -> sp.csr_matrix:
        """Weighted graph Laplacian L = D - W (positive semidefinite)."""
        return sp.diags(self.degree) - self._W

    def check_field(self, f) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape != (self.n,):
            raise ConfigError(f"field has shape {f.shape}, expected ({self.n},)")
        if not np.all(np.isfinite(f)):
            raise ConfigError("field contains non-finite entries")
        return f

    # -- metric ------------------------------------------------------------

    def distances_from(self, v: int) -> np.ndarray:
        """Shortest-path distances from vertex v (cached per source)."""
        v = int(v)
        if not 0 <= v < self.n:
            raise ConfigError(f"vertex {v} out of range")
        d = self._dist_cache.get(v)
        if d is None:
            d = dijkstra(self._len_graph, directed=False, indices=v)
            if len(self._dist_cache) < self._dist_cache_cap:
                self._dist_cache[v] = d
        return d

    def distance_rows(self, sources) -> np.ndarray:
        """Distance rows for a batch of sources (bypasses the cache)."""
        return dijkstra(self._len_graph, directed=False, indices=np.asarray(sources))

    def diameter(self) -> float:
        # one Dijkstra per vertex; intended for modest spaces
        return float(self.distance_rows(np.arange(self.n)).max())

    def vertex_at(self, coords, tol=1e-9) -> int:
        """Vertex whose embedded position equals coords (within tol)."""
        if self.positions is None:
            raise ConfigError("space has no embedding")
        coords = np.atleast_1d(np.asarray(coords, dtype=float))
        d = np.abs(self.positions - coords[None, :]).max(axis=1)
        k = int(np.argmin(d))
        if d[k] > tol:
            raise ConfigError(f"no vertex at {coords} (closest is {self.positions[k]})")
        return k

    # -- serialization -----------------------------------------------------

    def to_text(self) -> str:
        """Plain-text graph format: header, vertex lines, edge lines."""
        lines = [f"{self.n} {self.n_edges}"]
        for i in range(self.n):
            coords = "" if self.positions is None else \
                " ".join(repr(float(x)) for x in self.positions[i]) + " "
            lines.append(f"{i} {coords}{float(self.mu[i])!r}")
        for k in range(self.n_edges):
            lines.append(f"{int(self.edge_i[k])} {int(self.edge_j[k])} "
                         f"{float(self.edge_c[k])!r} {float(self.edge_l[k])!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, name="") -> "MetricMeasureSpace":
        rows = [ln.split() for ln in text.strip().splitlines() if ln.strip()]
        n, m = int(rows[0][0]), int(rows[0][1])
        if len(rows) != 1 + n + m:
            raise ConfigError("graph text has the wrong number of lines")
        dim = len(rows[1]) - 2          # id + dim coords + mass
        mu = np.empty(n)
        pos = np.empty((n, dim)) if dim > 0 else None
        for row in rows[1:1 + n]:
            i = int(row[0])
            if dim > 0:
                pos[i] = [float(x) for x in row[1:1 + dim]]
            mu[i] = float(row[-1])
        edges = [(int(r[0]), int(r[1]), float(r[2]), float(r[3])) for r in rows[1 + n:]]
        return cls(mu, edges, positions=pos, name=name)


@dataclass
class Ball:
    """Open metric ball: members = { y : d(center, y) < radius }."""

    center: int
    radius: float
    members: np.ndarray
    measure: float


def metric_ball(space: MetricMeasureSpace, center: int, radius: float) -> Ball:
    """Open ball in the shortest-path metric."""
    if radius < 0:
        raise ConfigError("radius must be nonnegative")
    d = space.distances_from(center)
    members = np.flatnonzero(d < radius)
    return Ball(int(center), float(radius),
                members, float(space.mu[members].sum()))


# ---------------------------------------------------------------------------
# built-in families
# ---------------------------------------------------------------------------

def two_point() -> MetricMeasureSpace:
    """Smallest connected space: two unit-mass vertices joined by a unit edge."""
    return MetricMeasureSpace(
        [1.0, 1.0], [(0, 1, 1.0, 1.0)],
        positions=[[0.0], [1.0]], name="two_point")


def uniform_cycle(n: int) -> MetricMeasureSpace:
    if n < 3:
        raise ConfigError("cycle needs n >= 3")
    edges = [(k, (k + 1) % n, 1.0, 1.0) for k in range(n)]
    ang = 2 * np.pi * np.arange(n) / n
    r = n / (2 * np.pi)             # unit spacing along the circle
    pos = np.column_stack([r * np.cos(ang), r * np.sin(ang)])
    return MetricMeasureSpace(np.ones(n), edges, positions=pos, name=f"cycle_{n}")


def uniform_torus(n1: int, n2: int) -> MetricMeasureSpace:
    if n1 < 3 or n2 < 3:
        raise ConfigError("torus needs n1, n2 >= 3")
    def idx(a, b):
        return (a % n1) * n2 + (b % n2)
    edges = []
    for a in range(n1):
        for b in range(n2):
            edges.append((idx(a, b), idx(a + 1, b), 1.0, 1.0))
            edges.append((idx(a, b), idx(a, b + 1), 1.0, 1.0))
    pos = np.array([(a, b) for a in range(n1) for b in range(n2)], dtype=float)
    return MetricMeasureSpace(np.ones(n1 * n2), edges, positions=pos,
                              name=f"torus_{n1}x{n2}")


class _Weight:
    """Separable weight w(x, y) = wx(x): cell integrals and face averages."""

    def integral_x(self, a, b):     # \int_a^b wx
        raise NotImplementedError

    def value_x(self, x):
        raise NotImplementedError

    def average_x(self, a, b):
        if b <= a:
            raise ConfigError("empty cell")
        return self.integral_x(a, b) / (b - a)


class ConstantWeight(_Weight):
    def __init__(self, value=1.0):
        if value <= 0:
            raise ConfigError("constant weight must be positive")
        self.value = float(value)

    def integral_x(self, a, b):
        return self.value * (b - a)

    def value_x(self, x):
        return self.value


class SqrtAbsXWeight(_Weight):
    """w(x, y) = sqrt(|x|); antiderivative (2/3) sgn(x) |x|^{3/2}."""

    @staticmethod
    def _F(x):
        return (2.0 / 3.0) * np.sign(x) * np.abs(x) ** 1.5

    def integral_x(self, a, b):
        return self._F(b) - self._F(a)

    def value_x(self, x):
        return np.sqrt(np.abs(x))


_WEIGHTS = {"constant": ConstantWeight, "sqrt_abs_x": SqrtAbsXWeight}


def weighted_grid_1d(bounds=(-1.0, 1.0), h=0.25, weight="constant",
                     weight_value=1.0) -> MetricMeasureSpace:
    """Vertex-centered finite-volume discretization of a weighted interval.

    Vertex masses are cell integrals of the weight over dual (Voronoi)
    cells clipped at the boundary; the conductance between neighbors is
    w(midpoint)/h (the 1-d transmissibility w * h^{d-2}).
    """
    a, b = float(bounds[0]), float(bounds[1])
    w = _make_weight(weight, weight_value)
    xs = _grid_axis(a, b, h)
    n = xs.size
    xl = np.maximum(xs - h / 2, a)
    xr = np.minimum(xs + h / 2, b)
    mu = np.array([w.integral_x(lo, hi) for lo, hi in zip(xl, xr)])
    if np.any(mu <= 0):
        raise ConfigError("weight produced a zero-mass cell")
    edges = []
    for k in range(n - 1):
        c = w.value_x((xs[k] + xs[k + 1]) / 2) / h
        if c <= 0:
            raise ConfigError(f"zero conductance at midpoint {(xs[k] + xs[k+1]) / 2}")
        edges.append((k, k + 1, c, h))
    rim = [0, n - 1]
    return MetricMeasureSpace(mu, edges, positions=xs[:, None],
                              name=f"grid1d_{weight}_h{h:g}", rim=rim)


def weighted_grid_2d(bounds=((-1.0, 1.0), (-1.0, 1.0)), h=0.25,
                     weight="constant", weight_value=1.0,
                     tabulated=None) -> MetricMeasureSpace:
    """Vertex-centered finite-volume discretization of a weighted rectangle.

    Masses are exact cell integrals over clipped Voronoi cells.
    Conductances use the average of the weight over the shared face times
    |face|/h, so they stay strictly positive across the degeneracy line
    x = 0 of the sqrt|x| weight.  Edge lengths are Euclidean (= h).
    """
    (ax, bx), (ay, by) = bounds
    xs = _grid_axis(float(ax), float(bx), h)
    ys = _grid_axis(float(ay), float(by), h)
    nx, ny = xs.size, ys.size

    if tabulated is not None:
        wtab = np.asarray(tabulated, dtype=float).reshape(nx, ny)
        if np.any(wtab <= 0) or not np.all(np.isfinite(wtab)):
            raise ConfigError("tabulated weight must be strictly positive")
        w = None
    else:
        w = _make_weight(weight, weight_value)
        wtab = None

    def idx(i, j):
        return i * ny + j

    xlo = np.maximum(xs - h / 2, ax)
    xhi = np.minimum(xs + h / 2, bx)
    ylo = np.maximum(ys - h / 2, ay)
    yhi = np.minimum(ys + h / 2, by)

    mu = np.empty(nx * ny)
    pos = np.empty((nx * ny, 2))
    for i in range(nx):
        if w is not None:
            ix = w.integral_x(xlo[i], xhi[i])
        for j in range(ny):
            k = idx(i, j)
            pos[k] = (xs[i], ys[j])
            if w is not None:
                mu[k] = ix * (yhi[j] - ylo[j])
            else:
                mu[k] = wtab[i, j] * (xhi[i] - xlo[i]) * (yhi[j] - ylo[j])
    if np.any(mu <= 0):
        raise ConfigError("weight produced a zero-mass cell")

    edges = []
    for i in range(nx):
        for j in range(ny):
            if i + 1 < nx:      # face at x = midpoint, y in the (clipped) cell
                if w is not None:
                    wbar = w.value_x((xs[i] + xs[i + 1]) / 2)
                else:
                    wbar = 0.5 * (wtab[i, j] + wtab[i + 1, j])
                c = wbar * (yhi[j] - ylo[j]) / h
                if c <= 0:
                    raise ConfigError("zero conductance face")
                edges.append((idx(i, j), idx(i + 1, j), c, h))
            if j + 1 < ny:      # face at y = midpoint, x in the (clipped) cell
                if w is not None:
                    wbar = w.average_x(xlo[i], xhi[i])
                else:
                    wbar = 0.5 * (wtab[i, j] + wtab[i, j + 1])
                c = wbar * (xhi[i] - xlo[i]) / h
                if c <= 0:
                    raise ConfigError("zero conductance face")
                edges.append((idx(i, j), idx(i, j + 1), c, h))

    rim = [idx(i, j) for i in range(nx) for j in range(ny)
           if i in (0, nx - 1) or j in (0, ny - 1)]
    wname = "tabulated" if wtab is not None else weight
    return MetricMeasureSpace(mu, edges, positions=pos,
                              name=f"grid2d_{wname}_h{h:g}", rim=rim)


def _make_weight(weight, weight_value):
    if isinstance(weight, _Weight):
        return weight
    if weight not in _WEIGHTS:
        raise ConfigError(f"unknown weight {weight!r}; catalog: {sorted(_WEIGHTS)}")
    if weight == "constant":
        return ConstantWeight(weight_value)
    return _WEIGHTS[weight]()


def _grid_axis(a, b, h):
    if not (h > 0) or not (b > a):
        raise ConfigError("grid needs h > 0 and a nonempty extent")
    m = (b - a) / h
    if abs(m - round(m)) > 1e-9:
        raise ConfigError(f"extent ({a},{b}) is not a whole number of cells of width {h}")
    return a + h * np.arange(int(round(m)) + 1)


def build_space(config: dict) -> MetricMeasureSpace:
    """Build a space from a configuration mapping (see the CLI module).

    Families: two_point, cycle(n), torus(n1, n2),
    grid(dim in {1,2}, bounds, h, weight in {constant, sqrt_abs_x, tabulated}).
    """
    if not isinstance(config, dict) or "family" not in config:
        raise ConfigError("space config must be a mapping with a 'family' key")
    cfg = dict(config)
    family = cfg.pop("family")
    try:
        if family == "two_point":
            _reject_unknown(cfg, set())
            return two_point()
        if family == "cycle":
            _reject_unknown(cfg, {"n"})
            return uniform_cycle(int(cfg["n"]))
        if family == "torus":
            _reject_unknown(cfg, {"n1", "n2"})
            return uniform_torus(int(cfg["n1"]), int(cfg["n2"]))
        if family == "grid":
            _reject_unknown(cfg, {"dim", "bounds", "h", "weight", "weight_value",
                                  "tabulated"})
            dim = int(cfg.get("dim", 2))
            h = float(cfg["h"])
            weight = cfg.get("weight", "constant")
            wv = float(cfg.get("weight_value", 1.0))
            if dim == 1:
                bounds = tuple(cfg.get("bounds", (-1.0, 1.0)))
                return weighted_grid_1d(bounds, h, weight, wv)
            if dim == 2:
                bounds = cfg.get("bounds", ((-1.0, 1.0), (-1.0, 1.0)))
                bounds = (tuple(bounds[0]), tuple(bounds[1]))
                if weight == "tabulated" or "tabulated" in cfg:
                    return weighted_grid_2d(bounds, h, tabulated=cfg["tabulated"])
                return weighted_grid_2d(bounds, h, weight, wv)
            raise ConfigError("grid dimension must be 1 or 2")
    except KeyError as e:
        raise ConfigError(f"missing space parameter {e.args[0]!r}") from None
    raise ConfigError(f"unknown space family {family!r}")


def _reject_unknown(cfg, allowed):
    unknown = set(cfg) - allowed
    if unknown:
        raise ConfigError(f"unknown space keys {sorted(unknown)}")


# ---------------------------------------------------------------------------
# doubling and Poincare constants
# ---------------------------------------------------------------------------

def radius_grid(space: MetricMeasureSpace, R0: float) -> np.ndarray:
    """Geometric radius grid with ratio sqrt(2) from the minimum edge length."""
    r = space.min_edge_length
    if not (R0 > r):
        raise ConfigError("R0 must exceed the smallest edge length")
    out = []
    while r <= R0 * (1 + 1e-12):
        out.append(r)
        r *= _SQRT2
    return np.asarray(out)


def _ball_masses(d_row: np.ndarray, mu: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """mu(B(x, r)) for every r in radii, from one distance row (open balls)."""
    order = np.argsort(d_row)
    cum = np.concatenate([[0.0], np.cumsum(mu[order])])
    counts = np.searchsorted(d_row[order], radii, side="left")
    return cum[counts]


def estimate_doubling(space: MetricMeasureSpace, R0: float,
                      batch: int = 256) -> DoublingReport:
    """Measure the doubling constant and fit the Q-doubling power law.

    C_d is the exact maximum of mu(B(x,2r)) / mu(B(x,r)) over all vertices
    and the geometric radius grid restricted to r < R0/2.  (Q_fit, C_Q) come
    from least squares on log mu(B(x,R)) - log mu(B(x,r)) against log(R/r)
    over all grid pairs r < R, with the intercept raised afterwards so the
    power-law bound holds for every sample.
    """
    if space.n < 2:
        raise ConfigError("doubling needs at least two vertices")
    radii = radius_grid(space, R0)
    # open interval (r_min, R0]: single-vertex balls at the mesh scale carry
    # no doubling information and distort the power-law fit
    radii = radii[radii > space.min_edge_length * (1 + 1e-12)]
    if radii.size < 2:
        raise ConfigError("radius grid too small; increase R0")
    small = radii[radii < R0 / 2]
    if small.size == 0:
        raise ConfigError("no radii below R0/2; increase R0")
    ia, ib = np.triu_indices(radii.size, k=1)
    log_rr = np.log(radii[ib] / radii[ia])

    best = -np.inf
    worst = (0, 0.0)
    xs_cols, ys_cols = [], []
    for start in range(0, space.n, batch):
        idx = np.arange(start, min(start + batch, space.n))
        rows = space.distance_rows(idx)
        for v, row in zip(idx, rows):
            m_small = _ball_masses(row, space.mu, small)
            m_double = _ball_masses(row, space.mu, 2 * small)
            ratios = m_double / m_small
            k = int(np.argmax(ratios))
            if ratios[k] > best:
                best = float(ratios[k])
                worst = (int(v), float(small[k]))
            m_all = _ball_masses(row, space.mu, radii)
            ys_cols.append(np.log(m_all[ib]) - np.log(m_all[ia]))
            xs_cols.append(log_rr)

    x = np.concatenate(xs_cols)
    y = np.concatenate(ys_cols)
    A = np.column_stack([x, np.ones_like(x)])
    (q, b), *_ = np.linalg.lstsq(A, y, rcond=None)
    if q <= 0:
        raise NumericalError("Q-doubling fit produced a nonpositive exponent")
    b = max(b, float(np.max(y - q * x)))    # make the bound valid for every sample
    c_q = max(1.0, float(np.exp(b)))
    return DoublingReport(R0=float(R0), C_d=best, Q_fit=float(q), C_Q=c_q,
                          worst_pair=worst, n_samples=int(x.size))


def _subgraph_energy_matrix(space: MetricMeasureSpace, members: np.ndarray):
    """Dense Laplacian of the induced subgraph (edges with both ends inside)."""
    loc = -np.ones(space.n, dtype=np.intp)
    loc[members] = np.arange(members.size)
    li = loc[space.edge_i]
    lj = loc[space.edge_j]
    keep = (li >= 0) & (lj >= 0)
    m = members.size
    L = np.zeros((m, m))
    for a, b, c in zip(li[keep], lj[keep], space.edge_c[keep]):
        L[a, a] += c
        L[b, b] += c
        L[a, b] -= c
        L[b, a] -= c
    return L


def _sharp_poincare(space, ball_members, outer_members, radius,
                    dense_cap=1500, rng=None):
    """Sharp constant of ||u - u_B||_{L2(B)} <= C r ||sqrt(Gamma u)||_{L2(2B)}.

    Solved as a generalized eigenproblem on the vertex set of the doubled
    ball, with the energy of the induced subgraph on the right.  Falls back
    to random-field sampling above `dense_cap` vertices.  Returns (C, method)
    or (None, reason) when the ball is degenerate.
    """
    S = outer_members
    m = S.size
    if ball_members.size < 2:
        return None, "single-vertex ball"
    L = _subgraph_energy_matrix(space, S)
    loc = -np.ones(space.n, dtype=np.intp)
    loc[S] = np.arange(m)
    bloc = loc[ball_members]
    mu_b = space.mu[ball_members]
    mass_b = mu_b.sum()

    if m <= dense_cap:
        # Q_L(u) = sum_B mu (u - mean_B u)^2, assembled on the 2B vertex set
        QL = np.zeros((m, m))
        QL[np.ix_(bloc, bloc)] -= np.outer(mu_b, mu_b) / mass_b
        QL[bloc, bloc] += mu_b
        ones = np.full((m, 1), 1.0 / np.sqrt(m))
        Z = scipy.linalg.null_space(ones.T)
        A1 = Z.T @ QL @ Z
        B1 = Z.T @ (radius ** 2 * L) @ Z
        try:
            vals = scipy.linalg.eigh(A1, B1, eigvals_only=True)
        except scipy.linalg.LinAlgError:
            return None, "doubled ball induces a disconnected subgraph"
        lam = float(vals[-1])
        if lam < 0:
            lam = 0.0
        return np.sqrt(lam), "eigen"

    rng = np.random.default_rng(0) if rng is None else rng
    best = 0.0
    for _ in range(256):
        u = rng.standard_normal(m)
        e = float(u @ (L @ u))
        if e <= 1e-14 * float(u @ u):
            continue
        ub = u[bloc]
        osc = float(mu_b @ (ub - (mu_b @ ub) / mass_b) ** 2)
        best = max(best, osc / (radius ** 2 * e))
    return np.sqrt(best), "sampled"


def estimate_poincare(space: MetricMeasureSpace, R0: float, sample_count: int,
                      seed: int = 0, dense_cap: int = 1500) -> PoincareReport:
    """Worst sharp constant of the L2-L2 Poincare surrogate over sampled balls.

    Balls B(x, r) are sampled with r < R0 from the geometric radius grid;
    for each, the sharp constant is computed on the vertex set of B(x, 2r).
    Degenerate balls (single vertex, or disconnected doubled ball) are
    skipped and counted.
    """
    if sample_count < 1:
        raise ConfigError("sample_count must be >= 1")
    if not (R0 >= 4 * space.min_edge_length):
        raise ConfigError("R0 must be at least four times the smallest edge length")
    rng = np.random.default_rng(seed)
    radii = radius_grid(space, R0)
    radii = radii[(radii > space.min_edge_length) & (radii < R0)]
    if radii.size == 0:
        raise ConfigError("no admissible radii below R0")

    worst = None
    c_p = 0.0
    method = "eigen"
    skipped = 0
    used = 0
    for _ in range(sample_count):
        x = int(rng.integers(space.n))
        r = float(rng.choice(radii))
        ball = metric_ball(space, x, r)
        outer = metric_ball(space, x, 2 * r)
        c, how = _sharp_poincare(space, ball.members, outer.members, r,
                                 dense_cap=dense_cap, rng=rng)
        if c is None:
            skipped += 1
            continue
        used += 1
        if how == "sampled":
            method = "sampled"
        if c > c_p:
            c_p = c
            worst = ball
    if used == 0:
        raise NumericalError("every sampled ball was degenerate")
    return PoincareReport(R0=float(R0), C_P=float(c_p), worst_ball=worst,
                          method=method, n_balls=used, n_skipped=skipped)
