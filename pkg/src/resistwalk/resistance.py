"""Effective resistance, set resistance and Dirichlet energy.

The effective resistance R(x, y) is computed from the graph Laplacian with
one vertex grounded: injecting a unit current at x and extracting it at y,
R(x, y) is the potential difference u(x) - u(y).  Equivalently
R(x, y)^-1 = inf { E(f, f) : f(x) = 0, f(y) = 1 } for the Dirichlet form
E(f, f) = (1/2) sum_{x ~ y} (f(x) - f(y))^2 mu_xy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.sparse import csr_matrix
from scipy.sparse.linalg import cg as sparse_cg

from .errors import (
    BudgetExceeded,
    EmptySet,
    MissingValue,
    OverlappingSets,
    SolverFailure,
    UnknownVertex,
)
from .graphs import WeightedGraph, wire_vertices

DENSE_LIMIT = 5000
ALL_PAIRS_BUDGET = 3000
CG_TOL = 1e-12


def _edge_arrays(g: WeightedGraph):
    eu = np.fromiter((e[0] for e in g.edges), dtype=np.int64, count=g.num_edges)
    ev = np.fromiter((e[1] for e in g.edges), dtype=np.int64, count=g.num_edges)
    ew = np.fromiter((e[2] for e in g.edges), dtype=np.float64, count=g.num_edges)
    return eu, ev, ew


def laplacian_dense(g: WeightedGraph) -> np.ndarray:
    eu, ev, ew = _edge_arrays(g)
    L = np.zeros((g.n, g.n))
    np.subtract.at(L, (eu, ev), ew)
    np.subtract.at(L, (ev, eu), ew)
    np.fill_diagonal(L, g.mu)
    return L


def laplacian_sparse(g: WeightedGraph) -> csr_matrix:
    eu, ev, ew = _edge_arrays(g)
    rows = np.concatenate([eu, ev, np.arange(g.n)])
    cols = np.concatenate([ev, eu, np.arange(g.n)])
    vals = np.concatenate([-ew, -ew, g.mu])
    return csr_matrix((vals, (rows, cols)), shape=(g.n, g.n))


class LaplacianSolver:
    """Grounded-Laplacian solves, factorized once and reused.

    Vertex `ground` is held at potential zero and its row/column dropped; the
    reduced matrix is positive definite on a connected graph.  Small systems
    use a dense Cholesky factorization, systems above dense_limit fall back
    to conjugate gradients on the sparse reduced Laplacian with residual
    tolerance 1e-12.
    """

    def __init__(self, g: WeightedGraph, ground: int = 0, dense_limit: int = DENSE_LIMIT):
        g.check_vertex(ground)
        self.g = g
        self.ground = ground
        self.keep = np.array([v for v in range(g.n) if v != ground])
        self.dense = g.n - 1 <= dense_limit
        if self.dense:
            L = laplacian_dense(g)
            red = L[np.ix_(self.keep, self.keep)]
            try:
                self._cho = cho_factor(red)
            except np.linalg.LinAlgError as exc:  # pragma: no cover
                raise SolverFailure(f"Cholesky factorization failed: {exc}")
        else:
            L = laplacian_sparse(g)
            self._red = L[self.keep][:, self.keep].tocsr()
            self._diag_inv = 1.0 / self._red.diagonal()

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Solve L u = b with u(ground) = 0; b is indexed by all vertices."""
        b_red = np.asarray(b, dtype=float)[self.keep]
        if self.dense:
            u_red = cho_solve(self._cho, b_red)
        else:
            M = _JacobiPreconditioner(self._diag_inv)
            try:
                u_red, info = sparse_cg(self._red, b_red, rtol=CG_TOL, atol=0.0, M=M)
            except TypeError:  # older scipy spells the tolerance 'tol'
                u_red, info = sparse_cg(self._red, b_red, tol=CG_TOL, atol=0.0, M=M)
            if info != 0:
                raise SolverFailure(f"conjugate gradients did not converge (info={info})")
            res = np.linalg.norm(self._red @ u_red - b_red)
            if res > 10 * CG_TOL * max(1.0, np.linalg.norm(b_red)):
                raise SolverFailure(f"residual {res:.3e} above tolerance")
        u = np.zeros(self.g.n)
        u[self.keep] = u_red
        return u

    def reduced_inverse(self) -> np.ndarray:
        if not self.dense:
            raise BudgetExceeded("full inverse is only available for dense solves")
        return cho_solve(self._cho, np.eye(self.g.n - 1))


class _JacobiPreconditioner:
    def __init__(self, diag_inv):
        self.diag_inv = diag_inv
        self.shape = (len(diag_inv), len(diag_inv))
        self.dtype = np.float64

    def matvec(self, x):
        return self.diag_inv * x


def _solver(g: WeightedGraph) -> LaplacianSolver:
    if g._solver_cache is None:
        g._solver_cache = LaplacianSolver(g)
    return g._solver_cache


def effective_resistance(g: WeightedGraph, x: int, y: int) -> float:
    """Two-point effective resistance R(x, y); zero iff x == y."""
    g.check_vertex(x)
    g.check_vertex(y)
    if x == y:
        return 0.0
    b = np.zeros(g.n)
    b[x] = 1.0
    b[y] = -1.0
    u = _solver(g).solve(b)
    return float(u[x] - u[y])


@dataclass(eq=False)
class ResistanceMatrix:
    """All-pairs effective resistances with the diameter extremes."""

    matrix: np.ndarray
    r_diam: float   # max_{x,y} R(x,y)
    r_min: float    # min over distinct pairs
    graph: WeightedGraph

    def rescaled(self) -> "RescaledResistance":
        return RescaledResistance(self.matrix / self.r_diam, self.r_diam)


@dataclass(eq=False)
class RescaledResistance:
    """Resistances divided by the resistance diameter; max entry exactly 1."""

    matrix: np.ndarray
    r_diam: float

    def __post_init__(self):
        m = self.matrix
        if not (np.min(m) >= 0.0 and np.max(m) == 1.0):
            raise SolverFailure("rescaled resistance must lie in [0, 1] with max exactly 1")


def resistance_matrix(
    g: WeightedGraph,
    budget: int = ALL_PAIRS_BUDGET,
    validate: bool = False,
) -> ResistanceMatrix:
    """All-pairs resistance via the grounded inverse; refuses n > budget.

    With validate=True the metric axioms (symmetry, vanishing diagonal,
    positivity off the diagonal, triangle inequality over all triples) are
    checked with a 1e-10 relative slack.
    """
    if g.n > budget:
        raise BudgetExceeded(f"all-pairs resistance on {g.n} vertices exceeds budget {budget}")
    solver = LaplacianSolver(g)
    ground = solver.ground
    Gred = solver.reduced_inverse()
    Gfull = np.zeros((g.n, g.n))
    ix = np.ix_(solver.keep, solver.keep)
    Gfull[ix] = Gred
    d = np.diag(Gfull)
    R = d[:, None] + d[None, :] - Gfull - Gfull.T
    R = 0.5 * (R + R.T)
    np.fill_diagonal(R, 0.0)
    offdiag = R[~np.eye(g.n, dtype=bool)]
    r_diam = float(offdiag.max())
    r_min = float(offdiag.min())
    out = ResistanceMatrix(matrix=R, r_diam=r_diam, r_min=r_min, graph=g)
    if validate:
        validate_metric(R, rel_slack=1e-10)
        if r_min <= 0:
            raise SolverFailure("resistance between distinct vertices must be positive")
    return out


def validate_metric(d: np.ndarray, rel_slack: float = 1e-10) -> None:
    """Check symmetry, zero diagonal and the triangle inequality on all triples."""
    n = d.shape[0]
    scale = max(1.0, float(np.max(d)))
    tol = rel_slack * scale
    if np.max(np.abs(d - d.T)) > tol:
        raise SolverFailure("distance matrix is not symmetric")
    if np.max(np.abs(np.diag(d))) > tol:
        raise SolverFailure("distance matrix has a nonzero diagonal")
    if np.min(d + np.eye(n) * scale) <= 0:
        raise SolverFailure("off-diagonal distances must be positive")
    for k in range(n):
        worst = np.max(d - d[:, k][:, None] - d[k, :][None, :])
        if worst > tol:
            raise SolverFailure(f"triangle inequality violated through vertex {k} by {worst:.3e}")


def set_resistance(g: WeightedGraph, A, B) -> float:
    """Effective resistance between disjoint vertex sets A and B.

    Each set is wired into a single vertex (a perfect short) and the
    two-point resistance of the quotient is returned.  For singleton sets
    this is the plain pairwise resistance.
    """
    A = [int(a) for a in A]
    B = [int(b) for b in B]
    if not A or not B:
        raise EmptySet("set resistance needs two nonempty sets")
    for v in A + B:
        g.check_vertex(v)
    if set(A) & set(B):
        raise OverlappingSets(f"sets share vertices {sorted(set(A) & set(B))}")
    if len(A) == 1 and len(B) == 1:
        return effective_resistance(g, A[0], B[0])
    h = g
    a = A[0]
    if len(A) > 1:
        h = wire_vertices(g, A)
        vmap = h.meta["vertex_map"]
        a = vmap[A[0]]
        B = [vmap[b] for b in B]
    b = B[0]
    if len(B) > 1:
        h = wire_vertices(h, B)
        vmap = h.meta["vertex_map"]
        a = vmap[a]
        b = vmap[B[0]]
    return effective_resistance(h, a, b)


def dirichlet_energy(g: WeightedGraph, f) -> float:
    """E(f, f) = (1/2) sum over ordered adjacent pairs of (df)^2 mu_xy."""
    vals = _as_vertex_array(g, f)
    eu, ev, ew = _edge_arrays(g)
    diff = vals[eu] - vals[ev]
    return float(np.sum(ew * diff * diff))


def harmonic_potential(g: WeightedGraph, A, B) -> np.ndarray:
    """The unique f with f=0 on A, f=1 on B, harmonic elsewhere (dense solve).

    Its Dirichlet energy equals 1 / R(A, B), which makes it the minimizer in
    the variational characterization of set resistance.
    """
    A = [int(a) for a in A]
    B = [int(b) for b in B]
    if not A or not B:
        raise EmptySet("need two nonempty sets")
    for v in A + B:
        g.check_vertex(v)
    if set(A) & set(B):
        raise OverlappingSets("sets overlap")
    f = np.zeros(g.n)
    f[B] = 1.0
    interior = np.array(sorted(set(range(g.n)) - set(A) - set(B)), dtype=np.int64)
    if interior.size:
        L = laplacian_dense(g)
        Lii = L[np.ix_(interior, interior)]
        rhs = -L[np.ix_(interior, B)].sum(axis=1)
        f[interior] = np.linalg.solve(Lii, rhs)
    return f


def _as_vertex_array(g: WeightedGraph, f) -> np.ndarray:
    if isinstance(f, dict):
        missing = [v for v in range(g.n) if v not in f]
        if missing:
            raise MissingValue(f"function undefined on vertices {missing[:5]}")
        return np.array([float(f[v]) for v in range(g.n)])
    arr = np.asarray(f, dtype=float)
    if arr.shape != (g.n,):
        raise MissingValue(f"expected {g.n} values, got shape {arr.shape}")
    return arr
