"""Finite element spaces on graph meshes and graph-calculus operators.

Four space kinds are supported on a GraphMesh:

* ``CG_global(k)``   -- piecewise polynomials, continuous across the whole
                        network (vertex values shared between edges),
* ``CG_branch(k)``   -- continuous along each edge, independent per edge
                        (each incident edge keeps its own trace at a vertex),
* ``DG_branch(d)``   -- fully discontinuous, degree d >= 0,
* ``VertexMultiplier`` -- one scalar per designated graph vertex.

All elements use Lagrange bases on equispaced reference nodes.  Bilinear
forms are integrated cell by cell with Gauss-Legendre quadrature that is
exact for the polynomial integrands; variable coefficients are sampled at
cell midpoints and treated as cellwise constants.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .errors import OutOfRange, SingularWeight, SpaceError, UnsupportedDegree
from .netgraph import GraphMesh

CG_GLOBAL = "cg_global"
CG_BRANCH = "cg_branch"
DG_BRANCH = "dg_branch"
VERTEX = "vertex_multiplier"


# -- reference element ------------------------------------------------------

@lru_cache(maxsize=None)
def _nodal_coeffs(degree: int) -> np.ndarray:
    """Monomial coefficients of the Lagrange basis on equispaced nodes in [0,1].

    Column j holds the coefficients of the basis function attached to node j.
    """
    nodes = np.array([0.5]) if degree == 0 else np.linspace(0.0, 1.0, degree + 1)
    vander = np.vander(nodes, degree + 1, increasing=True)
    return np.linalg.inv(vander)


def _eval_basis(degree: int, x: np.ndarray, deriv: int = 0) -> np.ndarray:
    """Values (or deriv-th derivatives) of the reference basis at points x.

    Returns array of shape (len(x), degree+1).
    """
    coeffs = _nodal_coeffs(degree)
    out = np.zeros((len(x), degree + 1))
    for j in range(degree + 1):
        poly = np.polynomial.Polynomial(coeffs[:, j])
        out[:, j] = poly.deriv(deriv)(x) if deriv else poly(x)
    return out


@lru_cache(maxsize=None)
def gauss_rule(npoints: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre points and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(npoints)
    return 0.5 * (x + 1.0), 0.5 * w


def _quad_points(degree: int) -> int:
    # ceil((2k+1)/2)+1 points: exact through degree 2k+3, enough for every
    # bilinear form here with cellwise-constant coefficients.
    return (2 * degree + 1 + 1) // 2 + 1


# -- function spaces ---------------------------------------------------------

@dataclass(frozen=True)
class FunctionSpace:
    mesh: GraphMesh
    kind: str
    degree: int
    ndof: int
    # CG/DG only: dof ids for (edge, cell) -> local nodes 0..degree
    _cell_dofs: tuple | None = None
    # VertexMultiplier only: vertex id -> dof index
    vertex_dofs: dict | None = None

    def cell_dofs(self, edge_id: int, cell: int) -> np.ndarray:
        return self._cell_dofs[self.mesh.global_cell(edge_id, cell)]

    def edge_trace_dof(self, edge_id: int, at_head: bool) -> tuple[np.ndarray, np.ndarray]:
        """(dofs, weights) realizing the trace of this edge at one of its ends."""
        n = self.mesh.cells[edge_id]
        cell = n - 1 if at_head else 0
        dofs = self.cell_dofs(edge_id, cell)
        x = np.array([1.0 if at_head else 0.0])
        return dofs, _eval_basis(self.degree, x)[0]


def build_space(mesh: GraphMesh, kind: str, degree: int = 1,
                vertices: tuple[int, ...] | None = None) -> FunctionSpace:
    """Construct a function space and its dof map on the mesh."""
    if kind == VERTEX:
        verts = tuple(range(mesh.graph.n_vertices)) if vertices is None else tuple(vertices)
        return FunctionSpace(mesh, kind, 0, len(verts),
                             vertex_dofs={v: i for i, v in enumerate(verts)})

    if kind == DG_BRANCH:
        if degree < 0:
            raise UnsupportedDegree("DG degree must be >= 0")
        per = degree + 1
        cell_dofs = [np.arange(c * per, (c + 1) * per) for c in range(mesh.n_cells)]
        return FunctionSpace(mesh, kind, degree, mesh.n_cells * per, tuple(cell_dofs))

    if kind not in (CG_GLOBAL, CG_BRANCH):
        raise SpaceError(f"unknown space kind {kind!r}")
    if degree < 1:
        raise UnsupportedDegree(f"{kind} needs degree >= 1, got {degree}")

    graph = mesh.graph
    cell_dofs = [None] * mesh.n_cells
    if kind == CG_BRANCH:
        off = 0
        for e in graph.edges:
            for c in range(mesh.cells[e.id]):
                start = off + c * degree
                cell_dofs[mesh.global_cell(e.id, c)] = np.arange(start, start + degree + 1)
            off += mesh.cells[e.id] * degree + 1
        return FunctionSpace(mesh, kind, degree, off, tuple(cell_dofs))

    # CG_global: graph vertices own the first n_vertices dofs, shared across edges.
    off = graph.n_vertices
    for e in graph.edges:
        n = mesh.cells[e.id]
        last = n * degree  # local node index of the head end
        for c in range(n):
            dofs = np.empty(degree + 1, dtype=int)
            for loc in range(degree + 1):
                node = c * degree + loc
                if node == 0:
                    dofs[loc] = e.tail
                elif node == last:
                    dofs[loc] = e.head
                else:
                    dofs[loc] = off + node - 1
            cell_dofs[mesh.global_cell(e.id, c)] = dofs
        off += n * degree - 1
    return FunctionSpace(mesh, CG_GLOBAL, degree, off, tuple(cell_dofs))


# -- functions ---------------------------------------------------------------

@dataclass
class GraphFunction:
    space: FunctionSpace
    coeffs: np.ndarray
    vertex_values: dict | None = None  # multiplier component of composite solutions

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.space.ndof,):
            raise SpaceError(f"coefficient length {self.coeffs.shape} != dof count {self.space.ndof}")


def evaluate(function: GraphFunction, edge_id: int, s: float) -> float:
    """Point value at arclength s on an edge (edge-local trace for branch spaces)."""
    space = function.space
    mesh = space.mesh
    length = mesh.graph.edges[edge_id].length
    if s < -1e-12 * length or s > length * (1 + 1e-12):
        raise OutOfRange(f"s={s} outside [0, {length}] on edge {edge_id}")
    s = min(max(s, 0.0), length)
    cell = mesh.containing_cell(edge_id, s)
    x = s / mesh.cell_length[edge_id] - cell
    dofs = space.cell_dofs(edge_id, cell)
    return float(_eval_basis(space.degree, np.array([x]))[0] @ function.coeffs[dofs])


def edge_trace(function: GraphFunction, edge_id: int, vertex_id: int) -> float:
    """Trace of the function on one edge at one of its endpoints."""
    e = function.space.mesh.graph.edges[edge_id]
    if vertex_id == e.head:
        at_head = True
    elif vertex_id == e.tail:
        at_head = False
    else:
        raise SpaceError(f"vertex {vertex_id} is not an endpoint of edge {edge_id}")
    dofs, w = function.space.edge_trace_dof(edge_id, at_head)
    return float(w @ function.coeffs[dofs])


def jump(function: GraphFunction, vertex_id: int) -> float:
    """Generalized jump: sum of incoming traces minus sum of outgoing traces."""
    graph = function.space.mesh.graph
    val = 0.0
    for eid in graph.edges_in[vertex_id]:
        val += edge_trace(function, eid, vertex_id)
    for eid in graph.edges_out[vertex_id]:
        val -= edge_trace(function, eid, vertex_id)
    return val


def interpolate(space: FunctionSpace, fn) -> GraphFunction:
    """Nodal interpolation of a callable fn(edge_id, s)."""
    mesh = space.mesh
    coeffs = np.zeros(space.ndof)
    nodes = np.array([0.5]) if space.degree == 0 else np.linspace(0, 1, space.degree + 1)
    for e in mesh.graph.edges:
        hc = mesh.cell_length[e.id]
        for c in range(mesh.cells[e.id]):
            dofs = space.cell_dofs(e.id, c)
            for loc, x in enumerate(nodes):
                coeffs[dofs[loc]] = fn(e.id, (c + x) * hc)
    return GraphFunction(space, coeffs)


def graph_divergence(function: GraphFunction) -> tuple[GraphFunction, dict]:
    """Edge part: cellwise derivative; vertex part: jump at every vertex."""
    space = function.space
    deriv_space = build_space(space.mesh, DG_BRANCH, max(space.degree - 1, 0))
    out = np.zeros(deriv_space.ndof)
    nodes = np.array([0.5]) if deriv_space.degree == 0 else np.linspace(0, 1, deriv_space.degree + 1)
    basis_d = _eval_basis(space.degree, nodes, deriv=1)
    for e in space.mesh.graph.edges:
        hc = space.mesh.cell_length[e.id]
        for c in range(space.mesh.cells[e.id]):
            vals = basis_d @ function.coeffs[space.cell_dofs(e.id, c)] / hc
            out[deriv_space.cell_dofs(e.id, c)] = vals
    jumps = {v.id: jump(function, v.id) for v in space.mesh.graph.vertices}
    return GraphFunction(deriv_space, out), jumps


# -- assembly ----------------------------------------------------------------

def _coeff_per_cell(mesh: GraphMesh, coeff) -> np.ndarray:
    """Sample a coefficient at cell midpoints; scalars broadcast."""
    if coeff is None:
        return np.ones(mesh.n_cells)
    if np.isscalar(coeff):
        return np.full(mesh.n_cells, float(coeff))
    vals = np.empty(mesh.n_cells)
    for e in mesh.graph.edges:
        for c in range(mesh.cells[e.id]):
            vals[mesh.global_cell(e.id, c)] = coeff(e.id, mesh.cell_midpoint(e.id, c))
    return vals


def assemble_bilinear(row_space: FunctionSpace, col_space: FunctionSpace,
                      row_op: str = "value", col_op: str = "value",
                      coeff=None) -> sp.csr_matrix:
    """Assemble (op_r u, op_c v) over the edges, ops in {'value', 'grad'}.

    Rows are test functions in row_space, columns trial functions in
    col_space; the coefficient is sampled cellwise at midpoints.
    """
    mesh = row_space.mesh
    if col_space.mesh is not mesh:
        raise SpaceError("spaces live on different meshes")
    cvals = _coeff_per_cell(mesh, coeff)
    npts = _quad_points(max(row_space.degree, col_space.degree))
    x, w = gauss_rule(npts)
    row_tab = _eval_basis(row_space.degree, x, deriv=(row_op == "grad"))
    col_tab = _eval_basis(col_space.degree, x, deriv=(col_op == "grad"))

    rows, cols, vals = [], [], []
    for e in mesh.graph.edges:
        hc = mesh.cell_length[e.id]
        scale = hc
        if row_op == "grad":
            scale /= hc
        if col_op == "grad":
            scale /= hc
        local = (row_tab * w[:, None]).T @ col_tab * scale
        for c in range(mesh.cells[e.id]):
            rd = row_space.cell_dofs(e.id, c)
            cd = col_space.cell_dofs(e.id, c)
            block = local * cvals[mesh.global_cell(e.id, c)]
            rows.extend(np.repeat(rd, len(cd)))
            cols.extend(np.tile(cd, len(rd)))
            vals.extend(block.ravel())
    return sp.csr_matrix((vals, (rows, cols)), shape=(row_space.ndof, col_space.ndof))


def mass_matrix(space: FunctionSpace, coeff=None) -> sp.csr_matrix:
    return assemble_bilinear(space, space, "value", "value", coeff)


def stiffness_matrix(space: FunctionSpace, coeff=None) -> sp.csr_matrix:
    return assemble_bilinear(space, space, "grad", "grad", coeff)


def assemble_functional(space: FunctionSpace, fn) -> np.ndarray:
    """Assemble the load vector (f, v) with f a callable (edge_id, s) -> value."""
    mesh = space.mesh
    x, w = gauss_rule(_quad_points(space.degree) + 2)
    tab = _eval_basis(space.degree, x)
    out = np.zeros(space.ndof)
    for e in mesh.graph.edges:
        hc = mesh.cell_length[e.id]
        for c in range(mesh.cells[e.id]):
            fvals = np.array([fn(e.id, (c + xi) * hc) for xi in x])
            out[space.cell_dofs(e.id, c)] += hc * (tab.T @ (w * fvals))
    return out


def jump_vector(space: FunctionSpace, vertex_id: int) -> np.ndarray:
    """Dense row j with j @ coeffs = jump of the function at the vertex."""
    graph = space.mesh.graph
    row = np.zeros(space.ndof)
    for sign, eids in ((1.0, graph.edges_in[vertex_id]), (-1.0, graph.edges_out[vertex_id])):
        for eid in eids:
            at_head = graph.edges[eid].head == vertex_id
            dofs, w = space.edge_trace_dof(eid, at_head)
            row[dofs] += sign * w
    return row


def vertex_value_vector(space: FunctionSpace, vertex_id: int) -> np.ndarray:
    """Row extracting the (single-valued) vertex value of a CG_global function."""
    if space.kind != CG_GLOBAL:
        raise SpaceError("vertex values are single-valued only for CG_global spaces")
    row = np.zeros(space.ndof)
    row[vertex_id] = 1.0  # CG_global numbers graph vertices first
    return row


# -- norms -------------------------------------------------------------------

@dataclass(frozen=True)
class NormWeights:
    """Weights entering the stability norms.

    total_length: sum of edge lengths; alpha[j]: sqrt of averaged incident
    edge length; hj[j]: mean incident mesh cell size; resistance: cellwise
    sampler (edge, s) -> R; rj[j]: mean of edge-midpoint resistances over
    the edges meeting at vertex j.
    """
    total_length: float
    alpha: dict
    hj: dict
    resistance: object = None
    rj: dict = None

    def validate(self):
        if not self.total_length > 0:
            raise SingularWeight("total length must be positive")
        for name, table in (("alpha", self.alpha), ("hj", self.hj), ("rj", self.rj)):
            if table is None:
                continue
            for j, v in table.items():
                if not v > 0:
                    raise SingularWeight(f"{name}[{j}] = {v} must be positive")


def make_norm_weights(mesh: GraphMesh, resistance=None) -> NormWeights:
    from .netgraph import total_length, vertex_alpha
    graph = mesh.graph
    alpha = {v.id: vertex_alpha(graph, v.id) for v in graph.vertices}
    hj = {v.id: mesh.vertex_cell_size(v.id) for v in graph.vertices}
    rj = None
    if resistance is not None:
        rfun = (lambda e, s: float(resistance)) if np.isscalar(resistance) else resistance
        rj = {}
        for v in graph.vertices:
            mids = [rfun(eid, 0.5 * graph.edges[eid].length) for eid in graph.incident_edges(v.id)]
            rj[v.id] = sum(mids) / len(mids)
        resistance = rfun
    w = NormWeights(total_length(graph), alpha, hj, resistance, rj)
    w.validate()
    return w


def _jump_outer(space: FunctionSpace, weights_by_vertex: dict) -> sp.csr_matrix:
    out = sp.csr_matrix((space.ndof, space.ndof))
    rows = []
    wts = []
    for j, wj in weights_by_vertex.items():
        rows.append(jump_vector(space, j))
        wts.append(wj)
    if not rows:
        return out
    J = np.array(rows)
    return sp.csr_matrix((J.T * np.array(wts)) @ J)


def norm_matrix(space: FunctionSpace, choice: str, weights: NormWeights,
                free_dofs: np.ndarray | None = None) -> sp.csr_matrix:
    """Symmetric positive definite matrix realizing a squared stability norm.

    Flux-space choices:
      'primal_v'          (R q, q)
      'dual_v_unweighted' ||q||^2 + ||dq/ds||^2 + sum_j [q]_j^2
      'dual_v_length'     ||q||^2 + L^2 ||dq/ds||^2 + sum_j (L/alpha_j)^2 [q]_j^2
      'dual_v_mesh'       ||q||^2 + ||dq/ds||^2 + sum_j h_j^-1 [q]_j^2
      'dual_v_robust'     (R q, q) + L^2 (R dq/ds, dq/ds) + sum_j L^2 R_j alpha_j^-2 [q]_j^2

    Pressure-space choices (edge component; vertex blocks are assembled by the
    saddle systems):
      'primal_m'          (R^-1 dp/ds, dp/ds), restricted to free dofs
      'dual_m_unweighted' ||p||^2
      'dual_m_length'     L^-2 ||p||^2
      'dual_m_mesh'       ||p||^2
      'dual_m_robust'     L^-2 (R^-1 p, p)
    """
    weights.validate()
    L = weights.total_length
    R = weights.resistance
    Rinv = None if R is None else (lambda e, s: 1.0 / R(e, s))
    if choice in ("primal_v", "dual_v_robust", "primal_m", "dual_m_robust") and R is None:
        raise SingularWeight(f"norm choice {choice!r} needs a resistance sampler")

    if choice == "primal_v":
        return mass_matrix(space, R)
    if choice == "dual_v_unweighted":
        jmp = _jump_outer(space, {v.id: 1.0 for v in space.mesh.graph.vertices})
        return sp.csr_matrix(mass_matrix(space) + stiffness_matrix(space) + jmp)
    if choice == "dual_v_length":
        jmp = _jump_outer(space, {j: (L / a) ** 2 for j, a in weights.alpha.items()})
        return sp.csr_matrix(mass_matrix(space) + L ** 2 * stiffness_matrix(space) + jmp)
    if choice == "dual_v_mesh":
        jmp = _jump_outer(space, {j: 1.0 / h for j, h in weights.hj.items()})
        return sp.csr_matrix(mass_matrix(space) + stiffness_matrix(space) + jmp)
    if choice == "dual_v_robust":
        jmp = _jump_outer(space, {j: L ** 2 * weights.rj[j] / weights.alpha[j] ** 2
                                  for j in weights.alpha})
        return sp.csr_matrix(mass_matrix(space, R) + L ** 2 * stiffness_matrix(space, R) + jmp)

    if choice == "primal_m":
        K = stiffness_matrix(space, Rinv)
        if free_dofs is not None:
            K = K[np.ix_(free_dofs, free_dofs)]
        return sp.csr_matrix(K)
    if choice == "dual_m_unweighted" or choice == "dual_m_mesh":
        return mass_matrix(space)
    if choice == "dual_m_length":
        return sp.csr_matrix(mass_matrix(space) / L ** 2)
    if choice == "dual_m_robust":
        return sp.csr_matrix(mass_matrix(space, Rinv) / L ** 2)
    raise SpaceError(f"unknown norm choice {choice!r}")


def multiplier_norm_weights(choice: str, weights: NormWeights, vertex_ids) -> np.ndarray:
    """Diagonal weights of the vertex-multiplier block of the pressure norm."""
    L = weights.total_length
    if choice.endswith("unweighted"):
        return np.ones(len(vertex_ids))
    if choice.endswith("length"):
        return np.array([(weights.alpha[j] / L) ** 2 for j in vertex_ids])
    if choice.endswith("mesh"):
        return np.array([weights.hj[j] for j in vertex_ids])
    if choice.endswith("robust"):
        return np.array([weights.alpha[j] ** 2 / (L ** 2 * weights.rj[j]) for j in vertex_ids])
    raise SpaceError(f"unknown norm choice {choice!r}")
