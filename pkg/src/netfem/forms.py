"""Assembly of the primal and dual mixed network flow systems.

The stationary hydraulic model on the network reads, edge by edge,

    R q + dp/ds = g,        dq/ds = f_edge,

with flux conservation [q]_j = f_vertex(j) (= 0 physically) at junctions and
a traction datum pref at each boundary vertex.  The Stokes-Brinkman variant
keeps the axial viscous term:

    R q - d/ds(nu_eff dq/ds) + dp/ds = g.

Three discretizations are assembled as saddle-point systems
[[A, B^T], [B, 0]] (x = (q, p)):

* primal:       flux in DG_{k-1}, pressure in CG_k with pressure Dirichlet
                data at boundary vertices eliminated symmetrically;
* dual (RT-type): flux branch-wise CG_k, pressure DG_{k-1} plus one Lagrange
                multiplier per internal vertex enforcing [q]_j = f_vertex;
* dual (TH-type): as above but with globally continuous CG_{k-1} pressure
                (Taylor-Hood pairing, k >= 2), used for the Stokes-Brinkman
                form and for stability comparisons.

Sign conventions.  The multiplier at a vertex equals minus the pressure
trace there.  At a boundary vertex the datum enters the flux equation as
pref * psi(v) * sigma with sigma = +1 if the edge ends at v and -1 if it
starts there; the hydraulic pressure at such a vertex is then -pref.  The
conservation source is f = -dA/dt (wall expansion into the channel expels
fluid), and g = nu_eff * df/ds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import spaces
from .errors import InconsistentField, UnsupportedDegree
from .netgraph import GraphMesh
from .spaces import (
    CG_BRANCH,
    CG_GLOBAL,
    DG_BRANCH,
    FunctionSpace,
    GraphFunction,
    NormWeights,
    build_space,
    make_norm_weights,
)

# f = CONSERVATION_SIGN * dA/dt; -1 adopts the derivation in which
# dq/ds + dA/dt = 0 (the main-text variant would be +1).
CONSERVATION_SIGN = -1.0


@dataclass
class ResistanceField:
    """Per-edge lumped resistance R(s,t), area A(s,t) and nu_eff = nu/(A phi).

    The callables take (edge_id, s, t).  dA_dt supplies the prescribed wall
    motion rate; df_ds its arclength derivative (zero for the edgewise
    constant radii used throughout).
    """
    resistance: object              # (e, s, t) -> R > 0
    area: object                    # (e, s, t) -> A > 0
    nu: float = 1.0
    porosity: float = 1.0
    permeability: float = math.inf
    dA_dt: object = None            # (e, s, t) -> dA/dt, default 0
    df_ds: object = None            # (e, s, t) -> d(f)/ds, default 0

    def nu_eff(self, e, s, t):
        return self.nu / (self.area(e, s, t) * self.porosity)

    def at_time(self, t: float):
        """Freeze to (edge, s) samplers for assembly at one time level."""
        return (lambda e, s: self.resistance(e, s, t),
                lambda e, s: self.nu_eff(e, s, t))

    def sample_check(self, mesh: GraphMesh, t: float = 0.0):
        for e in mesh.graph.edges:
            s = 0.5 * e.length
            try:
                r, a = self.resistance(e.id, s, t), self.area(e.id, s, t)
            except Exception as exc:
                raise InconsistentField(f"field not sampleable on edge {e.id}: {exc}") from exc
            if not (r > 0 and a > 0):
                raise InconsistentField(f"nonpositive R or A on edge {e.id}: R={r}, A={a}")


def constant_field(resistance=1.0, area=1.0, nu=1.0, porosity=1.0,
                   permeability=math.inf) -> ResistanceField:
    return ResistanceField(lambda e, s, t: float(resistance),
                           lambda e, s, t: float(area),
                           nu=nu, porosity=porosity, permeability=permeability)


@dataclass
class SourceData:
    """Right-hand side data: edge source f, vertex source, momentum source g,
    and the boundary traction datum pref per boundary vertex."""
    f_edge: object = None           # (e, s, t) -> value, default 0
    f_vertex: object = None         # (j, t) -> value, default 0
    g_edge: object = None           # (e, s, t) -> value, default 0
    pref: object = None             # (j, t) -> value at boundary vertices, default 0

    def f_at(self, t):
        fe = self.f_edge
        return (lambda e, s: 0.0) if fe is None else (lambda e, s: fe(e, s, t))

    def g_at(self, t):
        ge = self.g_edge
        return (lambda e, s: 0.0) if ge is None else (lambda e, s: ge(e, s, t))

    def fv_at(self, j, t):
        return 0.0 if self.f_vertex is None else self.f_vertex(j, t)

    def pref_at(self, j, t):
        return 0.0 if self.pref is None else self.pref(j, t)


def source_from_wall_motion(fld: ResistanceField) -> SourceData:
    """Conservation and momentum sources induced by prescribed wall motion.

    f = -dA/dt (sign per CONSERVATION_SIGN) on the edges, zero at vertices;
    g = nu_eff * df/ds, which vanishes for edgewise-constant radii.
    """
    if fld.dA_dt is None:
        return SourceData()

    def f_edge(e, s, t):
        return CONSERVATION_SIGN * fld.dA_dt(e, s, t)

    if fld.df_ds is None:
        g_edge = None
    else:
        def g_edge(e, s, t):
            return fld.nu_eff(e, s, t) * CONSERVATION_SIGN * fld.df_ds(e, s, t)

    return SourceData(f_edge=f_edge, g_edge=g_edge)


# -- assembled systems --------------------------------------------------------

@dataclass
class SaddleSystem:
    """Blocks of [[A, B^T], [B, 0]] x = [L, F] plus solution unpacking maps.

    Pressure dofs are the concatenation of the retained pressure-space dofs
    and (dual forms) the internal vertex multipliers.
    """
    A: sp.csr_matrix
    B: sp.csr_matrix
    L: np.ndarray
    F: np.ndarray
    V: FunctionSpace
    M: FunctionSpace
    formulation: str                      # 'primal' | 'dual' | 'dual_th'
    mesh: GraphMesh
    weights: NormWeights
    multiplier_vertices: tuple = ()       # dual: vertices carrying multipliers
    pressure_free: np.ndarray | None = None   # primal: free dofs of M
    dirichlet: dict = field(default_factory=dict)  # primal: dof -> value
    boundary_multipliers: dict = field(default_factory=dict)  # dual: vertex -> pref

    @property
    def n_flux(self):
        return self.A.shape[0]

    @property
    def n_pressure(self):
        return self.B.shape[0]

    def full_matrix(self) -> sp.csr_matrix:
        Z = sp.csr_matrix((self.n_pressure, self.n_pressure))
        return sp.bmat([[self.A, self.B.T], [self.B, Z]], format="csr")

    def rhs(self) -> np.ndarray:
        return np.concatenate([self.L, self.F])

    def split_solution(self, x: np.ndarray) -> tuple[GraphFunction, GraphFunction]:
        """Unpack a solution vector into flux and pressure functions.

        For dual forms the pressure function carries the multiplier values
        (= minus the vertex pressure traces) in ``vertex_values``, with
        eliminated boundary entries restored from the traction data.
        """
        q = GraphFunction(self.V, x[:self.n_flux])
        if self.formulation == "primal":
            coeffs = np.zeros(self.M.ndof)
            coeffs[self.pressure_free] = x[self.n_flux:]
            for dof, val in self.dirichlet.items():
                coeffs[dof] = val
            return q, GraphFunction(self.M, coeffs)
        ndg = self.M.ndof
        p = GraphFunction(self.M, x[self.n_flux:self.n_flux + ndg])
        mult = dict(zip(self.multiplier_vertices, x[self.n_flux + ndg:]))
        mult.update(self.boundary_multipliers)
        p.vertex_values = mult
        return q, p

    def v_norm(self, choice: str) -> sp.csr_matrix:
        return spaces.norm_matrix(self.V, choice, self.weights)

    def m_norm(self, choice: str) -> sp.csr_matrix:
        """Pressure-block norm matrix matching the retained pressure dofs."""
        if self.formulation == "primal":
            return spaces.norm_matrix(self.M, choice, self.weights,
                                      free_dofs=self.pressure_free)
        Mdg = spaces.norm_matrix(self.M, choice, self.weights)
        if not self.multiplier_vertices:
            return Mdg
        diag = spaces.multiplier_norm_weights(choice, self.weights, self.multiplier_vertices)
        return sp.block_diag([Mdg, sp.diags(diag)], format="csr")


def _boundary_sign(graph, eid, vertex_id) -> float:
    return 1.0 if graph.edges[eid].head == vertex_id else -1.0


def assemble_primal(mesh: GraphMesh, fld: ResistanceField, sources: SourceData,
                    k: int = 1, t: float = 0.0) -> SaddleSystem:
    """Primal mixed form: V = DG_{k-1}, M = CG_k, Dirichlet pressure at the boundary.

    a(q,psi) = (R q, psi), b(psi,p) = (psi, dp/ds), L = (g, psi),
    F(phi) = -(f, phi) over edges and vertices.  Boundary pressure values
    (-pref) are imposed by symmetric elimination with rhs correction.
    """
    if k < 1:
        raise UnsupportedDegree("primal form needs k >= 1")
    fld.sample_check(mesh, t)
    graph = mesh.graph
    V = build_space(mesh, DG_BRANCH, k - 1)
    M = build_space(mesh, CG_GLOBAL, k)
    R_at, _ = fld.at_time(t)

    A = spaces.mass_matrix(V, R_at)
    Bfull = spaces.assemble_bilinear(M, V, "grad", "value")  # rows phi (grad), cols psi
    L = spaces.assemble_functional(V, sources.g_at(t))
    F = -spaces.assemble_functional(M, sources.f_at(t))
    for v in graph.vertices:
        F[v.id] -= sources.fv_at(v.id, t)  # vertex part of the graph measure

    boundary = graph.boundary_vertices()
    dirichlet = {j: -sources.pref_at(j, t) for j in boundary}  # CG_global: vertex dof = vertex id
    free = np.array([d for d in range(M.ndof) if d not in dirichlet], dtype=int)
    pdir = np.zeros(M.ndof)
    for dof, val in dirichlet.items():
        pdir[dof] = val
    L = L - Bfull.T @ pdir
    B = sp.csr_matrix(Bfull)[free, :]

    weights = make_norm_weights(mesh, R_at)
    return SaddleSystem(A, B, L, F[free], V, M, "primal", mesh, weights,
                        pressure_free=free, dirichlet=dirichlet)


def _assemble_dual(mesh: GraphMesh, fld: ResistanceField, sources: SourceData, k: int,
                   t: float, pressure_kind: str, viscous: bool,
                   resistance_weighted_a: bool) -> SaddleSystem:
    fld.sample_check(mesh, t)
    graph = mesh.graph
    V = build_space(mesh, CG_BRANCH, k)
    M = build_space(mesh, pressure_kind, k - 1)
    R_at, nu_at = fld.at_time(t)

    A = spaces.mass_matrix(V, R_at if resistance_weighted_a else None)
    if viscous:
        A = sp.csr_matrix(A + spaces.stiffness_matrix(V, nu_at))

    B1 = -spaces.assemble_bilinear(M, V, "value", "grad")  # -(dq/ds, phi)
    internal = graph.internal_vertices()
    jump_rows = [spaces.jump_vector(V, j) for j in internal]
    B2 = -sp.csr_matrix(np.array(jump_rows)) if internal else sp.csr_matrix((0, V.ndof))
    B = sp.vstack([B1, B2], format="csr")

    L = spaces.assemble_functional(V, sources.g_at(t))
    boundary_mult = {}
    for j in graph.boundary_vertices():
        pref = sources.pref_at(j, t)
        boundary_mult[j] = pref  # eliminated multiplier value at the boundary
        if pref != 0.0:
            (eid,) = graph.incident_edges(j)
            dofs, w = V.edge_trace_dof(eid, at_head=graph.edges[eid].head == j)
            L[dofs] += pref * _boundary_sign(graph, eid, j) * w

    F1 = -spaces.assemble_functional(M, sources.f_at(t))
    F2 = -np.array([sources.fv_at(j, t) for j in internal])
    F = np.concatenate([F1, F2])

    weights = make_norm_weights(mesh, R_at)
    name = "dual_th" if pressure_kind == CG_GLOBAL else "dual"
    return SaddleSystem(A, B, L, F, V, M, name, mesh, weights,
                        multiplier_vertices=tuple(internal),
                        boundary_multipliers=boundary_mult)


def assemble_dual_hydraulic(mesh: GraphMesh, fld: ResistanceField, sources: SourceData,
                            k: int = 1, t: float = 0.0,
                            resistance_weighted_a: bool = True,
                            taylor_hood: bool = False) -> SaddleSystem:
    """Dual mixed hydraulic form: branch-wise CG_k flux glued by multipliers.

    a(q,psi) = (R q, psi) (set resistance_weighted_a=False for the literal
    unit-coefficient form), b(q,(phi,mu)) = -(dq/ds, phi) - sum_j [q]_j mu_j.
    Pressure is DG_{k-1} plus internal vertex multipliers; the unstable
    Taylor-Hood pairing (continuous CG_{k-1} pressure) is kept for
    comparison, needing k >= 2.
    """
    if k < 1:
        raise UnsupportedDegree("dual form needs k >= 1")
    if taylor_hood and k < 2:
        raise UnsupportedDegree("Taylor-Hood pairing needs k >= 2")
    kind = CG_GLOBAL if taylor_hood else DG_BRANCH
    return _assemble_dual(mesh, fld, sources, k, t, kind, viscous=False,
                          resistance_weighted_a=resistance_weighted_a)


def assemble_dual_stokes_brinkman(mesh: GraphMesh, fld: ResistanceField,
                                  sources: SourceData, k: int = 2, t: float = 0.0,
                                  resistance_weighted_a: bool = True) -> SaddleSystem:
    """Dual mixed Stokes-Brinkman form with Taylor-Hood-type spaces.

    a(q,psi) = (nu_eff dq/ds, dpsi/ds) + (R q, psi); pressure is the
    continuous CG_{k-1} space plus vertex multipliers (k >= 2).
    """
    if k < 2:
        raise UnsupportedDegree("Stokes-Brinkman dual needs k >= 2 (Taylor-Hood)")
    return _assemble_dual(mesh, fld, sources, k, t, CG_GLOBAL, viscous=True,
                          resistance_weighted_a=resistance_weighted_a)
