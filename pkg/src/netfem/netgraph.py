"""Oriented spatial graphs embedded in 3D and their 1D interval meshes.

A network is a set of vertices with positions and a set of oriented edges
(tail -> head).  Each edge is a straight segment carrying an arclength
coordinate s in (0, length), a baseline inner radius and an outer/inner
radius ratio describing the annular cross-section of the flow channel.

Vertices of degree one are boundary vertices (inlets/outlets); all other
vertices are internal junctions.  Graphs are immutable after construction
and safe to share between threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DanglingEdgeReference,
    DisconnectedGraph,
    GraphError,
    NonPositiveMeshSize,
    SelfLoop,
)

_LENGTH_RTOL = 1e-9


@dataclass(frozen=True)
class Vertex:
    id: int
    position: np.ndarray  # shape (3,), meters

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float).reshape(3))


@dataclass(frozen=True)
class Edge:
    id: int
    tail: int  # vertex at s = 0
    head: int  # vertex at s = length
    length: float  # meters
    inner_radius: float = 1.0  # baseline inner radius, meters
    radius_ratio: float = 3.0  # outer/inner radius, > 1
    kind: str | None = None  # optional tag: artery / capillary / vein

    def __post_init__(self):
        if self.tail == self.head:
            raise SelfLoop(f"edge {self.id} connects vertex {self.tail} to itself")
        if not self.length > 0:
            raise GraphError(f"edge {self.id} has non-positive length {self.length}")
        if not self.inner_radius > 0:
            raise GraphError(f"edge {self.id} has non-positive inner radius")
        if not self.radius_ratio > 1:
            raise GraphError(f"edge {self.id} needs radius ratio > 1, got {self.radius_ratio}")


@dataclass(frozen=True)
class SpatialGraph:
    vertices: tuple[Vertex, ...]
    edges: tuple[Edge, ...]
    edges_in: tuple[tuple[int, ...], ...] = field(repr=False)   # per vertex: edge ids ending there
    edges_out: tuple[tuple[int, ...], ...] = field(repr=False)  # per vertex: edge ids starting there

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def degree(self, vertex_id: int) -> int:
        return len(self.edges_in[vertex_id]) + len(self.edges_out[vertex_id])

    def incident_edges(self, vertex_id: int) -> tuple[int, ...]:
        return self.edges_in[vertex_id] + self.edges_out[vertex_id]

    def internal_vertices(self) -> tuple[int, ...]:
        return tuple(v.id for v in self.vertices if self.degree(v.id) >= 2)

    def boundary_vertices(self) -> tuple[int, ...]:
        return tuple(v.id for v in self.vertices if self.degree(v.id) == 1)


def build_graph(vertices, edges) -> SpatialGraph:
    """Validate vertex/edge lists and compute incidence.

    ``vertices``: iterable of Vertex or (id, position) pairs.
    ``edges``: iterable of Edge, or dicts with keys id/tail/head and optional
    length (None means: use the Euclidean endpoint distance), inner_radius
    (or radius1), radius_ratio (or ratio) and kind.
    """
    verts = []
    for v in vertices:
        verts.append(v if isinstance(v, Vertex) else Vertex(int(v[0]), np.asarray(v[1], float)))
    verts.sort(key=lambda v: v.id)
    ids = [v.id for v in verts]
    if ids != list(range(len(verts))):
        raise GraphError(f"vertex ids must be unique and contiguous from 0, got {ids}")

    pos = {v.id: v.position for v in verts}
    built = []
    edge_ids = set()
    for e in edges:
        if isinstance(e, Edge):
            d = {"id": e.id, "tail": e.tail, "head": e.head, "length": e.length,
                 "inner_radius": e.inner_radius, "radius_ratio": e.radius_ratio, "kind": e.kind}
        else:
            d = dict(e)
            d.setdefault("inner_radius", d.pop("radius1", 1.0))
            d.setdefault("radius_ratio", d.pop("ratio", 3.0))
            d.setdefault("kind", None)
        if d["id"] in edge_ids:
            raise GraphError(f"duplicate edge id {d['id']}")
        edge_ids.add(d["id"])
        for end in (d["tail"], d["head"]):
            if end not in pos:
                raise DanglingEdgeReference(f"edge {d['id']} references missing vertex {end}")
        euclid = float(np.linalg.norm(pos[d["head"]] - pos[d["tail"]]))
        if d.get("length") is None:
            d["length"] = euclid
        elif euclid > 0 and abs(d["length"] - euclid) > _LENGTH_RTOL * max(d["length"], euclid):
            # Explicit length overrides geometry (synthetic, non-embedded networks).
            pass
        built.append(Edge(int(d["id"]), int(d["tail"]), int(d["head"]), float(d["length"]),
                          float(d["inner_radius"]), float(d["radius_ratio"]), d["kind"]))
    built.sort(key=lambda e: e.id)
    if [e.id for e in built] != list(range(len(built))):
        raise GraphError("edge ids must be unique and contiguous from 0")

    m = len(verts)
    e_in = [[] for _ in range(m)]
    e_out = [[] for _ in range(m)]
    for e in built:
        e_out[e.tail].append(e.id)
        e_in[e.head].append(e.id)

    graph = SpatialGraph(tuple(verts), tuple(built),
                         tuple(tuple(x) for x in e_in), tuple(tuple(x) for x in e_out))
    _check_connected(graph)
    return graph


def _check_connected(graph: SpatialGraph):
    if graph.n_vertices == 0 or graph.n_edges == 0:
        raise GraphError("graph needs at least one edge")
    seen = {0}
    stack = [0]
    while stack:
        j = stack.pop()
        for eid in graph.incident_edges(j):
            e = graph.edges[eid]
            other = e.head if e.tail == j else e.tail
            if other not in seen:
                seen.add(other)
                stack.append(other)
    if len(seen) != graph.n_vertices:
        missing = sorted(set(range(graph.n_vertices)) - seen)
        raise DisconnectedGraph(f"vertices {missing} are not reachable from vertex 0")


def classify_vertices(graph: SpatialGraph) -> tuple[set[int], set[int]]:
    """Partition vertices into (internal, boundary) by degree: boundary <=> degree 1."""
    internal, boundary = set(), set()
    for v in graph.vertices:
        (boundary if graph.degree(v.id) == 1 else internal).add(v.id)
    return internal, boundary


def total_length(graph: SpatialGraph) -> float:
    return sum(e.length for e in graph.edges)


def vertex_alpha(graph: SpatialGraph, vertex_id: int) -> float:
    """Vertex weight sqrt(sum of incident edge lengths / total vertex count).

    This is the square root of an averaged incident edge length; it enters
    the length-weighted norms of the dual mixed formulation.
    """
    incident = sum(graph.edges[eid].length for eid in graph.incident_edges(vertex_id))
    return math.sqrt(incident / graph.n_vertices)


@dataclass(frozen=True)
class GraphMesh:
    """Per-edge uniform interval meshes with global cell numbering.

    Edge i is split into cells[i] equal cells of size cell_length[i];
    global cell index of (edge e, cell c) is cell_offset[e] + c.
    """
    graph: SpatialGraph
    cells: tuple[int, ...]          # cells per edge
    cell_length: tuple[float, ...]  # uniform cell size per edge
    cell_offset: tuple[int, ...]
    h: float                        # max cell length over the mesh

    @property
    def n_cells(self) -> int:
        return self.cell_offset[-1] + self.cells[-1]

    def global_cell(self, edge_id: int, cell: int) -> int:
        return self.cell_offset[edge_id] + cell

    def cell_midpoint(self, edge_id: int, cell: int) -> float:
        return (cell + 0.5) * self.cell_length[edge_id]

    def containing_cell(self, edge_id: int, s: float) -> int:
        n = self.cells[edge_id]
        c = int(s / self.cell_length[edge_id])
        return min(max(c, 0), n - 1)

    def vertex_cell_size(self, vertex_id: int) -> float:
        """Mean length of mesh cells incident to the vertex, over incident edges."""
        sizes = [self.cell_length[eid] for eid in self.graph.incident_edges(vertex_id)]
        return sum(sizes) / len(sizes)


def uniform_mesh(graph: SpatialGraph, h_target: float, min_cells: int = 1) -> GraphMesh:
    """Split every edge into ceil(length / h_target) equal cells."""
    if not h_target > 0:
        raise NonPositiveMeshSize(f"mesh size must be positive, got {h_target}")
    cells, sizes, offsets = [], [], []
    off = 0
    for e in graph.edges:
        n = max(math.ceil(e.length / h_target - 1e-12), min_cells)
        cells.append(n)
        sizes.append(e.length / n)
        offsets.append(off)
        off += n
    return GraphMesh(graph, tuple(cells), tuple(sizes), tuple(offsets), max(sizes))


# -- network JSON format ----------------------------------------------------
#
# {"vertices": [{"id": 0, "x": 0.0, "y": 0.0, "z": 0.0}, ...],
#  "edges": [{"id": 0, "tail": 0, "head": 1, "radius1": 1e-3, "ratio": 3.0,
#             "length": null, "kind": "artery"}, ...]}
#
# Lengths and radii in meters; length null means Euclidean endpoint distance.

def save_network(graph: SpatialGraph, path):
    doc = {
        "vertices": [{"id": v.id, "x": v.position[0], "y": v.position[1], "z": v.position[2]}
                     for v in graph.vertices],
        "edges": [{"id": e.id, "tail": e.tail, "head": e.head, "radius1": e.inner_radius,
                   "ratio": e.radius_ratio, "length": e.length, "kind": e.kind}
                  for e in graph.edges],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_network(path) -> SpatialGraph:
    with open(path) as fh:
        doc = json.load(fh)
    vertices = [(v["id"], (v["x"], v["y"], v["z"])) for v in doc["vertices"]]
    edges = [{"id": e["id"], "tail": e["tail"], "head": e["head"],
              "length": e.get("length"), "radius1": e.get("radius1", 1.0),
              "ratio": e.get("ratio", 3.0), "kind": e.get("kind")}
             for e in doc["edges"]]
    return build_graph(vertices, edges)
