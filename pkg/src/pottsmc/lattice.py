"""
Graph construction: general finite graphs, rectilinear boxes, discrete tori,
rooted trees, plus the half-integer cell grid of the torus used by the contour
machinery.

Vertices are dense integer ids.  Torus and box coordinates map to ids in
row-major order, so every construction is reproducible across runs.  Edges are
stored once, sorted canonically (lexicographic on sorted endpoint pairs), so a
bond configuration can be a stable bitmask over the edge list.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field


class DegenerateTorusError(ValueError):
    """Raised for torus side length < 3 (would create parallel edges)."""


@dataclass(frozen=True)
class Graph:
    vertex_count: int
    edges: tuple  # tuple of (u, v) with u < v, sorted lexicographically

    def __post_init__(self):
        n = self.vertex_count
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u},{v}) out of range")
            if u > v:
                raise ValueError(f"edge ({u},{v}) not in canonical (u<v) order")
            if (u, v) in seen:
                raise ValueError(f"parallel edge ({u},{v})")
            seen.add((u, v))
        if list(self.edges) != sorted(self.edges):
            raise ValueError("edge list not sorted canonically")

    @property
    def edge_count(self):
        return len(self.edges)

    @property
    def adjacency(self):
        """Per-vertex neighbor lists (computed once, cached)."""
        if "_adj" not in self.__dict__:
            adj = [[] for _ in range(self.vertex_count)]
            for u, v in self.edges:
                adj[u].append(v)
                adj[v].append(u)
            object.__setattr__(self, "_adj", [tuple(a) for a in adj])
        return self._adj

    @property
    def edge_index(self):
        """Map (u, v) with u < v -> position in the canonical edge list."""
        if "_eidx" not in self.__dict__:
            object.__setattr__(
                self, "_eidx", {e: i for i, e in enumerate(self.edges)}
            )
        return self._eidx

    def degree(self, v):
        return len(self.adjacency[v])


def make_graph(vertex_count, edges):
    """Build a Graph from an arbitrary iterable of vertex pairs."""
    canon = sorted({(min(u, v), max(u, v)) for u, v in edges})
    return Graph(vertex_count, tuple(canon))


@dataclass(frozen=True)
class TorusSpec:
    side_length: int  # L
    dimension: int    # d

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("torus dimension must be >= 1")
        if self.side_length < 3:
            raise DegenerateTorusError(
                f"torus side length {self.side_length} < 3 creates parallel edges"
            )

    @property
    def vertex_count(self):
        return self.side_length ** self.dimension

    def coord_to_id(self, coord):
        """Row-major id of a lattice point (coordinates mod L)."""
        L = self.side_length
        idx = 0
        for c in coord:
            idx = idx * L + (c % L)
        return idx

    def id_to_coord(self, idx):
        L, d = self.side_length, self.dimension
        out = [0] * d
        for i in range(d - 1, -1, -1):
            out[i] = idx % L
            idx //= L
        return tuple(out)


def build_torus(spec):
    """Nearest-neighbor graph of (Z/LZ)^d.  |V| = L^d, |E| = d L^d."""
    L, d = spec.side_length, spec.dimension
    edges = []
    for coord in itertools.product(range(L), repeat=d):
        u = spec.coord_to_id(coord)
        for axis in range(d):
            nb = list(coord)
            nb[axis] = (nb[axis] + 1) % L
            edges.append((u, spec.coord_to_id(nb)))
    return make_graph(L ** d, edges)


def build_box(sides):
    """Open-boundary grid graph on prod(sides) vertices, row-major ids."""
    sides = list(sides)
    if not sides:
        raise ValueError("empty side list")
    if any(s < 1 for s in sides):
        raise ValueError("box sides must be >= 1")

    def cid(coord):
        idx = 0
        for c, s in zip(coord, sides):
            idx = idx * s + c
        return idx

    edges = []
    for coord in itertools.product(*(range(s) for s in sides)):
        u = cid(coord)
        for axis, s in enumerate(sides):
            if coord[axis] + 1 < s:
                nb = list(coord)
                nb[axis] += 1
                edges.append((u, cid(nb)))
    n = 1
    for s in sides:
        n *= s
    return make_graph(n, edges)


def build_tree(parent_list):
    """Graph of a rooted tree given parent ids (root marked by parent -1)."""
    n = len(parent_list)
    roots = [i for i, p in enumerate(parent_list) if p < 0]
    if len(roots) != 1:
        raise ValueError(f"expected exactly one root, found {len(roots)}")
    edges = []
    for child, parent in enumerate(parent_list):
        if parent >= 0:
            if not (0 <= parent < n):
                raise ValueError(f"parent id {parent} out of range")
            edges.append((child, parent))
    # reject cycles: every vertex must reach the root
    depth = _tree_depths(parent_list)
    if any(d is None for d in depth):
        raise ValueError("cycle in parent list")
    return make_graph(n, edges)


def _tree_depths(parent_list):
    n = len(parent_list)
    depth = [None] * n
    for i, p in enumerate(parent_list):
        if p < 0:
            depth[i] = 0
    for start in range(n):
        chain = []
        v = start
        while depth[v] is None and v not in chain:
            chain.append(v)
            v = parent_list[v]
        if depth[v] is None:
            return [None] * n  # hit a cycle
        base = depth[v]
        for off, u in enumerate(reversed(chain)):
            depth[u] = base + off + 1
    return depth


def tree_stats(parent_list):
    """(max_degree, depth) of the rooted tree encoded by parent_list."""
    g = build_tree(parent_list)
    depths = _tree_depths(parent_list)
    max_deg = max((g.degree(v) for v in range(g.vertex_count)), default=0)
    return max_deg, max(depths)


def induced_subgraph(graph, vertices):
    """Subgraph on the given vertex set, relabeled densely (sorted order)."""
    vs = sorted(set(vertices))
    for v in vs:
        if not (0 <= v < graph.vertex_count):
            raise ValueError(f"vertex id {v} out of range")
    relabel = {v: i for i, v in enumerate(vs)}
    keep = set(vs)
    edges = [
        (relabel[u], relabel[v]) for u, v in graph.edges if u in keep and v in keep
    ]
    return make_graph(len(vs), edges)


def save_graph(graph, path):
    """Plain text adjacency-list format: one edge per line, 'u v'."""
    with open(path, "w") as fh:
        fh.write(f"# vertices {graph.vertex_count}\n")
        for u, v in graph.edges:
            fh.write(f"{u} {v}\n")


def load_graph(path):
    edges = []
    n = 0
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if parts[:1] == ["vertices"]:
                    n = int(parts[1])
                continue
            u, v = map(int, line.split())
            edges.append((u, v))
            n = max(n, u + 1, v + 1)
    return make_graph(n, edges)


@dataclass(frozen=True)
class HalfGrid:
    """Half-integer cell grid of a torus: cells y in {0,...,2L-1}^d, center y/2."""

    torus: TorusSpec

    @property
    def side(self):
        return 2 * self.torus.side_length

    @property
    def cell_count(self):
        return self.side ** self.torus.dimension

    def coord_to_id(self, coord):
        s = self.side
        idx = 0
        for c in coord:
            idx = idx * s + (c % s)
        return idx

    def id_to_coord(self, idx):
        s, d = self.side, self.torus.dimension
        out = [0] * d
        for i in range(d - 1, -1, -1):
            out[i] = idx % s
            idx //= s
        return tuple(out)
