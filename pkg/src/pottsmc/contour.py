"""
Torus contour/interface machinery.

A bond configuration A on the torus T_{L,d} is fattened to a union of side-1/2
cells: cell with center y/2 (y in {0,...,2L-1}^d) is occupied iff the minimal
integer cube spanned by y/2 has all its lattice edges in A (a 0-dimensional
minimal cube, i.e. a vertex, qualifies iff it is an endpoint of some bond).
The boundary of the occupied set decomposes into connected facet components;
components with zero Z_2 winding vector are contours, the rest are interfaces.
Contours get an interior/exterior; the common contour exterior classifies the
configuration as ordered / disordered / tunneling.

Scaled integer coordinates: cell centers live at 2y (units of 1/4), facets
normal to axis a between cells y and y+e_a have center 2y + e_a, and the
(d-2)-cells bounding a facet sit at center +- e_j for tangential j.  All
positions are taken mod 4L.  Cell sets and facet sets are Python int bitmasks;
flood fills use explicit stacks.  Per-contour interior/exterior data is
memoized by facet mask, which is what makes full 2^|E| censuses affordable.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp

from .lattice import TorusSpec, build_torus
from .potts import BudgetExceededError, ModelParams


class RegularityError(RuntimeError):
    """A (d-2)-cell borders an odd number (or > 2) of boundary facets."""


# ---------------------------------------------------------------------------
# precomputed torus geometry
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def torus_geometry(L, d):
    return _TorusGeometry(L, d)


class _TorusGeometry:
    """Index tables for one (L, d): cells, facets, corners, crossing flags."""

    def __init__(self, L, d):
        self.spec = TorusSpec(L, d)
        self.graph = build_torus(self.spec)
        self.L, self.d = L, d
        s = 2 * L
        self.n_cells = s ** d
        self.n_facets = self.n_cells * d
        cells = list(itertools.product(range(s), repeat=d))
        cid = {c: i for i, c in enumerate(cells)}
        self.cell_coords = cells

        eidx = self.graph.edge_index

        def edge_id(u_coord, v_coord):
            u = self.spec.coord_to_id(u_coord)
            v = self.spec.coord_to_id(v_coord)
            return eidx[(min(u, v), max(u, v))]

        # fattening tables: per cell either an "any incident bond" mask
        # (vertex cells) or an "all cube edges present" mask
        self.vertex_cell_mask = 0
        self.cell_any = [0] * self.n_cells
        self.cell_need = [0] * self.n_cells
        self.cell_is_vertex = [False] * self.n_cells
        self.cell_vertex_id = [-1] * self.n_cells
        for ci, y in enumerate(cells):
            odd = [i for i in range(d) if y[i] % 2]
            if not odd:
                v = tuple(c // 2 for c in y)
                self.cell_is_vertex[ci] = True
                self.cell_vertex_id[ci] = self.spec.coord_to_id(v)
                self.vertex_cell_mask |= 1 << ci
                m = 0
                for a in range(d):
                    for sgn in (1, -1):
                        w = list(v)
                        w[a] = (w[a] + sgn) % L
                        m |= 1 << edge_id(v, tuple(w))
                self.cell_any[ci] = m
            else:
                # corners of the minimal cube spanned by y/2; cube edge runs
                # from each low-side corner one step along each odd axis
                corners = []
                for picks in itertools.product(*[(0, 1) if i in odd else (0,) for i in range(d)]):
                    corners.append(tuple(((y[i] - 1) // 2 + picks[i]) % L if y[i] % 2 else y[i] // 2 for i in range(d)))
                need = 0
                for c1 in corners:
                    for a in odd:
                        if c1[a] != (y[a] - 1) // 2 % L:
                            continue
                        c2 = list(c1)
                        c2[a] = (c2[a] + 1) % L
                        need |= 1 << edge_id(c1, tuple(c2))
                self.cell_need[ci] = need

        # edge midpoints: bond i <-> the cell centered on it
        self.edge_mid_cell = [0] * self.graph.edge_count
        for (u, v), i in eidx.items():
            cu = self.spec.id_to_coord(u)
            cv = self.spec.id_to_coord(v)
            y = []
            for a in range(d):
                if cu[a] == cv[a]:
                    y.append(2 * cu[a])
                elif (cu[a] + 1) % L == cv[a]:
                    y.append((2 * cu[a] + 1) % s)
                else:
                    y.append((2 * cv[a] + 1) % s)
            self.edge_mid_cell[i] = cid[tuple(y)]

        # facets: id = cell * d + axis, between cell y and y + e_axis
        self.facet_cell = [0] * self.n_facets
        self.facet_other = [0] * self.n_facets
        self.facet_axis = [0] * self.n_facets
        self.facet_cross = [False] * self.n_facets
        self.facet_wind_line = [[False] * self.n_facets for _ in range(d)]
        self.facet_corners = [()] * self.n_facets
        self.facet_plane_hits = [()] * self.n_facets
        self.cell_neighbors = [[] for _ in range(self.n_cells)]
        corner_ids = {}
        four = 4 * L
        for ci, y in enumerate(cells):
            for a in range(d):
                fid = ci * d + a
                y2 = list(y)
                y2[a] = (y2[a] + 1) % s
                cj = cid[tuple(y2)]
                self.facet_cell[fid] = ci
                self.facet_other[fid] = cj
                self.facet_axis[fid] = a
                self.facet_cross[fid] = all(y[j] % 2 == 0 for j in range(d) if j != a)
                self.facet_wind_line[a][fid] = all(
                    y[j] == 2 for j in range(d) if j != a
                )
                center = [2 * y[j] for j in range(d)]
                center[a] = (center[a] + 1) % four
                corners = []
                hits = []
                for j in range(d):
                    if j == a:
                        continue
                    for sgn in (1, -1):
                        c = list(center)
                        c[j] = (c[j] + sgn) % four
                        c = tuple(c)
                        if c not in corner_ids:
                            corner_ids[c] = len(corner_ids)
                        corners.append(corner_ids[c])
                    if center[j] % 4 == 0:
                        hits.append((j, center[j] // 4))
                self.facet_corners[fid] = tuple(corners)
                self.facet_plane_hits[fid] = tuple(hits)
                self.cell_neighbors[ci].append((fid, cj))
                self.cell_neighbors[cj].append((fid, ci))

        self.n_corners = len(corner_ids)

        # flat axis-aligned candidate interfaces: one full hyperplane of
        # facets per (direction, half-integer offset); 2dL candidates
        self.planes = []
        for a in range(d):
            for off in range(s):
                h = (2 * off + 1) % four
                fmask = 0
                incompat = 0
                rep = None
                for fid in range(self.n_facets):
                    yc = cells[self.facet_cell[fid]]
                    fa = self.facet_axis[fid]
                    ci_coord = (2 * yc[a] + (1 if fa == a else 0)) % four
                    delta = abs(ci_coord - h)
                    delta = min(delta, four - delta)
                    if fa == a:
                        dist = delta
                    else:
                        dist = max(0, delta - 1)
                    if fa == a and delta == 0:
                        fmask |= 1 << fid
                        if rep is None:
                            rep = self.facet_cell[fid]
                    if dist < 2:
                        incompat |= 1 << fid
                self.planes.append((fmask, incompat, rep))

        # origin cell (vertex cell of lattice origin) for Ext rule (3)
        self.origin_cell = cid[tuple([0] * d)]
        self.full_cells = (1 << self.n_cells) - 1
        # caches for per-piece data
        self._piece_cache = {}

    # -- flood fills ------------------------------------------------------

    def components_avoiding(self, blocked_facets):
        """Components of all cells under adjacency blocked by a facet set."""
        seen = [False] * self.n_cells
        comps = []
        nbrs = self.cell_neighbors
        for start in range(self.n_cells):
            if seen[start]:
                continue
            seen[start] = True
            mask = 0
            stack = [start]
            while stack:
                c = stack.pop()
                mask |= 1 << c
                for fid, other in nbrs[c]:
                    if not seen[other] and not (blocked_facets >> fid) & 1:
                        seen[other] = True
                        stack.append(other)
            comps.append(mask)
        return comps

    def count_cell_components(self, cells_mask):
        """Connected components of an occupied cell set (facet adjacency)."""
        seen = 0
        count = 0
        nbrs = self.cell_neighbors
        remaining = cells_mask
        while remaining:
            start = (remaining & -remaining).bit_length() - 1
            count += 1
            stack = [start]
            seen |= 1 << start
            while stack:
                c = stack.pop()
                for fid, other in nbrs[c]:
                    b = 1 << other
                    if (cells_mask & b) and not (seen & b):
                        seen |= b
                        stack.append(other)
            remaining = cells_mask & ~seen
        return count


# ---------------------------------------------------------------------------
# surface pieces and decompositions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SurfacePiece:
    facet_mask: int
    winding: tuple
    norm: int
    kind: str              # "contour" | "interface"
    ord_cells: int         # adjacent cells on the occupied (ord) side
    dis_cells: int         # adjacent cells on the unoccupied (dis) side

    @property
    def is_contour(self):
        return self.kind == "contour"


@dataclass
class ContourDecomposition:
    torus: TorusSpec
    edge_mask: int
    cells: int                      # occupied cell mask V(A)
    pieces: list
    contours: list                  # winding-zero pieces
    interfaces: list                # the interface network S(A)
    interiors: dict                 # facet_mask -> Int cell mask
    exteriors: dict                 # facet_mask -> Ext cell mask
    ext_gamma: int                  # common contour exterior, cap over contours
    omega_class: str                # "ord" | "dis" | "tun"
    ext_rules: dict = field(default_factory=dict)  # facet_mask -> deciding rule


def fatten(torus, edge_mask):
    """Occupied cell mask V(A) of a bond configuration."""
    geo = torus_geometry(torus.side_length, torus.dimension)
    cells = 0
    for ci in range(geo.n_cells):
        if geo.cell_is_vertex[ci]:
            if edge_mask & geo.cell_any[ci]:
                cells |= 1 << ci
        else:
            need = geo.cell_need[ci]
            if edge_mask & need == need:
                cells |= 1 << ci
    return cells


def boundary_facets(geo, cells_mask):
    mask = 0
    fc, fo = geo.facet_cell, geo.facet_other
    for fid in range(geo.n_facets):
        if ((cells_mask >> fc[fid]) & 1) != ((cells_mask >> fo[fid]) & 1):
            mask |= 1 << fid
    return mask


def _group_facets(geo, bmask):
    """Union boundary facets sharing a (d-2)-cell; check regularity."""
    fids = []
    m = bmask
    while m:
        fids.append((m & -m).bit_length() - 1)
        m &= m - 1
    parent = {f: f for f in fids}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    seen = {}
    for f in fids:
        for corner in geo.facet_corners[f]:
            g = seen.get(corner)
            if g is None:
                seen[corner] = f
            elif g == -1:
                raise RegularityError(
                    f"(d-2)-cell {corner} borders more than two boundary facets"
                )
            else:
                ra, rb = find(f), find(g)
                if ra != rb:
                    parent[ra] = rb
                seen[corner] = -1
    for corner, g in seen.items():
        if g != -1:
            raise RegularityError(
                f"(d-2)-cell {corner} borders exactly one boundary facet"
            )
    groups = {}
    for f in fids:
        groups.setdefault(find(f), []).append(f)
    return list(groups.values())


def boundary_components(torus, cells_mask):
    """Boundary facets of an occupied cell set, grouped into SurfacePieces."""
    geo = torus_geometry(torus.side_length, torus.dimension)
    bmask = boundary_facets(geo, cells_mask)
    pieces = []
    for fids in _group_facets(geo, bmask):
        fmask = 0
        norm = 0
        wind = [0] * geo.d
        ords = 0
        diss = 0
        for f in fids:
            fmask |= 1 << f
            if geo.facet_cross[f]:
                norm += 1
            for i in range(geo.d):
                if geo.facet_wind_line[i][f]:
                    wind[i] ^= 1
            c1, c2 = geo.facet_cell[f], geo.facet_other[f]
            if (cells_mask >> c1) & 1:
                ords |= 1 << c1
                diss |= 1 << c2
            else:
                ords |= 1 << c2
                diss |= 1 << c1
        kind = "contour" if not any(wind) else "interface"
        pieces.append(
            SurfacePiece(
                facet_mask=fmask,
                winding=tuple(wind),
                norm=norm,
                kind=kind,
                ord_cells=ords,
                dis_cells=diss,
            )
        )
    return pieces


def winding_vector(piece, torus):
    """Recompute the Z_2 winding vector from the facet set."""
    geo = torus_geometry(torus.side_length, torus.dimension)
    wind = [0] * geo.d
    m = piece.facet_mask
    while m:
        f = (m & -m).bit_length() - 1
        m &= m - 1
        for i in range(geo.d):
            if geo.facet_wind_line[i][f]:
                wind[i] ^= 1
    return tuple(wind)


def interior_exterior(piece, torus):
    """(Int cells, Ext cells, deciding rule) for a contour.

    Ext selection: (1) the component holding a compatible flat axis-aligned
    interface (full facet hyperplane at l-infinity distance >= 1/2 from the
    contour); (2) else the component with more lattice-vertex cells; (3) else
    the component holding the origin cell.  Memoized per facet set.
    """
    if piece.kind != "contour":
        raise ValueError("interior/exterior is defined for contours only")
    geo = torus_geometry(torus.side_length, torus.dimension)
    hit = geo._piece_cache.get(piece.facet_mask)
    if hit is not None:
        return hit
    comps = geo.components_avoiding(piece.facet_mask)
    if len(comps) != 2:
        raise RuntimeError(
            f"contour complement has {len(comps)} components, expected 2"
        )
    ext = None
    rule = None
    for fmask, incompat, rep in geo.planes:
        if piece.facet_mask & incompat == 0:
            ext = comps[0] if (comps[0] >> rep) & 1 else comps[1]
            rule = 1
            break
    if ext is None:
        v0 = (comps[0] & geo.vertex_cell_mask).bit_count()
        v1 = (comps[1] & geo.vertex_cell_mask).bit_count()
        if v0 != v1:
            ext = comps[0] if v0 > v1 else comps[1]
            rule = 2
        else:
            ext = comps[0] if (comps[0] >> geo.origin_cell) & 1 else comps[1]
            rule = 3
    interior = comps[0] if ext is comps[1] else comps[1]
    result = (interior, ext, rule)
    geo._piece_cache[piece.facet_mask] = result
    return result


def classify(params, torus, edge_mask):
    """Full decomposition of a bond configuration on the torus."""
    geo = torus_geometry(torus.side_length, torus.dimension)
    cells = fatten(torus, edge_mask)
    pieces = boundary_components(torus, cells)
    contours = [p for p in pieces if p.is_contour]
    interfaces = [p for p in pieces if not p.is_contour]
    interiors, exteriors, rules = {}, {}, {}
    ext_gamma = geo.full_cells
    for g in contours:
        interior, ext, rule = interior_exterior(g, torus)
        interiors[g.facet_mask] = interior
        exteriors[g.facet_mask] = ext
        rules[g.facet_mask] = rule
        ext_gamma &= ext
    if interfaces:
        omega = "tun"
    elif ext_gamma & ~cells == 0:
        omega = "ord"
    elif ext_gamma & cells == 0:
        omega = "dis"
    else:
        raise RuntimeError("common exterior is neither ordered nor disordered")
    return ContourDecomposition(
        torus=torus,
        edge_mask=edge_mask,
        cells=cells,
        pieces=pieces,
        contours=contours,
        interfaces=interfaces,
        interiors=interiors,
        exteriors=exteriors,
        ext_gamma=ext_gamma,
        omega_class=omega,
        ext_rules=rules,
    )


def weight_factorized_log(params, torus, dec):
    """log of q^{c(V_ord)} e^{-e_dis |V_dis cap V|} e^{-e_ord |V_ord cap V|}
    prod e^{-kappa ||S||} prod e^{-kappa ||gamma||}."""
    params.require_contour_regime()
    if params.d != torus.dimension:
        params = ModelParams(params.q, params.beta, torus.dimension)
    geo = torus_geometry(torus.side_length, torus.dimension)
    v_ord = (dec.cells & geo.vertex_cell_mask).bit_count()
    v_dis = geo.spec.vertex_count - v_ord
    c_ord = geo.count_cell_components(dec.cells)
    norm_total = sum(p.norm for p in dec.pieces)
    return (
        c_ord * math.log(params.q)
        - params.e_dis * v_dis
        - params.e_ord * v_ord
        - params.kappa * norm_total
    )


def reconstruct(torus, dec):
    """Bond configuration whose decomposition is `dec` (matching labels).

    Rebuilt from the pieces alone: flood the complement of all piece facets,
    label each component from the facet orientations, reject inconsistent
    labelings, then take every bond whose midpoint cell is in an ordered
    component.
    """
    geo = torus_geometry(torus.side_length, torus.dimension)
    blocked = 0
    for p in dec.pieces:
        blocked |= p.facet_mask
    comps = geo.components_avoiding(blocked)
    labels = []
    for comp in comps:
        lab = None
        for p in dec.pieces:
            if p.ord_cells & comp:
                new = "ord"
            elif p.dis_cells & comp:
                new = "dis"
            else:
                continue
            if lab is not None and lab != new:
                raise ValueError("non-matching labels on a complement component")
            lab = new
        if lab is None:
            lab = dec.omega_class if dec.omega_class != "tun" else "dis"
        labels.append(lab)
    v_ord = 0
    for comp, lab in zip(comps, labels):
        if lab == "ord":
            v_ord |= comp
    mask = 0
    for i, mid in enumerate(geo.edge_mid_cell):
        if (v_ord >> mid) & 1:
            mask |= 1 << i
    return mask


def diameter(piece, torus):
    """(per-direction |I_i| list, diam = max): hyperplane-crossing extents."""
    geo = torus_geometry(torus.side_length, torus.dimension)
    hits = [set() for _ in range(geo.d)]
    m = piece.facet_mask
    while m:
        f = (m & -m).bit_length() - 1
        m &= m - 1
        for i, k in geo.facet_plane_hits[f]:
            hits[i].add(k)
    sizes = [len(h) for h in hits]
    return sizes, max(sizes)


def iso_check(piece, torus):
    """Isoperimetric inequalities for a contour:
    ||gamma|| >= 2 diam and |Int cap V| <= (1/2) ||gamma|| diam."""
    geo = torus_geometry(torus.side_length, torus.dimension)
    interior, _, _ = interior_exterior(piece, torus)
    int_v = (interior & geo.vertex_cell_mask).bit_count()
    _, diam = diameter(piece, torus)
    return {
        "norm": piece.norm,
        "diam": diam,
        "int_vertices": int_v,
        "norm_ge_2diam": piece.norm >= 2 * diam,
        "int_le_half_norm_diam": int_v <= 0.5 * piece.norm * diam,
    }


# ---------------------------------------------------------------------------
# compatibility and partial order (used by property tests)
# ---------------------------------------------------------------------------

def piece_distance_ok(piece_a, piece_b, torus):
    """True iff the two facet sets are at l-infinity distance >= 1/2."""
    geo = torus_geometry(torus.side_length, torus.dimension)
    four = 4 * torus.side_length
    boxes_a = _facet_boxes(geo, piece_a.facet_mask)
    boxes_b = _facet_boxes(geo, piece_b.facet_mask)
    for ca, ea in boxes_a:
        for cb, eb in boxes_b:
            dist = 0
            for j in range(geo.d):
                delta = abs(ca[j] - cb[j])
                delta = min(delta, four - delta)
                gap = max(0, delta - ea[j] - eb[j])
                dist = max(dist, gap)
            if dist < 2:  # scaled units of 1/4; continuum 1/2
                return False
    return True


def _facet_boxes(geo, fmask):
    out = []
    four = 4 * geo.L
    m = fmask
    while m:
        f = (m & -m).bit_length() - 1
        m &= m - 1
        y = geo.cell_coords[geo.facet_cell[f]]
        a = geo.facet_axis[f]
        center = [2 * c for c in y]
        center[a] = (center[a] + 1) % four
        extent = [1 if j != a else 0 for j in range(geo.d)]
        out.append((tuple(center), tuple(extent)))
    return out


def partial_order(gamma_a, gamma_b, torus):
    """One of "a<b", "b<a", "disjoint" for compatible contours."""
    int_b, ext_b, _ = interior_exterior(gamma_b, torus)
    int_a, ext_a, _ = interior_exterior(gamma_a, torus)
    a_cells = gamma_a.ord_cells | gamma_a.dis_cells
    b_cells = gamma_b.ord_cells | gamma_b.dis_cells
    a_in_b = (a_cells & int_b) == a_cells
    b_in_a = (b_cells & int_a) == b_cells
    a_out_b = (a_cells & ext_b) == a_cells
    b_out_a = (b_cells & ext_a) == b_cells
    flags = [a_in_b, b_in_a, a_out_b and b_out_a]
    if sum(flags) != 1:
        raise RuntimeError("trichotomy violated")
    return "a<b" if a_in_b else "b<a" if b_in_a else "disjoint"


# ---------------------------------------------------------------------------
# exhaustive census over 2^|E|
# ---------------------------------------------------------------------------

@dataclass
class CensusSummary:
    torus: TorusSpec
    n_configs: int
    n_A: np.ndarray          # |A|
    c: np.ndarray            # c(V, A)
    c_tilde: np.ndarray      # components of (V(A), A)
    v_A: np.ndarray          # |V(A)|
    norm: np.ndarray         # ||dA|| = sum of piece norms
    n_contours: np.ndarray
    n_interfaces: np.ndarray
    ext_v: np.ndarray        # |Ext Gamma(A) cap V|
    omega: np.ndarray        # 0 = dis, 1 = ord, 2 = tun
    ext_rule_counts: dict    # deciding Ext rule -> contour-instance count
    contour_norms: dict      # norm -> count of distinct contours
    interface_norms: dict    # norm -> count of distinct interfaces
    violations: dict


@lru_cache(maxsize=4)
def census_summary(L, d, edge_budget=1 << 20):
    """Decompose every bond configuration of T_{L,d} and record summaries.

    Weight-free: all (q, beta)-dependent quantities are cheap functions of
    these arrays, so one pass serves every parameter setting.
    """
    geo = torus_geometry(L, d)
    graph = geo.graph
    m = graph.edge_count
    n_cfg = 1 << m
    if n_cfg > edge_budget:
        raise BudgetExceededError(f"2^|E| = {n_cfg} exceeds budget {edge_budget}")

    cfgs = np.arange(n_cfg, dtype=np.uint64)
    n_A = np.bitwise_count(cfgs).astype(np.int16)

    # vectorized fattening: an (n_cfg, n_cells) boolean matrix
    cells_in = np.zeros((n_cfg, geo.n_cells), dtype=bool)
    for ci in range(geo.n_cells):
        if geo.cell_is_vertex[ci]:
            cells_in[:, ci] = (cfgs & np.uint64(geo.cell_any[ci])) != 0
        else:
            need = np.uint64(geo.cell_need[ci])
            cells_in[:, ci] = (cfgs & need) == need

    v_A = cells_in[:, [i for i in range(geo.n_cells) if geo.cell_is_vertex[i]]].sum(
        axis=1
    ).astype(np.int16)

    # direct delta-edge norm: |delta_1 A| + 2 |delta_2 A|
    in_V = np.zeros((n_cfg, graph.vertex_count), dtype=bool)
    incident = [0] * graph.vertex_count
    for i, (u, v) in enumerate(graph.edges):
        incident[u] |= 1 << i
        incident[v] |= 1 << i
    for v in range(graph.vertex_count):
        in_V[:, v] = (cfgs & np.uint64(incident[v])) != 0
    norm = np.zeros(n_cfg, dtype=np.int16)
    for i, (u, v) in enumerate(graph.edges):
        absent = (cfgs >> np.uint64(i)) & np.uint64(1) == 0
        k = in_V[:, u].astype(np.int8) + in_V[:, v].astype(np.int8)
        norm += np.where(absent, k, 0).astype(np.int16)
    del in_V

    # boundary facets per config
    bnd = np.zeros((n_cfg, geo.n_facets), dtype=bool)
    for fid in range(geo.n_facets):
        bnd[:, fid] = cells_in[:, geo.facet_cell[fid]] ^ cells_in[:, geo.facet_other[fid]]

    c = np.empty(n_cfg, dtype=np.int16)
    c_tilde = np.empty(n_cfg, dtype=np.int16)
    n_contours = np.zeros(n_cfg, dtype=np.int16)
    n_interfaces = np.zeros(n_cfg, dtype=np.int16)
    ext_v = np.zeros(n_cfg, dtype=np.int16)
    omega = np.zeros(n_cfg, dtype=np.int8)
    violations = {
        "regularity": 0,
        "norm_mismatch": 0,
        "reconstruct": 0,
        "cell_component_mismatch": 0,
        "vertex_count_mismatch": 0,
        "interface_norm": 0,
        "iso": 0,
        "ext_class": 0,
        "interface_winding": 0,
    }
    ext_rule_counts = {1: 0, 2: 0, 3: 0}
    contour_norm_counts = {}
    interface_norm_counts = {}
    seen_pieces = {}
    piece_data_cache = {}
    iso_cache = {}

    n = graph.vertex_count
    edges = graph.edges
    vertex_mask = geo.vertex_cell_mask
    full_cells = geo.full_cells
    facet_corners = geo.facet_corners
    facet_cross = geo.facet_cross
    wind_line = geo.facet_wind_line
    facet_cell = geo.facet_cell
    facet_other = geo.facet_other
    mid = geo.edge_mid_cell
    n_vertices = geo.spec.vertex_count
    L_pow = L ** (d - 1)
    dd = d

    for cfg in range(n_cfg):
        # exact component count via union-find (independent of the cell side)
        parent = list(range(n))
        count = n
        mm = cfg
        while mm:
            i = (mm & -mm).bit_length() - 1
            mm &= mm - 1
            a, b = edges[i]
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            while parent[b] != b:
                parent[b] = parent[parent[b]]
                b = parent[b]
            if a != b:
                parent[a] = b
                count -= 1
        c[cfg] = count
        ct = count - (n - int(v_A[cfg]))
        c_tilde[cfg] = ct

        row = bnd[cfg]
        fids = np.flatnonzero(row)
        cells_mask = 0
        crow = cells_in[cfg]
        for ci in np.flatnonzero(crow):
            cells_mask |= 1 << int(ci)

        if len(fids) == 0:
            omega[cfg] = 1 if cells_mask == full_cells else 0
            ext_v[cfg] = n_vertices
            if cells_mask not in (0, full_cells):
                violations["ext_class"] += 1
            # reconstruct check
            rec = 0
            for i in range(len(mid)):
                if (cells_mask >> mid[i]) & 1:
                    rec |= 1 << i
            if rec != cfg:
                violations["reconstruct"] += 1
            if geo.count_cell_components(cells_mask) != max(ct, 0):
                violations["cell_component_mismatch"] += 1
            if (cells_mask & vertex_mask).bit_count() != v_A[cfg]:
                violations["vertex_count_mismatch"] += 1
            continue

        # group boundary facets into pieces
        try:
            parent2 = {}
            seen_c = {}
            for f in fids.tolist():
                parent2[f] = f
            def find2(x):
                while parent2[x] != x:
                    parent2[x] = parent2[parent2[x]]
                    x = parent2[x]
                return x
            bad = False
            for f in fids.tolist():
                for corner in facet_corners[f]:
                    g = seen_c.get(corner)
                    if g is None:
                        seen_c[corner] = f
                    elif g == -1:
                        bad = True
                        break
                    else:
                        ra, rb = find2(f), find2(g)
                        if ra != rb:
                            parent2[ra] = rb
                        seen_c[corner] = -1
                if bad:
                    break
            if bad or any(g != -1 for g in seen_c.values()):
                violations["regularity"] += 1
                continue
        except RegularityError:
            violations["regularity"] += 1
            continue

        groups = {}
        for f in fids.tolist():
            groups.setdefault(find2(f), []).append(f)

        total_norm = 0
        interface_winds = []
        exts = full_cells
        is_tun = False
        for fl in groups.values():
            fmask = 0
            for f in fl:
                fmask |= 1 << f
            pdata = piece_data_cache.get(fmask)
            if pdata is None:
                pnorm = sum(1 for f in fl if facet_cross[f])
                wind = [0] * dd
                for f in fl:
                    for i in range(dd):
                        if wind_line[i][f]:
                            wind[i] ^= 1
                is_contour = not any(wind)
                pdata = (pnorm, tuple(wind), is_contour)
                piece_data_cache[fmask] = pdata
                tgt = contour_norm_counts if is_contour else interface_norm_counts
                tgt[pnorm] = tgt.get(pnorm, 0) + 1
            pnorm, wind, is_contour = pdata
            total_norm += pnorm
            if is_contour:
                cached = iso_cache.get(fmask)
                if cached is None:
                    piece = SurfacePiece(
                        facet_mask=fmask,
                        winding=wind,
                        norm=pnorm,
                        kind="contour",
                        ord_cells=0,
                        dis_cells=0,
                    )
                    interior, ext, rule = interior_exterior(piece, geo.spec)
                    sizes, diam = diameter(piece, geo.spec)
                    int_v = (interior & vertex_mask).bit_count()
                    iso_ok = (pnorm >= 2 * diam) and (
                        int_v <= 0.5 * pnorm * diam
                    )
                    cached = (ext, rule, iso_ok)
                    iso_cache[fmask] = cached
                    ext_rule_counts[cached[1]] += 1
                    if not iso_ok:
                        violations["iso"] += 1
                ext, rule, iso_ok = cached
                exts &= ext
                n_contours[cfg] += 1
            else:
                is_tun = True
                n_interfaces[cfg] += 1
                interface_winds.append(wind)
                if pnorm < L_pow:
                    violations["interface_norm"] += 1

        if total_norm != int(norm[cfg]):
            violations["norm_mismatch"] += 1
        if len(set(interface_winds)) > 1:
            violations["interface_winding"] += 1

        if is_tun:
            omega[cfg] = 2
            ext_v[cfg] = -1
        else:
            ordered = (exts & ~cells_mask) == 0
            disordered = (exts & cells_mask) == 0
            if ordered == disordered:
                violations["ext_class"] += 1
            omega[cfg] = 1 if ordered else 0
            ext_v[cfg] = (exts & vertex_mask).bit_count()

        if geo.count_cell_components(cells_mask) != ct:
            violations["cell_component_mismatch"] += 1
        if (cells_mask & vertex_mask).bit_count() != v_A[cfg]:
            violations["vertex_count_mismatch"] += 1
        rec = 0
        for i in range(len(mid)):
            if (cells_mask >> mid[i]) & 1:
                rec |= 1 << i
        if rec != cfg:
            violations["reconstruct"] += 1

    return CensusSummary(
        torus=geo.spec,
        n_configs=n_cfg,
        n_A=n_A.astype(np.int32),
        c=c.astype(np.int32),
        c_tilde=c_tilde.astype(np.int32),
        v_A=v_A.astype(np.int32),
        norm=norm.astype(np.int32),
        n_contours=n_contours,
        n_interfaces=n_interfaces,
        ext_v=ext_v,
        omega=omega,
        ext_rule_counts=ext_rule_counts,
        contour_norms=contour_norm_counts,
        interface_norms=interface_norm_counts,
        violations=violations,
    )


def fk_log_weights_from_summary(params, summary):
    """log w(A) for every configuration, from the census arrays."""
    p = params.p
    m = summary.torus.dimension * summary.torus.vertex_count
    return (
        summary.n_A * math.log(p)
        + (m - summary.n_A) * math.log1p(-p)
        + summary.c * math.log(params.q)
    )


def contour_log_weights_from_summary(params, summary):
    """Contour-form log weights q^{c~} e^{-e_dis |V\\V(A)|} e^{-e_ord |V(A)|}
    e^{-kappa ||dA||} for every configuration."""
    params.require_contour_regime()
    if params.d != summary.torus.dimension:
        params = ModelParams(params.q, params.beta, summary.torus.dimension)
    n = summary.torus.vertex_count
    return (
        summary.c_tilde * math.log(params.q)
        - params.e_dis * (n - summary.v_A)
        - params.e_ord * summary.v_A
        - params.kappa * summary.norm
    )


@dataclass
class OmegaCensus:
    log_Z: float
    log_Z_ord: float
    log_Z_dis: float
    log_Z_tun: float
    counts: dict
    ext_v_histogram: dict     # |Ext Gamma cap V| -> FK probability mass
    summary: CensusSummary


def omega_census(params, torus, edge_budget=1 << 20):
    """Classify every A, split Z = Z_dis + q Z_ord + Z_tun, histogram ExtGamma."""
    summary = census_summary(torus.side_length, torus.dimension, edge_budget)
    logw = fk_log_weights_from_summary(params, summary)
    log_Z = float(logsumexp(logw))
    parts = {}
    for code, name in ((0, "dis"), (1, "ord"), (2, "tun")):
        sel = summary.omega == code
        parts[name] = float(logsumexp(logw[sel])) if sel.any() else -math.inf
    log_Z_ord = parts["ord"] - math.log(params.q)
    hist = {}
    denom = log_Z
    no_tun = summary.omega != 2
    for val in np.unique(summary.ext_v[no_tun]):
        sel = no_tun & (summary.ext_v == val)
        hist[int(val)] = math.exp(float(logsumexp(logw[sel])) - denom)
    counts = {
        "dis": int((summary.omega == 0).sum()),
        "ord": int((summary.omega == 1).sum()),
        "tun": int((summary.omega == 2).sum()),
    }
    return OmegaCensus(
        log_Z=log_Z,
        log_Z_ord=log_Z_ord,
        log_Z_dis=parts["dis"],
        log_Z_tun=parts["tun"],
        counts=counts,
        ext_v_histogram=hist,
        summary=summary,
    )


def piece_count_census(torus, edge_budget=1 << 20):
    """Distinct contours/interfaces by norm from the exhaustive census."""
    summary = census_summary(torus.side_length, torus.dimension, edge_budget)
    return {
        "contours_by_norm": dict(sorted(summary.contour_norms.items())),
        "interfaces_by_norm": dict(sorted(summary.interface_norms.items())),
        "min_interface_norm": min(summary.interface_norms, default=None),
        "min_contour_norm": min(summary.contour_norms, default=None),
    }


# ---------------------------------------------------------------------------
# restricted partition functions and contour activities
# ---------------------------------------------------------------------------

def _contour_in_region(piece, region_mask, torus):
    """A contour is a contour in Lambda iff it stays >= 1/2 away from the
    complement; combinatorially: every cell touching the contour, and every
    neighbor of such a cell across a tangential step, lies in Lambda."""
    geo = torus_geometry(torus.side_length, torus.dimension)
    touching = piece.ord_cells | piece.dis_cells
    if touching & ~region_mask:
        return False
    # also require the facets' closures clear of the region boundary:
    # every cell sharing a (d-2)-cell with the contour must be in Lambda
    m = piece.facet_mask
    while m:
        f = (m & -m).bit_length() - 1
        m &= m - 1
        for cell in (geo.facet_cell[f], geo.facet_other[f]):
            for fid2, other in geo.cell_neighbors[cell]:
                if geo.facet_axis[fid2] != geo.facet_axis[f]:
                    if not (region_mask >> other) & 1:
                        return False
    return True


def restricted_log_Z(params, torus, region_mask, label, max_region_edges=12):
    """Z_ell(Lambda) by exhaustive scan of edge subsets local to the region.

    label "dis": configurations built from bonds with midpoint in Lambda;
    label "ord": the full torus configuration minus such bonds.  Each scanned
    configuration contributes iff all its pieces are contours in Lambda; the
    weight counts only vertices inside Lambda, plus q^{#ordered components}
    (with the surrounding ordered phase contributing the leading q that is
    divided back out for "ord").
    """
    params.require_contour_regime()
    if params.d != torus.dimension:
        params = ModelParams(params.q, params.beta, torus.dimension)
    geo = torus_geometry(torus.side_length, torus.dimension)
    graph = geo.graph
    local_edges = [
        i for i in range(graph.edge_count) if (region_mask >> geo.edge_mid_cell[i]) & 1
    ]
    if len(local_edges) > max_region_edges:
        raise BudgetExceededError(
            f"{len(local_edges)} region edges exceed budget {max_region_edges}"
        )
    full = (1 << graph.edge_count) - 1
    lam_v = (region_mask & geo.vertex_cell_mask).bit_count()
    logq = math.log(params.q)
    terms = []
    for bits in range(1 << len(local_edges)):
        sub = 0
        for j, ei in enumerate(local_edges):
            if (bits >> j) & 1:
                sub |= 1 << ei
        edge_mask = sub if label == "dis" else full & ~sub
        dec = classify(params, torus, edge_mask)
        if dec.interfaces:
            continue
        if not all(_contour_in_region(g, region_mask, torus) for g in dec.contours):
            continue
        v_ord_in = (dec.cells & region_mask & geo.vertex_cell_mask).bit_count()
        v_dis_in = lam_v - v_ord_in
        c_ord = geo.count_cell_components(dec.cells)
        logw = (
            c_ord * logq
            - params.e_dis * v_dis_in
            - params.e_ord * v_ord_in
            - params.kappa * sum(p.norm for p in dec.pieces)
        )
        terms.append(logw)
    if not terms:
        raise RuntimeError(f"no admissible configurations for label {label}")
    total = float(logsumexp(np.array(terms)))
    if label == "ord":
        total -= logq  # the surrounding ordered component's q factor
    return total


def contour_activity_log(params, torus, gamma, label):
    """log K_ell(gamma): e^{-kappa ||gamma||} times the opposite/same phase
    ratio of interior partition functions (extra q for label dis)."""
    interior, _, _ = interior_exterior(gamma, torus)
    z_dis = restricted_log_Z(params, torus, interior, "dis")
    z_ord = restricted_log_Z(params, torus, interior, "ord")
    base = -params.kappa * gamma.norm
    if label == "ord":
        return base + z_dis - z_ord
    return base + math.log(params.q) + z_ord - z_dis


# ---------------------------------------------------------------------------
# dump format
# ---------------------------------------------------------------------------

def decomposition_to_json(dec):
    geo = torus_geometry(dec.torus.side_length, dec.torus.dimension)
    cells = [geo.cell_coords[i] for i in range(geo.n_cells) if (dec.cells >> i) & 1]

    def facet_list(mask):
        out = []
        m = mask
        while m:
            f = (m & -m).bit_length() - 1
            m &= m - 1
            out.append(
                {"cell": geo.cell_coords[geo.facet_cell[f]], "axis": geo.facet_axis[f]}
            )
        return out

    return json.dumps(
        {
            "L": dec.torus.side_length,
            "d": dec.torus.dimension,
            "edge_mask": format(dec.edge_mask, "x"),
            "class": dec.omega_class,
            "occupied_cells": cells,
            "pieces": [
                {
                    "kind": p.kind,
                    "winding": list(p.winding),
                    "norm": p.norm,
                    "facets": facet_list(p.facet_mask),
                }
                for p in dec.pieces
            ],
        },
        indent=2,
    )
