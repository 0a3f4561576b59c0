"""
Partition width: hierarchical binary partitions of the vertex set, exact
computation by subset dynamic programming, constructive partitions for boxes /
tori / trees with their guaranteed separation bounds, and the mixing-time
bound calculator e^{5 beta PW} (2 + |V| log 2 + beta |E|) (in log-domain).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

from .lattice import build_box, build_torus, build_tree, make_graph, TorusSpec
from .potts import BudgetExceededError


@dataclass
class PartitionNode:
    subset: int            # vertex-set bitmask
    cut_weight: int = 0    # edges between the two children
    children: tuple = ()   # (PartitionNode, PartitionNode) or ()


@dataclass
class HierarchicalPartition:
    """Rooted binary tree of vertex subsets with cut weights."""

    graph: object
    root: PartitionNode

    def validate(self):
        full = (1 << self.graph.vertex_count) - 1
        if self.root.subset != full:
            raise ValueError("root subset is not V")
        adj = _adjacency_masks(self.graph)
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.children:
                a, b = node.children
                if a.subset & b.subset or (a.subset | b.subset) != node.subset:
                    raise ValueError("children do not partition their parent")
                if node.cut_weight != _cut(adj, a.subset, b.subset):
                    raise ValueError("stored cut weight is stale")
                stack.extend(node.children)
            else:
                if node.subset.bit_count() != 1:
                    raise ValueError("leaf subset is not a singleton")
        return True

    def separation_cost(self, x):
        if not (0 <= x < self.graph.vertex_count):
            raise ValueError(f"vertex {x} not in graph")
        bit = 1 << x
        cost = 0
        node = self.root
        while node.children:
            cost += node.cut_weight
            node = node.children[0] if node.children[0].subset & bit else node.children[1]
        return cost

    def sep(self):
        """max over vertices of the accumulated cut weight root -> leaf."""
        best = 0
        stack = [(self.root, 0)]
        while stack:
            node, acc = stack.pop()
            if node.children:
                for ch in node.children:
                    stack.append((ch, acc + node.cut_weight))
            else:
                best = max(best, acc)
        return best

    def to_text(self):
        """Indented dump: one node per line, subset bitmask hex + cut weight."""
        lines = []

        def rec(node, depth):
            lines.append(f"{'  ' * depth}{node.subset:x} {node.cut_weight}")
            for ch in node.children:
                rec(ch, depth + 1)

        rec(self.root, 0)
        return "\n".join(lines)


def _adjacency_masks(graph):
    adj = [0] * graph.vertex_count
    for u, v in graph.edges:
        adj[u] |= 1 << v
        adj[v] |= 1 << u
    return adj


def _cut(adj_masks, s1, s2):
    cut = 0
    s = s1
    while s:
        v = (s & -s).bit_length() - 1
        cut += (adj_masks[v] & s2).bit_count()
        s &= s - 1
    return cut


def pw_exact(graph, max_vertices=16):
    """Partition width by subset DP, with a witness partition.

    PW(S) = min over proper bipartitions (S1, S2) of
            cut(S1, S2) + max(PW(S1), PW(S2)), PW(singleton) = 0.
    Ties broken toward the lexicographically smallest S1 containing the lowest
    bit of S, so witnesses are deterministic.
    """
    n = graph.vertex_count
    if n > max_vertices:
        raise BudgetExceededError(f"|V| = {n} exceeds DP budget {max_vertices}")
    adj = _adjacency_masks(graph)
    full = (1 << n) - 1
    value = {0: 0}
    choice = {}
    # iterate subsets in increasing popcount order so children are ready
    subsets = sorted(range(1, full + 1), key=lambda s: (s.bit_count(), s))
    for s in subsets:
        if s.bit_count() == 1:
            value[s] = 0
            continue
        low = s & -s
        rest = s ^ low
        best = None
        best_s1 = None
        # enumerate submasks of rest; S1 = low | sub keeps the tie-break rule
        sub = rest
        cands = []
        while True:
            s1 = low | sub
            if s1 != s:
                cands.append(s1)
            if sub == 0:
                break
            sub = (sub - 1) & rest
        for s1 in sorted(cands):
            s2 = s ^ s1
            v = _cut(adj, s1, s2) + max(value[s1], value[s2])
            if best is None or v < best:
                best, best_s1 = v, s1
        value[s] = best
        choice[s] = best_s1

    def build(s):
        if s.bit_count() == 1:
            return PartitionNode(subset=s)
        s1 = choice[s]
        s2 = s ^ s1
        return PartitionNode(
            subset=s,
            cut_weight=_cut(adj, s1, s2),
            children=(build(s1), build(s2)),
        )

    part = HierarchicalPartition(graph, build(full))
    return value[full], part


# ---------------------------------------------------------------------------
# constructive partitions
# ---------------------------------------------------------------------------

def _recursive_region_partition(graph, region, coord_to_id):
    """Partition a product region by unwrapping periodic directions (two cuts)
    and then halving the longest side at ceil(L/2), as in the constructions.

    region: list of (start, length, wrapped) per direction, coordinates taken
    mod the underlying torus side when wrapped arithmetic is in play.
    """
    adj = _adjacency_masks(graph)

    def vertices(reg):
        ranges = [[(s + i) for i in range(ln)] for s, ln, _ in reg]
        return [coord_to_id(c) for c in itertools.product(*ranges)]

    def mask_of(reg):
        m = 0
        for v in vertices(reg):
            m |= 1 << v
        return m

    def rec(reg):
        mask = mask_of(reg)
        if mask.bit_count() == 1:
            return PartitionNode(subset=mask)
        # first unwrap periodic directions (a cylinder needs two cuts to
        # fall into two pieces; splitting the range does exactly that)
        axis = next((i for i, (_, ln, w) in enumerate(reg) if w and ln > 1), None)
        if axis is None:
            # box mode: halve the longest side at ceil(L/2)
            axis = max(range(len(reg)), key=lambda i: reg[i][1])
        s, ln, w = reg[axis]
        half = (ln + 1) // 2  # ceil
        r1 = list(reg)
        r2 = list(reg)
        r1[axis] = (s, half, False)
        r2[axis] = (s + half, ln - half, False)
        a, b = rec(r1), rec(r2)
        return PartitionNode(
            subset=mask,
            cut_weight=_cut(adj, a.subset, b.subset),
            children=(a, b),
        )

    return HierarchicalPartition(graph, rec(region))


def pw_constructive_box(sides):
    """Recursive-halving partition of the open box; sep <= 9 * volume/min side."""
    sides = list(sides)
    graph = build_box(sides)

    def cid(coord):
        idx = 0
        for c, s in zip(coord, sides):
            idx = idx * s + c
        return idx

    region = [(0, ln, False) for ln in sides]
    part = _recursive_region_partition(graph, region, cid)
    return part.sep(), part


def pw_constructive_torus(L, d):
    """Two parallel cuts per direction, then box halving; sep <= 15 L^{d-1}."""
    spec = TorusSpec(L, d)
    graph = build_torus(spec)

    def cid(coord):
        return spec.coord_to_id(coord)  # coord_to_id reduces mod L

    region = [(0, L, True) for _ in range(d)]
    part = _recursive_region_partition(graph, region, cid)
    return part.sep(), part


def pw_constructive_tree(parent_list):
    """Split off one child subtree per step; sep <= max_degree * depth."""
    graph = build_tree(parent_list)
    n = len(parent_list)
    root = next(i for i, p in enumerate(parent_list) if p < 0)
    children = [[] for _ in range(n)]
    for v, p in enumerate(parent_list):
        if p >= 0:
            children[p].append(v)
    adj = _adjacency_masks(graph)

    def subtree_mask(v):
        m = 0
        stack = [v]
        while stack:
            u = stack.pop()
            m |= 1 << u
            stack.extend(children[u])
        return m

    def rec_subtree(v):
        # peel child subtrees off {v} + descendants, one root edge per cut
        return peel(v, list(children[v]))

    def peel(v, kids):
        mask = 1 << v
        for k in kids:
            mask |= subtree_mask(k)
        if not kids:
            return PartitionNode(subset=mask)
        first, rest = kids[0], kids[1:]
        a = rec_subtree(first)
        b = peel(v, rest)
        return PartitionNode(
            subset=mask,
            cut_weight=_cut(adj, a.subset, b.subset),
            children=(a, b),
        )

    part = HierarchicalPartition(graph, rec_subtree(root))
    return part.sep(), part


def mixing_bound_log(params, graph, pw):
    """log of e^{5 beta PW} (2 + |V| log 2 + beta |E|)."""
    if pw < 0:
        raise ValueError("partition width must be >= 0")
    poly = 2.0 + graph.vertex_count * math.log(2.0) + params.beta * graph.edge_count
    return 5.0 * params.beta * pw + math.log(poly)
