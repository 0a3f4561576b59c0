"""
Partition width: exact values and constructive bounds.

Partition width measures the cheapest way to recursively split a graph into
singletons, charging every vertex the cut edges of each split above it.  The
cluster dynamics mixes in time exp(O(beta * PW)), so small width certifies
fast mixing.  This script compares the exact subset-DP value against the
constructive recursive-halving partitions for boxes, tori, and trees.

Run: python demos/partition_width.py
"""

from pottsmc.lattice import TorusSpec, build_box, build_torus, build_tree, tree_stats
from pottsmc.pwidth import (
    pw_constructive_box,
    pw_constructive_torus,
    pw_constructive_tree,
    pw_exact,
)


def main():
    print("boxes (open boundary)        exact  constructive  bound 9*vol/min")
    for sides in ([3, 3], [4, 2], [2, 2, 2]):
        g = build_box(sides)
        exact, _ = pw_exact(g)
        cons, part = pw_constructive_box(sides)
        bound = 9 * (g.vertex_count // min(sides))
        assert part.validate()
        print(f"  {str(sides):24s} {exact:5d}  {cons:12d}  {bound:8d}")

    print("\ntori                         exact  constructive  bound 15L^(d-1)")
    for L, d in ((3, 2), (4, 2)):
        exact, _ = pw_exact(build_torus(TorusSpec(L, d)))
        cons, part = pw_constructive_torus(L, d)
        assert part.validate()
        print(f"  L={L}, d={d}                     {exact:5d}  "
              f"{cons:12d}  {15 * L ** (d - 1):8d}")

    print("\ntrees                        exact  constructive  bound deg*depth")
    for parent in ([-1, 0, 0, 0], [-1, 0, 0, 1, 1, 2, 2]):
        g = build_tree(parent)
        exact, _ = pw_exact(g)
        cons, part = pw_constructive_tree(parent)
        d_max, depth = tree_stats(parent)
        assert part.validate()
        print(f"  {str(parent):24s} {exact:5d}  {cons:12d}  {d_max * depth:8d}")

    print("\nwitness partition for the 3x3 torus (hex subset, cut weight):")
    _, part = pw_exact(build_torus(TorusSpec(3, 2)))
    print(part.to_text())


if __name__ == "__main__":
    main()
