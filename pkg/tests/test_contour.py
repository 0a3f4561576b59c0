import math

import numpy as np
import pytest

from pottsmc.lattice import TorusSpec, build_torus
from pottsmc.potts import ModelParams, fk_log_weight
from pottsmc.contour import (
    RegularityError,
    boundary_components,
    classify,
    contour_activity_log,
    decomposition_to_json,
    diameter,
    fatten,
    interior_exterior,
    iso_check,
    partial_order,
    piece_distance_ok,
    reconstruct,
    torus_geometry,
    weight_factorized_log,
    winding_vector,
)

TORUS = TorusSpec(3, 2)
GRAPH = build_torus(TORUS)
PARAMS = ModelParams(10, 1.5, 2)


def edge_bit(u, v):
    return 1 << GRAPH.edge_index[(min(u, v), max(u, v))]


def missing_vertex_mask(v):
    mask = (1 << GRAPH.edge_count) - 1
    for w in GRAPH.adjacency[v]:
        mask &= ~edge_bit(v, w)
    return mask


def test_single_bond_decomposition():
    u, v = GRAPH.edges[0]
    dec = classify(PARAMS, TORUS, edge_bit(u, v))
    geo = torus_geometry(3, 2)
    assert dec.cells.bit_count() == 3  # two vertex cells and the bond cell
    assert len(dec.pieces) == 1
    piece = dec.pieces[0]
    assert piece.is_contour
    assert piece.norm == 6
    assert winding_vector(piece, TORUS) == (0, 0)
    _, diam = diameter(piece, TORUS)
    assert diam == 2
    assert dec.omega_class == "dis"
    interior, ext, _ = interior_exterior(piece, TORUS)
    assert interior & dec.cells == dec.cells
    assert (ext & geo.vertex_cell_mask).bit_count() == TORUS.vertex_count - 2


def test_missing_vertex_decomposition_and_activity():
    dec = classify(PARAMS, TORUS, missing_vertex_mask(0))
    assert dec.omega_class == "ord"
    assert len(dec.contours) == 1 and not dec.interfaces
    gamma = dec.contours[0]
    assert gamma.norm == 4
    interior, _, _ = interior_exterior(gamma, TORUS)
    geo = torus_geometry(3, 2)
    assert (interior & geo.vertex_cell_mask).bit_count() == 1
    # activity of the smallest ordered-phase contour in closed form
    got = contour_activity_log(PARAMS, TORUS, gamma, "ord")
    expect = -4 * PARAMS.kappa + PARAMS.e_ord - PARAMS.e_dis
    assert got == pytest.approx(expect, abs=1e-12)


def test_seam_configuration_is_tunneling():
    mask = (1 << GRAPH.edge_count) - 1
    for y in range(3):
        mask &= ~edge_bit(TORUS.coord_to_id((2, y)), TORUS.coord_to_id((0, y)))
    dec = classify(PARAMS, TORUS, mask)
    assert dec.omega_class == "tun"
    assert len(dec.interfaces) == 2 and not dec.contours
    for s in dec.interfaces:
        assert s.norm == 3
        assert winding_vector(s, TORUS) != (0, 0)
        assert s.winding == winding_vector(s, TORUS)


def test_factorized_weight_matches_random_configs():
    rng = np.random.default_rng(9)
    for _ in range(60):
        mask = int(rng.integers(0, 1 << GRAPH.edge_count))
        dec = classify(PARAMS, TORUS, mask)
        lhs = weight_factorized_log(PARAMS, TORUS, dec)
        rhs = fk_log_weight(PARAMS, GRAPH, mask)
        assert lhs == pytest.approx(rhs, abs=1e-10)


def test_reconstruct_roundtrip():
    rng = np.random.default_rng(21)
    masks = [0, (1 << GRAPH.edge_count) - 1]
    masks += [int(rng.integers(0, 1 << GRAPH.edge_count)) for _ in range(40)]
    for mask in masks:
        dec = classify(PARAMS, TORUS, mask)
        assert reconstruct(TORUS, dec) == mask


def test_iso_check_flags():
    for mask in (edge_bit(*GRAPH.edges[0]), missing_vertex_mask(4)):
        dec = classify(PARAMS, TORUS, mask)
        for gamma in dec.contours:
            rep = iso_check(gamma, TORUS)
            assert rep["norm_ge_2diam"]
            assert rep["int_le_half_norm_diam"]


def test_partial_order_trichotomy():
    from itertools import combinations

    bonds = [
        classify(PARAMS, TORUS, edge_bit(u, v)).contours[0]
        for u, v in GRAPH.edges
    ]
    checked = 0
    for a, b in combinations(bonds, 2):
        if piece_distance_ok(a, b, TORUS):
            # distinct small contours never nest, so they must be disjoint
            assert partial_order(a, b, TORUS) == "disjoint"
            checked += 1
    assert checked > 0


def test_irregular_cell_set_rejected():
    geo = torus_geometry(3, 2)
    coords = {geo.cell_coords[i]: i for i in range(geo.n_cells)}
    mask = (1 << coords[(0, 0)]) | (1 << coords[(1, 1)])
    with pytest.raises(RegularityError):
        boundary_components(TORUS, mask)


def test_decomposition_json_fields():
    import json

    dec = classify(PARAMS, TORUS, missing_vertex_mask(0))
    doc = json.loads(decomposition_to_json(dec))
    assert doc["class"] == "ord"
    assert doc["L"] == 3 and doc["d"] == 2
    assert int(doc["edge_mask"], 16) == missing_vertex_mask(0)
    assert len(doc["pieces"]) == 1
