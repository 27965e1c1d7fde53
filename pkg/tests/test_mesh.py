import numpy as np
import pytest

from poretopo.errors import (
    PoreAlignmentError,
    PoreOverlapError,
    PoreTopologyError,
)
from poretopo.mesh import (
    DomainSpec,
    PoreSpec,
    build_mesh,
    order_ring_clockwise,
    ring_signed_area,
)


def paper_domain(pores=()):
    return DomainSpec(L1=10.0, L2=16.0, nelx=80, nely=128, stretch=10.0,
                      pores=tuple(pores))


def test_plain_2x2_grid():
    mesh = build_mesh(DomainSpec(L1=1, L2=1, nelx=2, nely=2, stretch=1))
    assert mesh.n_elements == 4
    assert mesh.n_nodes == 9


def test_full_resolution_single_pore_removes_16_elements():
    # brute-force count of grid cells inside the pore rectangle
    spec = paper_domain([PoreSpec((5.0, 8.0), 0.5, 0.5, 2.0)])
    dx, dy = spec.dx, spec.dy
    count = 0
    for i in range(spec.nelx):
        for j in range(spec.nely):
            cx, cy = (i + 0.5) * dx, (j + 0.5) * dy
            if 4.75 < cx < 5.25 and 7.75 < cy < 8.25:
                count += 1
    assert count == 16
    mesh = build_mesh(spec)
    assert mesh.n_elements == 80 * 128 - count
    assert len(mesh.pore_rings[0]) == 16


def test_single_element_hole_has_4_ring_nodes():
    spec = DomainSpec(L1=4, L2=4, nelx=4, nely=4, stretch=1,
                      pores=(PoreSpec((1.5, 1.5), 1.0, 1.0, 2.0),))
    mesh = build_mesh(spec)
    assert mesh.n_elements == 15
    ids, coords = mesh.pore_ring(0)
    assert len(ids) == 4
    assert ring_signed_area(coords) < 0  # clockwise
    assert np.isclose(abs(ring_signed_area(coords)), 1.0)


def test_4x4_element_hole_has_16_ring_nodes():
    spec = DomainSpec(L1=8, L2=8, nelx=8, nely=8, stretch=1,
                      pores=(PoreSpec((4.0, 4.0), 4.0, 4.0, 2.0),))
    mesh = build_mesh(spec)
    ids, coords = mesh.pore_ring(0)
    assert len(ids) == 16
    # consecutive ring nodes are one grid edge apart
    nxt = np.roll(coords, -1, axis=0)
    gaps = np.linalg.norm(nxt - coords, axis=1)
    assert np.allclose(gaps, 1.0)


def test_ring_orientation_normalized():
    rng = np.random.default_rng(3)
    square = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
    ids = np.arange(4)
    for _ in range(10):
        perm = rng.permutation(4)
        ring = order_ring_clockwise(ids[perm], square)
        assert ring_signed_area(square[ring]) < 0
    # flipping the y axis must still come out clockwise
    flipped = square.copy()
    flipped[:, 1] *= -1
    ring = order_ring_clockwise(ids, flipped)
    assert ring_signed_area(flipped[ring]) < 0


def test_area_bookkeeping():
    spec = paper_domain([PoreSpec((5.0, 8.0), 0.5, 0.5, 2.0),
                         PoreSpec((2.5, 4.0), 0.5, 0.5, 0.0)])
    mesh = build_mesh(spec)
    pore_area = sum(p.width * p.height for p in spec.pores)
    assert np.isclose(mesh.n_elements * mesh.element_area + pore_area,
                      spec.L1 * spec.L2, rtol=1e-12)
    for i in range(mesh.n_pores):
        _, coords = mesh.pore_ring(i)
        assert np.isclose(abs(ring_signed_area(coords)), 0.25, rtol=1e-12)


def test_renumbering_is_compact_bijection():
    spec = paper_domain([PoreSpec((5.0, 8.0), 0.5, 0.5, 2.0)])
    mesh = build_mesh(spec)
    referenced = np.unique(mesh.conn.ravel())
    assert referenced[0] == 0
    assert referenced[-1] == mesh.n_nodes - 1
    assert len(referenced) == mesh.n_nodes  # no dangling nodes
    assert mesh.conn.min() >= 0


def test_boundary_conditions():
    spec = paper_domain()
    mesh = build_mesh(spec)
    left = np.flatnonzero(mesh.coords[:, 0] == 0.0)
    right = np.flatnonzero(mesh.coords[:, 0] == spec.L1)
    fixed = set(mesh.fixed_dofs.tolist())
    for n in left:
        assert 2 * n in fixed and 2 * n + 1 in fixed
    for n in right:
        assert 2 * n + 1 in fixed  # vertical held
        assert 2 * n in mesh.prescribed_dofs
    assert not set(mesh.prescribed_dofs) & fixed


def test_misaligned_pore_rejected():
    with pytest.raises(PoreAlignmentError):
        build_mesh(paper_domain([PoreSpec((5.01, 8.0), 0.5, 0.5, 2.0)]))


def test_overlapping_pores_rejected():
    with pytest.raises(PoreOverlapError):
        build_mesh(paper_domain([
            PoreSpec((5.0, 8.0), 0.5, 0.5, 2.0),
            PoreSpec((5.25, 8.0), 0.5, 0.5, 2.0),
        ]))


def test_pore_touching_boundary_rejected():
    with pytest.raises(PoreTopologyError):
        build_mesh(DomainSpec(L1=4, L2=4, nelx=4, nely=4, stretch=1,
                              pores=(PoreSpec((0.5, 1.5), 1.0, 1.0, 2.0),)))


def test_positive_reference_jacobians(small_pore_mesh):
    # counterclockwise connectivity implies positive element areas
    coords = small_pore_mesh.element_coords()
    v1 = coords[:, 1] - coords[:, 0]
    v2 = coords[:, 3] - coords[:, 0]
    cross = v1[:, 0] * v2[:, 1] - v1[:, 1] * v2[:, 0]
    assert np.all(cross > 0)
