"""Structured quad mesh of the rectangular membrane with rectangular pores.

The design domain is an ``L1 x L2`` rectangle discretized into
``nelx x nely`` bilinear quadrilaterals.  Pores are axis-aligned rectangles
that must coincide with element boundaries; the elements they cover are
removed and the surviving nodes/elements are renumbered compactly.  The
boundary nodes of each pore form a closed ring, stored in clockwise order so
that downstream area computations have a fixed orientation convention.

Boundary conditions follow the stretch setup: the left edge is fully
clamped, the right edge has its horizontal displacement prescribed and its
vertical displacement fixed.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    PoreAlignmentError,
    PoreOverlapError,
    PoreTopologyError,
)

# Relative tolerance for deciding whether a pore edge sits on a grid line.
_ALIGN_RTOL = 1e-9


@dataclass(frozen=True)
class PoreSpec:
    """Rectangular functional pore.

    center : (x, y) in mm; width/height in mm; ``target_hd`` is the desired
    hydraulic diameter at full stretch (mm) and ``weight`` its contribution
    to the weighted objective.
    """

    center: tuple[float, float]
    width: float
    height: float
    target_hd: float
    weight: float = 1.0

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ConfigError(f"pore size must be positive, got {self.width}x{self.height}")
        if self.weight < 0:
            raise ConfigError(f"pore weight must be nonnegative, got {self.weight}")
        if self.target_hd < 0:
            raise ConfigError(f"target hydraulic diameter must be >= 0, got {self.target_hd}")

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        cx, cy = self.center
        return (cx - self.width / 2, cx + self.width / 2,
                cy - self.height / 2, cy + self.height / 2)


@dataclass(frozen=True)
class DomainSpec:
    """Geometry, discretization and loading of the design domain."""

    L1: float
    L2: float
    nelx: int
    nely: int
    stretch: float
    pores: tuple[PoreSpec, ...] = ()

    def __post_init__(self):
        if self.L1 <= 0 or self.L2 <= 0:
            raise ConfigError("domain dimensions must be positive")
        if self.nelx < 2 or self.nely < 2:
            raise ConfigError("need at least 2 elements per direction")
        if self.stretch <= 0:
            raise ConfigError("prescribed stretch must be positive")
        object.__setattr__(self, "pores", tuple(self.pores))

    @property
    def dx(self) -> float:
        return self.L1 / self.nelx

    @property
    def dy(self) -> float:
        return self.L2 / self.nely


@dataclass
class Mesh:
    """Compact mesh with pore rings and boundary-condition DOF sets.

    ``coords`` are reference coordinates (n_nodes, 2); ``conn`` the
    counterclockwise element connectivity (n_elem, 4).  ``fixed_dofs`` covers
    both directions of the left edge plus the vertical direction of the
    right edge; ``prescribed_dofs`` are the horizontal DOFs of the right
    edge, driven to ``spec.stretch`` at full load.  ``pore_rings[i]`` lists
    node ids of pore ``i`` in clockwise order.
    """

    spec: DomainSpec
    coords: np.ndarray
    conn: np.ndarray
    fixed_dofs: np.ndarray
    prescribed_dofs: np.ndarray
    pore_rings: list[np.ndarray]
    element_area: float
    free_dofs: np.ndarray = field(init=False)

    def __post_init__(self):
        constrained = np.concatenate([self.fixed_dofs, self.prescribed_dofs])
        if len(np.unique(constrained)) != len(constrained):
            raise ConfigError("fixed and prescribed DOF sets overlap")
        mask = np.ones(self.n_dofs, dtype=bool)
        mask[constrained] = False
        self.free_dofs = np.flatnonzero(mask)

    @property
    def n_nodes(self) -> int:
        return self.coords.shape[0]

    @property
    def n_elements(self) -> int:
        return self.conn.shape[0]

    @property
    def n_dofs(self) -> int:
        return 2 * self.n_nodes

    @property
    def n_pores(self) -> int:
        return len(self.pore_rings)

    def element_coords(self) -> np.ndarray:
        """Reference nodal coordinates per element, shape (n_elem, 4, 2)."""
        return self.coords[self.conn]

    def centroids(self) -> np.ndarray:
        return self.element_coords().mean(axis=1)

    def pore_ring(self, pore_index: int) -> tuple[np.ndarray, np.ndarray]:
        """Node ids and reference coordinates of one pore ring."""
        if not 0 <= pore_index < self.n_pores:
            raise IndexError(f"pore index {pore_index} out of range")
        ids = self.pore_rings[pore_index]
        return ids, self.coords[ids]


def _pore_element_block(spec: DomainSpec, pore: PoreSpec) -> tuple[int, int, int, int]:
    """Element index block (i0, i1, j0, j1) covered by the pore.

    Raises if the pore rectangle does not coincide with grid lines or
    touches the domain boundary (the ring must be a closed interior ring).
    """
    x0, x1, y0, y1 = pore.bounds
    scale = max(spec.L1, spec.L2)

    def snap(value: float, h: float, label: str) -> int:
        idx = round(value / h)
        if abs(idx * h - value) > _ALIGN_RTOL * scale:
            raise PoreAlignmentError(
                f"pore edge {label}={value} mm does not lie on the element grid "
                f"(spacing {h} mm)"
            )
        return idx

    i0 = snap(x0, spec.dx, "x0")
    i1 = snap(x1, spec.dx, "x1")
    j0 = snap(y0, spec.dy, "y0")
    j1 = snap(y1, spec.dy, "y1")
    if i0 <= 0 or j0 <= 0 or i1 >= spec.nelx or j1 >= spec.nely:
        raise PoreTopologyError(
            f"pore at {pore.center} touches or crosses the domain boundary; "
            "its ring would not close"
        )
    return i0, i1, j0, j1


def order_ring_clockwise(node_ids: np.ndarray, coords: np.ndarray) -> np.ndarray:
    """Sort ring node ids clockwise around their centroid.

    Ties in angle are broken by radius.  Clockwise means negative shoelace
    signed area in the usual x-right / y-up convention.
    """
    pts = coords[node_ids]
    center = pts.mean(axis=0)
    rel = pts - center
    ang = np.arctan2(rel[:, 1], rel[:, 0])
    rad = np.hypot(rel[:, 0], rel[:, 1])
    # descending angle = clockwise; lexsort keys are applied last-first
    order = np.lexsort((rad, -ang))
    return np.asarray(node_ids)[order]


def ring_signed_area(points: np.ndarray) -> float:
    """Shoelace signed area of a closed polygon (negative for clockwise)."""
    x, y = points[:, 0], points[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def build_mesh(spec: DomainSpec) -> Mesh:
    """Construct the compacted mesh for a domain specification."""
    nelx, nely = spec.nelx, spec.nely
    nnx, nny = nelx + 1, nely + 1

    xs = np.linspace(0.0, spec.L1, nnx)
    ys = np.linspace(0.0, spec.L2, nny)
    gx, gy = np.meshgrid(xs, ys)  # row-major over y, x-fastest
    coords_full = np.column_stack([gx.ravel(), gy.ravel()])

    def nid(ix: int, iy: int) -> int:
        return iy * nnx + ix

    # Full-grid connectivity, counterclockwise from the lower-left corner.
    ix, iy = np.meshgrid(np.arange(nelx), np.arange(nely))
    ix, iy = ix.ravel(), iy.ravel()
    conn_full = np.column_stack([
        iy * nnx + ix,
        iy * nnx + ix + 1,
        (iy + 1) * nnx + ix + 1,
        (iy + 1) * nnx + ix,
    ])

    removed = np.zeros(nelx * nely, dtype=bool)
    blocks = []
    for pore in spec.pores:
        i0, i1, j0, j1 = _pore_element_block(spec, pore)
        blocks.append((i0, i1, j0, j1))
        block = np.zeros_like(removed)
        ii, jj = np.meshgrid(np.arange(i0, i1), np.arange(j0, j1))
        block[jj.ravel() * nelx + ii.ravel()] = True
        if np.any(block & removed):
            raise PoreOverlapError(f"pore at {pore.center} overlaps another pore")
        removed |= block

    conn_kept = conn_full[~removed]

    # Compact node numbering over nodes referenced by surviving elements.
    used = np.zeros(nnx * nny, dtype=bool)
    used[conn_kept.ravel()] = True
    new_id = np.full(nnx * nny, -1, dtype=np.int64)
    new_id[used] = np.arange(used.sum())
    coords = coords_full[used]
    conn = new_id[conn_kept]

    # Pore rings: boundary nodes of each removed block, ordered clockwise.
    rings = []
    for i0, i1, j0, j1 in blocks:
        ring_nodes = []
        for i in range(i0, i1 + 1):
            ring_nodes.append(nid(i, j0))
            ring_nodes.append(nid(i, j1))
        for j in range(j0 + 1, j1):
            ring_nodes.append(nid(i0, j))
            ring_nodes.append(nid(i1, j))
        ring_old = np.unique(np.asarray(ring_nodes, dtype=np.int64))
        if np.any(~used[ring_old]):
            raise PoreTopologyError("pore ring references removed nodes")
        ring = new_id[ring_old]
        rings.append(order_ring_clockwise(ring, coords))

    left = np.flatnonzero(np.isclose(coords[:, 0], 0.0, atol=1e-12 * spec.L1))
    right = np.flatnonzero(np.isclose(coords[:, 0], spec.L1, rtol=0, atol=1e-12 * spec.L1))
    fixed = np.concatenate([2 * left, 2 * left + 1, 2 * right + 1])
    prescribed = 2 * right

    return Mesh(
        spec=spec,
        coords=coords,
        conn=conn.astype(np.int64),
        fixed_dofs=np.sort(fixed).astype(np.int64),
        prescribed_dofs=np.sort(prescribed).astype(np.int64),
        pore_rings=rings,
        element_area=spec.dx * spec.dy,
    )
