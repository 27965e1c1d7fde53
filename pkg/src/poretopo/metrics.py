"""Pore geometry measures and the hydraulic-diameter objective.

Area uses a triangle fan anchored at the mean of the ring nodes, with
signed triangle areas so the result stays smooth (and equals the enclosed
area) even for mildly non-convex deformed rings.  Rings are stored
clockwise, so the signed fan sum is negated.  All derivatives with respect
to the ring-node positions are assembled analytically.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import RingCollapseError
from .mesh import Mesh

_log = logging.getLogger(__name__)

_PERIMETER_FLOOR = 1e-12


@dataclass(frozen=True)
class PoreMetrics:
    """Measures of one pore in the current configuration.

    Gradients are with respect to the stacked ring-node coordinates
    (shape (nbn, 2)), and are therefore also the gradients with respect to
    the corresponding nodal displacements.
    """

    area: float
    perimeter: float
    hydraulic_diameter: float
    d_area: np.ndarray
    d_perimeter: np.ndarray

    @property
    def d_hydraulic_diameter(self) -> np.ndarray:
        P, A = self.perimeter, self.area
        return 4.0 * (P * self.d_area - A * self.d_perimeter) / P**2


def pore_area(ring: np.ndarray) -> tuple[float, np.ndarray]:
    """Enclosed area of a clockwise ring and its position gradient."""
    ring = np.asarray(ring, dtype=float)
    nbn = ring.shape[0]
    center = ring.mean(axis=0)
    rel = ring - center
    nxt = np.roll(rel, -1, axis=0)

    # Signed fan sum; negative for a clockwise ring.
    cross = rel[:, 0] * nxt[:, 1] - rel[:, 1] * nxt[:, 0]
    signed = 0.5 * float(np.sum(cross))

    # d(signed)/d(rel_k): triangle k contributes perp(nxt), triangle k-1
    # contributes -perp(prev); the center-motion terms cancel over the fan
    # because d(center)/d(node) is uniform.
    prev = np.roll(rel, 1, axis=0)
    grad_rel = 0.5 * np.column_stack([nxt[:, 1] - prev[:, 1],
                                      prev[:, 0] - nxt[:, 0]])
    # chain through rel = ring - mean(ring): uniform shift leaves the sum
    # of grad_rel rows acting on the mean; sum(grad_rel) = 0 analytically.
    grad = grad_rel - grad_rel.sum(axis=0) / nbn
    return -signed, -grad


def pore_perimeter(ring: np.ndarray) -> tuple[float, np.ndarray]:
    """Ring perimeter and its position gradient (zero-length edges skipped)."""
    ring = np.asarray(ring, dtype=float)
    edges = np.roll(ring, -1, axis=0) - ring
    lengths = np.hypot(edges[:, 0], edges[:, 1])
    keep = lengths > 0.0
    unit = np.zeros_like(edges)
    unit[keep] = edges[keep] / lengths[keep, None]
    grad = np.roll(unit, 1, axis=0) - unit
    return float(lengths.sum()), grad


def _ring_self_intersects(ring: np.ndarray) -> bool:
    """Segment-pair intersection test for small rings (O(n^2))."""
    n = ring.shape[0]
    p = ring
    q = np.roll(ring, -1, axis=0)

    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    for i in range(n):
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue  # shared endpoint
            d1 = orient(p[i], q[i], p[j])
            d2 = orient(p[i], q[i], q[j])
            d3 = orient(p[j], q[j], p[i])
            d4 = orient(p[j], q[j], q[i])
            if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
                return True
    return False


def pore_metrics(ring: np.ndarray, check_intersection: bool = False) -> PoreMetrics:
    """Area, perimeter and hydraulic diameter of a deformed ring."""
    A, dA = pore_area(ring)
    P, dP = pore_perimeter(ring)
    if P <= _PERIMETER_FLOOR:
        raise RingCollapseError(f"pore perimeter collapsed to {P:.3e} mm")
    if check_intersection and _ring_self_intersects(np.asarray(ring, float)):
        _log.warning(
            "pore ring self-intersects; hydraulic diameter is still reported "
            "(contact between pore boundaries is not modeled)"
        )
    return PoreMetrics(
        area=A,
        perimeter=P,
        hydraulic_diameter=4.0 * A / P,
        d_area=dA,
        d_perimeter=dP,
    )


def mesh_pore_metrics(
    mesh: Mesh,
    u: np.ndarray,
    check_intersection: bool = False,
) -> list[PoreMetrics]:
    """Metrics for every pore at nodal displacements u."""
    disp = u.reshape(-1, 2)
    out = []
    for ids in mesh.pore_rings:
        ring = mesh.coords[ids] + disp[ids]
        out.append(pore_metrics(ring, check_intersection))
    return out


def objective(
    metrics: list[PoreMetrics],
    targets: np.ndarray,
    weights: np.ndarray | None = None,
) -> float:
    """Weighted squared deviation of hydraulic diameters from their targets."""
    targets = np.asarray(targets, dtype=float)
    if weights is None:
        weights = np.ones_like(targets)
    d = np.array([m.hydraulic_diameter for m in metrics])
    return float(np.sum(weights * (targets - d) ** 2))


def objective_gradient(
    mesh: Mesh,
    metrics: list[PoreMetrics],
    targets: np.ndarray,
    weights: np.ndarray | None = None,
) -> np.ndarray:
    """d(objective)/d(u) as a dense global vector (nonzero on ring DOFs)."""
    targets = np.asarray(targets, dtype=float)
    if weights is None:
        weights = np.ones_like(targets)
    grad = np.zeros(mesh.n_dofs)
    for m, ids, target, w in zip(metrics, mesh.pore_rings, targets, weights):
        coeff = -2.0 * w * (target - m.hydraulic_diameter)
        g = coeff * m.d_hydraulic_diameter  # (nbn, 2)
        grad[2 * ids] += g[:, 0]
        grad[2 * ids + 1] += g[:, 1]
    return grad
