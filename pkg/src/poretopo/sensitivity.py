"""Density filtering, adjoint solve and total design sensitivities.

The per-element design variable maps to a physical (filtered) variable via
a normalized linear hat-weight filter over element centroids, and to an
element thickness via the power law ``t = t_min + zeta^p (t_max - t_min)``.
Because the design thickness is a constant prefactor of all element
integrals, the partial derivative of the residual w.r.t. the physical
variable at frozen displacements is the element internal force scaled by
``(dt/dzeta) / t``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from .errors import ConfigError
from .fem import EquilibriumState, FemModel
from .mesh import Mesh


@dataclass(frozen=True)
class DesignSpec:
    """Thickness interpolation and filtering parameters."""

    t_min: float
    t_max: float
    penalty: float = 1.0
    filter_radius: float | None = None
    volume_fraction: float = 0.6

    def __post_init__(self):
        if not 0 < self.t_min <= self.t_max:
            raise ConfigError("need 0 < t_min <= t_max")
        if self.penalty <= 0:
            raise ConfigError("penalization exponent must be positive")
        if not 0 < self.volume_fraction <= 1:
            raise ConfigError("volume fraction must be in (0, 1]")


class DensityFilter:
    """Row-normalized linear filter over surviving-element centroids."""

    def __init__(self, mesh: Mesh, radius: float):
        if radius <= 0:
            raise ConfigError("filter radius must be positive")
        self.radius = radius
        centroids = mesh.centroids()
        tree = cKDTree(centroids)
        pairs = tree.query_pairs(radius, output_type="ndarray")
        n = mesh.n_elements
        if pairs.size:
            d = np.linalg.norm(centroids[pairs[:, 0]] - centroids[pairs[:, 1]], axis=1)
            w = radius - d
            rows = np.concatenate([pairs[:, 0], pairs[:, 1], np.arange(n)])
            cols = np.concatenate([pairs[:, 1], pairs[:, 0], np.arange(n)])
            vals = np.concatenate([w, w, np.full(n, radius)])
        else:
            rows = cols = np.arange(n)
            vals = np.full(n, radius)
        W = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
        rowsum = np.asarray(W.sum(axis=1)).ravel()
        self.H = sp.diags(1.0 / rowsum) @ W
        self.HT = self.H.T.tocsr()

    def apply(self, zeta: np.ndarray) -> np.ndarray:
        return self.H @ zeta

    def chain(self, grad_filtered: np.ndarray) -> np.ndarray:
        """Map a gradient w.r.t. filtered variables back to design variables."""
        return self.HT @ grad_filtered


class DesignField:
    """Bundles filter and thickness interpolation for one mesh."""

    def __init__(self, mesh: Mesh, design: DesignSpec):
        self.mesh = mesh
        self.design = design
        radius = design.filter_radius
        if radius is None:
            radius = 2.0 * min(mesh.spec.dx, mesh.spec.dy)
        self.filter = DensityFilter(mesh, radius)

    def filtered(self, zeta: np.ndarray) -> np.ndarray:
        zeta = np.asarray(zeta, dtype=float)
        if zeta.shape != (self.mesh.n_elements,):
            raise ConfigError(
                f"design field has {zeta.size} entries, mesh has "
                f"{self.mesh.n_elements} elements"
            )
        return self.filter.apply(zeta)

    def thickness(self, zeta_phys: np.ndarray) -> np.ndarray:
        d = self.design
        return d.t_min + zeta_phys**d.penalty * (d.t_max - d.t_min)

    def thickness_derivative(self, zeta_phys: np.ndarray) -> np.ndarray:
        d = self.design
        if d.penalty == 1.0:
            return np.full_like(zeta_phys, d.t_max - d.t_min)
        # zeta^(p-1) at zeta=0 with p>1 is defined as 0 here.
        with np.errstate(divide="ignore", invalid="ignore"):
            der = d.penalty * zeta_phys ** (d.penalty - 1.0) * (d.t_max - d.t_min)
        return np.where(zeta_phys > 0, der, 0.0)


def adjoint_solve(
    mesh: Mesh,
    state: EquilibriumState,
    df0_du: np.ndarray,
) -> np.ndarray:
    """Adjoint vector: K^T Lambda = -df0/du on free DOFs, zero elsewhere."""
    lu = state.free_tangent_lu(mesh)
    lam = np.zeros(mesh.n_dofs)
    lam[mesh.free_dofs] = lu.solve(-df0_du[mesh.free_dofs], trans="T")
    return lam


def total_sensitivity(
    model: FemModel,
    field: DesignField,
    state: EquilibriumState,
    zeta_phys: np.ndarray,
    lam: np.ndarray,
    thickness: np.ndarray,
) -> np.ndarray:
    """Total d(objective)/d(zeta), chained through the density filter."""
    fint_e = state.fint_elem
    if fint_e is None:
        raise ValueError("state does not carry element force data")
    lam_e = lam[model.element_dofs]  # (n_elem, 8)
    # dR/dzeta_phys at frozen u: element force scaled by (dt/dzeta)/t.
    scale = field.thickness_derivative(zeta_phys) / thickness
    grad_phys = np.einsum("er,er->e", lam_e, fint_e) * scale
    return field.filter.chain(grad_phys)


def volume_constraint(
    mesh: Mesh,
    field: DesignField,
    zeta_phys: np.ndarray,
) -> tuple[float, float, np.ndarray]:
    """Volume constraint g = V/V* - 1 with gradient w.r.t. design variables.

    Returns (g, volume_ratio, dg_dzeta) where volume_ratio = V / V_max is
    the quantity reported in convergence histories.
    """
    area = mesh.element_area
    t = field.thickness(zeta_phys)
    volume = float(np.sum(t) * area)
    v_max = field.design.t_max * area * mesh.n_elements
    v_star = field.design.volume_fraction * v_max
    dv_phys = field.thickness_derivative(zeta_phys) * area
    dg = field.filter.chain(dv_phys / v_star)
    return volume / v_star - 1.0, volume / v_max, dg
