"""Updated-Lagrangian nonlinear finite element solver.

Bilinear quads with 2x2 Gauss quadrature; prescribed-displacement loading
ramped over load steps; Newton-Raphson equilibrium iteration with adaptive
step halving.  Element integration runs through the selected kernel backend
(compiled or numpy).

The element stiffness is the exact derivative of the internal force vector
(material + geometric + plane-stress coupling parts), so the global tangent
is in general slightly nonsymmetric at large strain and the linear systems
use a general sparse LU.  The adjoint of the final state solves the
transposed system on the same factorization.
"""
from __future__ import annotations

import concurrent.futures
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import _kernels
from .errors import (
    ElementInversionError,
    NonConvergenceError,
    PlaneStressError,
    SingularMatrixError,
)
from .material import MaterialParams
from .mesh import Mesh

_log = logging.getLogger(__name__)

NEWTON_MAX_ITER = 10
MAX_CUTBACKS = 4
# Newton tolerance = scale * (shear modulus * t_max * L2), a characteristic force.
NEWTON_TOL_SCALE = 1e-8

_GAUSS = 1.0 / np.sqrt(3.0)
GAUSS_POINTS = np.array([
    [-_GAUSS, -_GAUSS],
    [_GAUSS, -_GAUSS],
    [_GAUSS, _GAUSS],
    [-_GAUSS, _GAUSS],
])
GAUSS_WEIGHTS = np.ones(4)
_CORNERS = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])


def shape_eval(xi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Bilinear shape functions and parent-coordinate gradients at xi.

    Returns (N, dN) with N shape (4,) and dN shape (4, 2), node order
    counterclockwise from the lower-left corner.
    """
    x, e = float(xi[0]), float(xi[1])
    sx, se = _CORNERS[:, 0], _CORNERS[:, 1]
    N = 0.25 * (1.0 + sx * x) * (1.0 + se * e)
    dN = np.column_stack([
        0.25 * sx * (1.0 + se * e),
        0.25 * se * (1.0 + sx * x),
    ])
    return N, dN


_DN_GP = np.stack([shape_eval(xi)[1] for xi in GAUSS_POINTS])  # (4gp, 4node, 2)


@dataclass
class EquilibriumState:
    """One converged load step."""

    u: np.ndarray
    load_factor: float
    f33: np.ndarray
    residual_norm: float
    newton_iterations: int
    sigma33_max: float  # max |sigma_33| / G over quadrature points
    fint_elem: np.ndarray | None = None
    tangent: sp.csr_matrix | None = None
    residual_history: list[float] = field(default_factory=list)
    _lu: spla.SuperLU | None = field(default=None, repr=False)

    def free_tangent_lu(self, mesh: Mesh) -> spla.SuperLU:
        """LU factorization of the tangent restricted to free DOFs."""
        if self._lu is None:
            if self.tangent is None:
                raise SingularMatrixError("state carries no tangent matrix")
            kff = self.tangent[mesh.free_dofs, :][:, mesh.free_dofs].tocsc()
            try:
                self._lu = spla.splu(kff)
            except RuntimeError as exc:
                raise SingularMatrixError(str(exc)) from None
        return self._lu


class FemModel:
    """Assembly and solution driver bound to one mesh and material."""

    def __init__(
        self,
        mesh: Mesh,
        material: MaterialParams,
        newton_tol_scale: float = NEWTON_TOL_SCALE,
        max_newton_iter: int = NEWTON_MAX_ITER,
        max_cutbacks: int = MAX_CUTBACKS,
        threads: int = 1,
    ):
        self.mesh = mesh
        self.material = material
        self.max_newton_iter = max_newton_iter
        self.max_cutbacks = max_cutbacks
        self.threads = max(1, int(threads))

        coords_e = mesh.element_coords()  # (n, 4, 2)
        n = mesh.n_elements
        # Reference Jacobians and gradients at every Gauss point.
        jac = np.einsum("eai,gaj->egij", coords_e, _DN_GP)
        det = jac[..., 0, 0] * jac[..., 1, 1] - jac[..., 0, 1] * jac[..., 1, 0]
        if np.any(det <= 0):
            bad = int(np.argwhere(det <= 0)[0][0])
            raise ElementInversionError(element=bad)
        inv = np.empty_like(jac)
        inv[..., 0, 0] = jac[..., 1, 1] / det
        inv[..., 0, 1] = -jac[..., 0, 1] / det
        inv[..., 1, 0] = -jac[..., 1, 0] / det
        inv[..., 1, 1] = jac[..., 0, 0] / det
        self._dndx_ref = np.ascontiguousarray(
            np.einsum("gak,egkj->egaj", _DN_GP, inv)
        )
        self._det_jac_ref = np.ascontiguousarray(det)
        self._coords_e = np.ascontiguousarray(coords_e)

        conn = mesh.conn
        dofs = np.empty((n, 8), dtype=np.int64)
        dofs[:, 0::2] = 2 * conn
        dofs[:, 1::2] = 2 * conn + 1
        self.element_dofs = dofs
        self._rows = np.repeat(dofs, 8, axis=1).ravel()
        self._cols = np.tile(dofs, (1, 8)).ravel()

        # Characteristic force for the Newton tolerance.
        self.force_scale = material.shear_modulus * mesh.spec.L2
        self.newton_tol_scale = newton_tol_scale

        self._fint = np.zeros((n, 8))
        self._ke = np.zeros((n, 8, 8))
        self._sig33 = np.zeros((n, 4))

    def newton_tol(self, t_max: float) -> float:
        return self.newton_tol_scale * self.force_scale * t_max

    # ------------------------------------------------------------------
    # assembly
    # ------------------------------------------------------------------

    def _run_kernel(self, coords_cur, thickness, f33, want_stiffness):
        args = (
            coords_cur, self._dndx_ref, self._det_jac_ref, thickness, f33,
            self.material.a1, self.material.a2, self.material.a3,
            self.material.bulk_modulus,
            self.material.plane_stress_tol, 20, want_stiffness,
            self._fint, self._ke, self._sig33,
        )
        n = self.mesh.n_elements
        if self.threads > 1 and _kernels.supports_ranges() and n >= 4 * self.threads:
            bounds = np.linspace(0, n, self.threads + 1).astype(int)
            with concurrent.futures.ThreadPoolExecutor(self.threads) as pool:
                results = list(pool.map(
                    lambda se: _kernels.element_batch_range(*args, start=se[0], stop=se[1]),
                    zip(bounds[:-1], bounds[1:]),
                ))
            for status, e, g in results:
                if status != _kernels.STATUS_OK:
                    return status, e, g
            return _kernels.STATUS_OK, -1, -1
        return _kernels.element_batch(*args)

    def element_quantities(
        self,
        u: np.ndarray,
        thickness: np.ndarray,
        f33: np.ndarray | None = None,
        want_stiffness: bool = True,
    ) -> tuple[np.ndarray, np.ndarray | None, np.ndarray, np.ndarray]:
        """Per-element internal forces and stiffnesses at displacement u.

        Returns (fint_elem, ke_elem_or_None, f33, sigma33_residual); raises
        on element inversion or plane-stress failure.
        """
        if f33 is None:
            f33 = np.ones((self.mesh.n_elements, 4))
        else:
            f33 = f33.copy()
        coords_cur = np.ascontiguousarray(
            self._coords_e + u.reshape(-1, 2)[self.mesh.conn]
        )
        thickness = np.ascontiguousarray(thickness, dtype=float)
        status, e, g = self._run_kernel(coords_cur, thickness, f33, want_stiffness)
        if status == _kernels.STATUS_INVERTED:
            raise ElementInversionError(element=e, gauss_point=g)
        if status == _kernels.STATUS_PLANE_STRESS:
            raise PlaneStressError(element=e, gauss_point=g)
        ke = self._ke.copy() if want_stiffness else None
        return self._fint.copy(), ke, f33, self._sig33.copy()

    def assemble(
        self,
        u: np.ndarray,
        thickness: np.ndarray,
        f33: np.ndarray | None = None,
        want_stiffness: bool = True,
    ):
        """Global residual and tangent.

        Residual is the internal force vector (external loading enters only
        through prescribed displacements, so R = f_int and the external
        stiffness vanishes).
        """
        fint_e, ke_e, f33, sig33 = self.element_quantities(
            u, thickness, f33, want_stiffness
        )
        R = np.zeros(self.mesh.n_dofs)
        np.add.at(R, self.element_dofs.ravel(), fint_e.ravel())
        K = None
        if want_stiffness:
            K = sp.coo_matrix(
                (ke_e.ravel(), (self._rows, self._cols)),
                shape=(self.mesh.n_dofs, self.mesh.n_dofs),
            ).tocsr()
        return R, K, f33, sig33, fint_e

    def reactions(self, R: np.ndarray) -> np.ndarray:
        """Reaction forces on constrained DOFs (fixed + prescribed)."""
        constrained = np.concatenate([self.mesh.fixed_dofs, self.mesh.prescribed_dofs])
        return R[np.sort(constrained)]

    # ------------------------------------------------------------------
    # solution
    # ------------------------------------------------------------------

    def apply_bcs(self, u: np.ndarray, prescribed_value: float) -> None:
        u[self.mesh.fixed_dofs] = 0.0
        u[self.mesh.prescribed_dofs] = prescribed_value

    def newton_solve(
        self,
        u0: np.ndarray,
        thickness: np.ndarray,
        load_factor: float,
        f33_warm: np.ndarray | None = None,
        stretch: float | None = None,
    ) -> EquilibriumState:
        """Solve equilibrium at a fixed load factor.

        Raises NonConvergenceError if the iteration cap is reached or the
        residual grows twice in a row (cut-back signal for the caller).
        """
        mesh = self.mesh
        if stretch is None:
            stretch = mesh.spec.stretch
        tol = self.newton_tol(float(np.max(thickness)))
        u = u0.copy()
        self.apply_bcs(u, load_factor * stretch)
        f33 = f33_warm
        free = mesh.free_dofs

        prev_norm = np.inf
        growth_count = 0
        iterations = 0
        history: list[float] = []
        while True:
            R, K, f33, sig33, fint_e = self.assemble(u, thickness, f33)
            res_norm = float(np.linalg.norm(R[free]))
            history.append(res_norm)
            if not np.isfinite(res_norm):
                raise NonConvergenceError("residual is not finite", load_factor)
            if res_norm <= tol:
                state = EquilibriumState(
                    u=u,
                    load_factor=load_factor,
                    f33=f33,
                    residual_norm=res_norm,
                    newton_iterations=iterations,
                    sigma33_max=float(np.max(np.abs(sig33)))
                    / self.material.shear_modulus,
                    fint_elem=fint_e,
                    tangent=K,
                    residual_history=history,
                )
                return state
            if res_norm > prev_norm:
                growth_count += 1
                if growth_count >= 2:
                    raise NonConvergenceError(
                        f"Newton diverging at load factor {load_factor:.6g}",
                        load_factor,
                    )
            else:
                growth_count = 0
            if iterations >= self.max_newton_iter:
                raise NonConvergenceError(
                    f"Newton cap reached at load factor {load_factor:.6g} "
                    f"(residual {res_norm:.3e}, tol {tol:.3e})",
                    load_factor,
                )
            prev_norm = res_norm
            kff = K[free, :][:, free].tocsc()
            try:
                lu = spla.splu(kff)
            except RuntimeError as exc:
                raise SingularMatrixError(str(exc)) from None
            du = lu.solve(-R[free])
            if not np.all(np.isfinite(du)):
                raise SingularMatrixError("linear solve produced non-finite update")
            u[free] += du
            iterations += 1

    def incremental_solve(
        self,
        thickness: np.ndarray,
        n_steps: int,
        record_all: bool = True,
        stretch: float | None = None,
    ) -> list[EquilibriumState]:
        """Ramp the prescribed stretch linearly over n_steps and solve each.

        Failed steps are bisected (up to ``max_cutbacks`` levels).  The
        returned trajectory holds the state at every scheduled load factor,
        starting with the stress-free reference state.
        """
        if n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        mesh = self.mesh
        u = np.zeros(mesh.n_dofs)
        f33 = np.ones((mesh.n_elements, 4))
        state0 = EquilibriumState(
            u=u.copy(),
            load_factor=0.0,
            f33=f33.copy(),
            residual_norm=0.0,
            newton_iterations=0,
            sigma33_max=0.0,
            fint_elem=np.zeros((mesh.n_elements, 8)),
        )
        trajectory = [state0]

        current = 0.0
        state = state0
        for k in range(1, n_steps + 1):
            target = k / n_steps
            state = self._advance(state, thickness, current, target, 0, stretch)
            current = target
            if record_all:
                trajectory.append(state)
            else:
                trajectory[-1] = state
        # Drop intermediate tangents to bound memory; the final state keeps
        # its tangent for the adjoint solve.
        for st in trajectory[:-1]:
            st.tangent = None
            st._lu = None
        return trajectory

    def _advance(
        self,
        state: EquilibriumState,
        thickness: np.ndarray,
        lam_from: float,
        lam_to: float,
        depth: int,
        stretch: float | None,
    ) -> EquilibriumState:
        try:
            return self.newton_solve(state.u, thickness, lam_to, state.f33, stretch)
        except (NonConvergenceError, ElementInversionError, PlaneStressError,
                SingularMatrixError) as exc:
            if depth >= self.max_cutbacks:
                raise NonConvergenceError(
                    f"load step to {lam_to:.6g} failed after "
                    f"{self.max_cutbacks} cut-backs: {exc}",
                    last_good_load_factor=lam_from,
                ) from None
            mid = 0.5 * (lam_from + lam_to)
            _log.debug(
                "cut-back at load factor %.4g -> trying %.4g (depth %d)",
                lam_to, mid, depth + 1,
            )
            half = self._advance(state, thickness, lam_from, mid, depth + 1, stretch)
            return self._advance(half, thickness, mid, lam_to, depth + 1, stretch)

    # ------------------------------------------------------------------
    # diagnostics
    # ------------------------------------------------------------------

    def deformation_gradients(self, u: np.ndarray, f33: np.ndarray) -> np.ndarray:
        """Full 3x3 deformation gradient at every (element, gp)."""
        coords_cur = self._coords_e + u.reshape(-1, 2)[self.mesh.conn]
        Fp = np.einsum("eai,egaj->egij", coords_cur, self._dndx_ref)
        out = np.zeros((self.mesh.n_elements, 4, 3, 3))
        out[..., :2, :2] = Fp
        out[..., 2, 2] = f33
        return out
