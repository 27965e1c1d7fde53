"""Three-term Arruda-Boyce hyperelasticity under plane stress.

The strain energy splits into a volumetric part ``K/2 [(J^2-1)/2 - ln J]``
and a deviatoric part built from the first three terms of the inverse
Langevin expansion in the isochoric first invariant.  The coefficient
normalization makes the small-strain shear modulus exactly ``G``.

Plane stress is enforced pointwise: the out-of-plane stretch ``F33`` is
found by a scalar Newton iteration on ``sigma_33 = 0`` and the material
tangent is statically condensed to the in-plane directions.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ElementInversionError, PlaneStressError

_I3 = np.eye(3)

# Local iteration defaults: tolerance is relative to the shear modulus.
PLANE_STRESS_TOL_FACTOR = 1e-10
PLANE_STRESS_MAX_ITER = 20


@dataclass(frozen=True)
class MaterialParams:
    """Shear modulus G, bulk modulus K (MPa) and chain segment count n.

    Derived deviatoric coefficients:
        a1 = G_norm / 2,  a2 = a1 / (10 n),  a3 = 11 a1 / (525 n^2)
    with G_norm = G / (1 + 3/(5n) + 99/(175 n^2)).
    """

    shear_modulus: float
    bulk_modulus: float
    chain_segments: float = 8.0
    g_norm: float = field(init=False)
    a1: float = field(init=False)
    a2: float = field(init=False)
    a3: float = field(init=False)

    def __post_init__(self):
        G, K, n = self.shear_modulus, self.bulk_modulus, self.chain_segments
        if G <= 0 or K <= 0 or n <= 0:
            raise ConfigError("material moduli and chain segment count must be positive")
        g_norm = G / (1.0 + 3.0 / (5.0 * n) + 99.0 / (175.0 * n * n))
        object.__setattr__(self, "g_norm", g_norm)
        object.__setattr__(self, "a1", g_norm / 2.0)
        object.__setattr__(self, "a2", g_norm / 2.0 / (10.0 * n))
        object.__setattr__(self, "a3", 11.0 * g_norm / 2.0 / (525.0 * n * n))

    @property
    def plane_stress_tol(self) -> float:
        return PLANE_STRESS_TOL_FACTOR * self.shear_modulus


@dataclass(frozen=True)
class DeformationState:
    """Deformation gradient and derived kinematic tensors.

    Solver states always carry the plane-stress zero pattern (built via
    ``from_inplane``); general F is accepted so the constitutive functions
    can be probed along arbitrary perturbation directions.
    """

    F: np.ndarray
    B: np.ndarray = field(init=False)
    J: float = field(init=False)
    I1: float = field(init=False)
    I1_iso: float = field(init=False)

    def __post_init__(self):
        F = np.asarray(self.F, dtype=float)
        if F.shape != (3, 3):
            raise ValueError("F must be 3x3")
        J = float(np.linalg.det(F))
        if J <= 0:
            raise ElementInversionError(element=-1)
        B = F @ F.T
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "I1", float(np.trace(B)))
        object.__setattr__(self, "I1_iso", J ** (-2.0 / 3.0) * float(np.trace(B)))

    @classmethod
    def from_inplane(cls, F_inplane: np.ndarray, f33: float) -> "DeformationState":
        F = np.zeros((3, 3))
        F[:2, :2] = F_inplane
        F[2, 2] = f33
        return cls(F)


def strain_energy(state: DeformationState, mat: MaterialParams) -> float:
    """Strain energy density (MPa = mJ/mm^3)."""
    i1b, J = state.I1_iso, state.J
    return (mat.a1 * (i1b - 3.0)
            + mat.a2 * (i1b**2 - 9.0)
            + mat.a3 * (i1b**3 - 27.0)
            + mat.bulk_modulus / 2.0 * ((J**2 - 1.0) / 2.0 - np.log(J)))


def volumetric_energy(J: float, mat: MaterialParams) -> float:
    """Volumetric part of the energy; strictly convex with minimum at J=1."""
    if J <= 0:
        raise ElementInversionError(element=-1)
    return mat.bulk_modulus / 2.0 * ((J**2 - 1.0) / 2.0 - np.log(J))


def cauchy_stress(state: DeformationState, mat: MaterialParams) -> np.ndarray:
    """Cauchy stress tensor, symmetric 3x3 (MPa)."""
    B, J, I1, i1b = state.B, state.J, state.I1, state.I1_iso
    c1 = mat.a1 + 2.0 * mat.a2 * i1b + 3.0 * mat.a3 * i1b**2
    dev = 2.0 * J ** (-5.0 / 3.0) * c1 * (B - I1 / 3.0 * _I3)
    vol = mat.bulk_modulus / (2.0 * J) * (J**2 - 1.0) * _I3
    return dev + vol


def tangent_tensor(state: DeformationState, mat: MaterialParams) -> np.ndarray:
    """Spatial material tangent, full 3x3x3x3 with minor and major symmetry.

    This is the tensor relating the Truesdell rate of the Cauchy stress to
    the rate of deformation; it is what the consistent updated-Lagrangian
    stiffness integrates.
    """
    B, J, I1, i1b = state.B, state.J, state.I1, state.I1_iso
    K = mat.bulk_modulus
    c1 = mat.a1 + 2.0 * mat.a2 * i1b + 3.0 * mat.a3 * i1b**2
    c2 = 2.0 * mat.a2 + 6.0 * mat.a3 * i1b

    dxd = np.einsum("ij,kl->ijkl", _I3, _I3)
    sym_id = 0.5 * (np.einsum("ik,jl->ijkl", _I3, _I3)
                    + np.einsum("il,jk->ijkl", _I3, _I3))
    BxI = np.einsum("ij,kl->ijkl", B, _I3)
    IxB = np.einsum("ij,kl->ijkl", _I3, B)
    BxB = np.einsum("ij,kl->ijkl", B, B)

    T1 = J ** (-2.0 / 3.0) * (I1 / 9.0 * dxd + I1 / 3.0 * sym_id
                              - BxI / 3.0 - IxB / 3.0)
    T2 = J ** (-4.0 / 3.0) * (BxB - I1 / 3.0 * BxI - I1 / 3.0 * IxB
                              + I1**2 / 9.0 * dxd)
    return (4.0 / J * c1 * T1 + 4.0 / J * c2 * T2
            + K * J * (dxd - sym_id) + K / J * sym_id)


@dataclass(frozen=True)
class PlaneStressState:
    """Converged plane-stress point data.

    ``tangent2d`` is the condensed in-plane tangent in Voigt order
    (11, 22, 12) with engineering shear; ``coupling`` is the row
    (C_1133, C_2233, C_1233) and ``c3333`` the out-of-plane stiffness, both
    needed for the exact stiffness of thickness-prefactor integrals.
    """

    f33: float
    stress: np.ndarray
    tangent2d: np.ndarray
    coupling: np.ndarray
    c3333: float
    sigma33_residual: float
    iterations: int


def enforce_plane_stress(
    F_inplane: np.ndarray,
    mat: MaterialParams,
    f33_init: float = 1.0,
    tol: float | None = None,
    max_iter: int = PLANE_STRESS_MAX_ITER,
) -> PlaneStressState:
    """Solve sigma_33 = 0 for F33 and condense the tangent in-plane.

    The scalar Newton update uses d(sigma_33)/d(F33) = (C_3333 + sigma_33)/F33,
    which follows from the rate form of the stress at frozen in-plane motion.
    """
    F_inplane = np.asarray(F_inplane, dtype=float)
    det_p = F_inplane[0, 0] * F_inplane[1, 1] - F_inplane[0, 1] * F_inplane[1, 0]
    if det_p <= 0.0:
        raise ElementInversionError(element=-1)
    if tol is None:
        tol = mat.plane_stress_tol

    f33 = float(f33_init) if f33_init > 0 else 1.0
    state = DeformationState.from_inplane(F_inplane, f33)
    sig = cauchy_stress(state, mat)
    converged = abs(sig[2, 2]) <= tol
    iters = 0
    while not converged and iters < max_iter:
        cc3333 = tangent_tensor(state, mat)[2, 2, 2, 2]
        denom = cc3333 + sig[2, 2]
        if denom == 0.0:
            raise PlaneStressError(element=-1)
        f33_new = f33 - sig[2, 2] * f33 / denom
        f33 = 0.5 * f33 if f33_new <= 0.0 else f33_new
        state = DeformationState.from_inplane(F_inplane, f33)
        sig = cauchy_stress(state, mat)
        iters += 1
        converged = abs(sig[2, 2]) <= tol
    if not converged:
        raise PlaneStressError(element=-1)

    cc = tangent_tensor(state, mat)
    c3333 = cc[2, 2, 2, 2]
    coupling = np.array([cc[0, 0, 2, 2], cc[1, 1, 2, 2], cc[0, 1, 2, 2]])
    full2d = np.array([
        [cc[0, 0, 0, 0], cc[0, 0, 1, 1], cc[0, 0, 0, 1]],
        [cc[1, 1, 0, 0], cc[1, 1, 1, 1], cc[1, 1, 0, 1]],
        [cc[0, 1, 0, 0], cc[0, 1, 1, 1], cc[0, 1, 0, 1]],
    ])
    tangent2d = full2d - np.outer(coupling, coupling) / c3333

    residual = sig[2, 2]
    sig_out = sig.copy()
    sig_out[2, 2] = 0.0  # enforced to tolerance; report the residual separately
    return PlaneStressState(
        f33=f33,
        stress=sig_out,
        tangent2d=tangent2d,
        coupling=coupling,
        c3333=c3333,
        sigma33_residual=residual,
        iterations=iters,
    )
