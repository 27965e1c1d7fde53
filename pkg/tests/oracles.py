"""Independent reference computations used as test oracles.

Everything here is deliberately written from scratch against the underlying
math (high-precision scalar energy evaluation, small-strain linear FEA,
brute-force root bracketing), separate from the package implementation.
"""
from __future__ import annotations

import mpmath as mp
import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from poretopo.mesh import Mesh


# ----------------------------------------------------------------------
# high-precision scalar model evaluation
# ----------------------------------------------------------------------

def hp_coefficients(G, K, n):
    G, K, n = mp.mpf(G), mp.mpf(K), mp.mpf(n)
    gbar = G / (1 + mp.mpf(3) / (5 * n) + mp.mpf(99) / (175 * n**2))
    a1 = gbar / 2
    return a1, a1 / (10 * n), 11 * a1 / (525 * n**2), K


def hp_energy(F_diag3, G, K, n, dps: int = 50) -> float:
    """Energy for a diagonal deformation gradient at high precision."""
    with mp.workdps(dps):
        a1, a2, a3, Kp = hp_coefficients(G, K, n)
        f1, f2, f3 = (mp.mpf(v) for v in F_diag3)
        J = f1 * f2 * f3
        I1 = f1**2 + f2**2 + f3**2
        i1b = J ** (-mp.mpf(2) / 3) * I1
        psi = (a1 * (i1b - 3) + a2 * (i1b**2 - 9) + a3 * (i1b**3 - 27)
               + Kp / 2 * ((J**2 - 1) / 2 - mp.log(J)))
        return float(psi)


def hp_sigma33(f1, f2, f33, G, K, n):
    """sigma_33 for diag(f1, f2, f33), exact arithmetic via mpmath."""
    a1, a2, a3, Kp = hp_coefficients(G, K, n)
    f1, f2, f33 = mp.mpf(f1), mp.mpf(f2), mp.mpf(f33)
    J = f1 * f2 * f33
    I1 = f1**2 + f2**2 + f33**2
    i1b = J ** (-mp.mpf(2) / 3) * I1
    c1 = a1 + 2 * a2 * i1b + 3 * a3 * i1b**2
    return (2 * J ** (-mp.mpf(5) / 3) * c1 * (f33**2 - I1 / 3)
            + Kp / (2 * J) * (J**2 - 1))


def hp_solve_f33(f1, f2, G, K, n, dps: int = 50) -> float:
    """Brute-force bracket + bisection on sigma_33(F33) = 0."""
    with mp.workdps(dps):
        lo, hi = mp.mpf("1e-3"), mp.mpf("10")
        flo = hp_sigma33(f1, f2, lo, G, K, n)
        fhi = hp_sigma33(f1, f2, hi, G, K, n)
        assert flo < 0 < fhi, "bracket failed"
        for _ in range(200):
            mid = (lo + hi) / 2
            fm = hp_sigma33(f1, f2, mid, G, K, n)
            if fm < 0:
                lo = mid
            else:
                hi = mid
        return float((lo + hi) / 2)


# ----------------------------------------------------------------------
# numpy reference formulas (double precision, independent code path)
# ----------------------------------------------------------------------

def ref_psi_of_B(B: np.ndarray, mat) -> float:
    J = float(np.sqrt(np.linalg.det(B)))
    I1 = float(np.trace(B))
    i1b = J ** (-2.0 / 3.0) * I1
    return (mat.a1 * (i1b - 3) + mat.a2 * (i1b**2 - 9) + mat.a3 * (i1b**3 - 27)
            + mat.bulk_modulus / 2 * ((J**2 - 1) / 2 - np.log(J)))


def fd_dpsi_dB(B: np.ndarray, mat, h: float = 1e-6) -> np.ndarray:
    """Central difference of the energy w.r.t. B with symmetric increments."""
    out = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            dB = np.zeros((3, 3))
            dB[i, j] += 0.5
            dB[j, i] += 0.5
            out[i, j] = (ref_psi_of_B(B + h * dB, mat)
                         - ref_psi_of_B(B - h * dB, mat)) / (2 * h)
    return out


SYM_BASIS = [
    np.array([[1, 0, 0], [0, 0, 0], [0, 0, 0]], float),
    np.array([[0, 0, 0], [0, 1, 0], [0, 0, 0]], float),
    np.array([[0, 0, 0], [0, 0, 0], [0, 0, 1]], float),
    np.array([[0, 0.5, 0], [0.5, 0, 0], [0, 0, 0]], float),
    np.array([[0, 0, 0.5], [0, 0, 0], [0.5, 0, 0]], float),
    np.array([[0, 0, 0], [0, 0, 0.5], [0, 0.5, 0]], float),
]


def fd_spatial_tangent_apply(sigma_fn, F: np.ndarray, s: np.ndarray,
                             eps: float = 1e-6) -> np.ndarray:
    """FD of the Truesdell rate of sigma under a pure-stretch increment s."""
    I3 = np.eye(3)
    sig_p = sigma_fn((I3 + eps * s) @ F)
    sig_m = sigma_fn((I3 - eps * s) @ F)
    sig = sigma_fn(F)
    sig_dot = (sig_p - sig_m) / (2 * eps)
    return sig_dot - s @ sig - sig @ s + np.trace(s) * sig


# ----------------------------------------------------------------------
# small-strain linear plane-stress FEA (independent solver)
# ----------------------------------------------------------------------

def linear_moduli(G: float, K: float) -> tuple[float, float]:
    E = 9.0 * K * G / (3.0 * K + G)
    nu = (3.0 * K - 2.0 * G) / (2.0 * (3.0 * K + G))
    return E, nu


def linear_plane_stress_D(G: float, K: float) -> np.ndarray:
    E, nu = linear_moduli(G, K)
    return E / (1 - nu**2) * np.array([
        [1.0, nu, 0.0],
        [nu, 1.0, 0.0],
        [0.0, 0.0, (1 - nu) / 2],
    ])


def linear_quad_stiffness(coords: np.ndarray, D: np.ndarray, t: float) -> np.ndarray:
    """Standard 2x2-Gauss small-strain stiffness of one quad."""
    gp = 1.0 / np.sqrt(3.0)
    pts = [(-gp, -gp), (gp, -gp), (gp, gp), (-gp, gp)]
    corners = np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]], float)
    ke = np.zeros((8, 8))
    for xi, eta in pts:
        dN = np.column_stack([
            0.25 * corners[:, 0] * (1 + corners[:, 1] * eta),
            0.25 * corners[:, 1] * (1 + corners[:, 0] * xi),
        ])
        Jm = coords.T @ dN
        detj = np.linalg.det(Jm)
        dNdx = dN @ np.linalg.inv(Jm)
        B = np.zeros((3, 8))
        for a in range(4):
            B[0, 2 * a] = dNdx[a, 0]
            B[1, 2 * a + 1] = dNdx[a, 1]
            B[2, 2 * a] = dNdx[a, 1]
            B[2, 2 * a + 1] = dNdx[a, 0]
        ke += B.T @ D @ B * detj * t
    return ke


def linear_solve(mesh: Mesh, thickness: np.ndarray, G: float, K: float,
                 prescribed_value: float) -> np.ndarray:
    """Linear plane-stress solution of the stretch problem."""
    D = linear_plane_stress_D(G, K)
    ndof = mesh.n_dofs
    rows, cols, vals = [], [], []
    coords_e = mesh.element_coords()
    for e in range(mesh.n_elements):
        ke = linear_quad_stiffness(coords_e[e], D, thickness[e])
        dofs = np.empty(8, dtype=int)
        dofs[0::2] = 2 * mesh.conn[e]
        dofs[1::2] = 2 * mesh.conn[e] + 1
        for i in range(8):
            rows.extend([dofs[i]] * 8)
            cols.extend(dofs)
            vals.extend(ke[i])
    Kg = sp.coo_matrix((vals, (rows, cols)), shape=(ndof, ndof)).tocsr()
    u = np.zeros(ndof)
    u[mesh.prescribed_dofs] = prescribed_value
    free = mesh.free_dofs
    rhs = -(Kg @ u)[free]
    u[free] = spla.spsolve(Kg[free, :][:, free].tocsc(), rhs)
    return u
