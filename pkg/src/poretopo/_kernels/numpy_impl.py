"""Vectorized numpy implementation of the per-element assembly kernels.

This is the fallback backend; the compiled extension implements the same
algorithm point-by-point.  Both must stay numerically interchangeable, which
the kernel agreement tests enforce.

Conventions shared by both backends:
  * 4-node quads, 2x2 Gauss points, unit weights;
  * ``dndx_ref`` holds shape-function gradients w.r.t. reference coordinates
    per (element, gp, node, direction); ``det_jac_ref`` the reference
    Jacobian determinants;
  * internal force and stiffness use the design thickness as a constant
    prefactor on current-configuration area integrals;
  * the stiffness is the exact derivative of the internal force: material
    part (condensed in-plane tangent), geometric part, and the rank-one
    plane-stress coupling correction per Gauss point.
"""
from __future__ import annotations

import numpy as np

_TWO_THIRDS = 2.0 / 3.0

STATUS_OK = 0
STATUS_INVERTED = 1
STATUS_PLANE_STRESS = 2


def element_batch(
    coords_cur: np.ndarray,
    dndx_ref: np.ndarray,
    det_jac_ref: np.ndarray,
    thickness: np.ndarray,
    f33: np.ndarray,
    a1: float,
    a2: float,
    a3: float,
    bulk: float,
    ps_tol: float,
    ps_maxit: int,
    want_stiffness: bool,
    fint_out: np.ndarray,
    ke_out: np.ndarray,
    sig33_out: np.ndarray,
) -> tuple[int, int, int]:
    """Evaluate internal force (and optionally stiffness) for all elements.

    ``f33`` is used as warm start for the out-of-plane stretch iteration and
    updated in place.  Returns ``(status, element, gauss_point)``;
    status 0 means success.
    """
    nelem = coords_cur.shape[0]

    # In-plane deformation gradient at every (element, gp).
    F = np.einsum("eai,egaj->egij", coords_cur, dndx_ref)
    det_fp = F[..., 0, 0] * F[..., 1, 1] - F[..., 0, 1] * F[..., 1, 0]
    if np.any(det_fp <= 0.0):
        flat = np.flatnonzero((det_fp <= 0.0).ravel())[0]
        return STATUS_INVERTED, int(flat // 4), int(flat % 4)

    B11 = F[..., 0, 0] ** 2 + F[..., 0, 1] ** 2
    B22 = F[..., 1, 0] ** 2 + F[..., 1, 1] ** 2
    B12 = F[..., 0, 0] * F[..., 1, 0] + F[..., 0, 1] * F[..., 1, 1]
    tr2d = B11 + B22

    f = f33.copy()

    def sigma33(fv):
        B33 = fv * fv
        J = det_fp * fv
        I1 = tr2d + B33
        i1b = J ** (-_TWO_THIRDS) * I1
        c1 = a1 + 2.0 * a2 * i1b + 3.0 * a3 * i1b * i1b
        return (2.0 * J ** (-5.0 / 3.0) * c1 * (B33 - I1 / 3.0)
                + bulk / (2.0 * J) * (J * J - 1.0)), c1, i1b, J, I1, B33

    s33, c1, i1b, J, I1, B33 = sigma33(f)
    for _ in range(ps_maxit):
        active = np.abs(s33) > ps_tol
        if not np.any(active):
            break
        c2 = 2.0 * a2 + 6.0 * a3 * i1b
        h1 = 4.0 / J * c1 * J ** (-_TWO_THIRDS)
        h2 = 4.0 / J * c2 * J ** (-4.0 / 3.0)
        c3333 = (h1 * (I1 / 9.0 + I1 / 3.0 - _TWO_THIRDS * B33)
                 + h2 * (B33 * B33 - 2.0 * I1 * B33 / 3.0 + I1 * I1 / 9.0)
                 + bulk / J)
        f_new = f - s33 * f / (c3333 + s33)
        f_new = np.where(f_new <= 0.0, 0.5 * f, f_new)
        f = np.where(active, f_new, f)
        s33, c1, i1b, J, I1, B33 = sigma33(f)
    if np.any(np.abs(s33) > ps_tol):
        flat = np.flatnonzero((np.abs(s33) > ps_tol).ravel())[0]
        return STATUS_PLANE_STRESS, int(flat // 4), int(flat % 4)

    f33[...] = f
    sig33_out[...] = s33

    # Converged point quantities.
    Jm53 = J ** (-5.0 / 3.0)
    pvol = bulk / (2.0 * J) * (J * J - 1.0)
    s11 = 2.0 * Jm53 * c1 * (B11 - I1 / 3.0) + pvol
    s22 = 2.0 * Jm53 * c1 * (B22 - I1 / 3.0) + pvol
    s12 = 2.0 * Jm53 * c1 * B12

    # Current-configuration gradients and integration measure.
    inv00 = F[..., 1, 1] / det_fp
    inv01 = -F[..., 0, 1] / det_fp
    inv10 = -F[..., 1, 0] / det_fp
    inv11 = F[..., 0, 0] / det_fp
    dndx1 = dndx_ref[..., 0] * inv00[..., None] + dndx_ref[..., 1] * inv10[..., None]
    dndx2 = dndx_ref[..., 0] * inv01[..., None] + dndx_ref[..., 1] * inv11[..., None]
    dv = det_jac_ref * det_fp * thickness[:, None]  # t_e * det j_current

    sv = np.stack([s11, s22, s12], axis=-1)  # (n, 4, 3)
    # fint contributions: node a gets [s11*Na,1 + s12*Na,2 ; s22*Na,2 + s12*Na,1]
    fx = s11[..., None] * dndx1 + s12[..., None] * dndx2
    fy = s22[..., None] * dndx2 + s12[..., None] * dndx1
    fint = np.empty((nelem, 4, 4, 2))
    fint[..., 0] = fx
    fint[..., 1] = fy
    fint_out[...] = np.einsum("eg,egad->ead", dv, fint).reshape(nelem, 8)

    if not want_stiffness:
        return STATUS_OK, -1, -1

    c2 = 2.0 * a2 + 6.0 * a3 * i1b
    h1 = 4.0 / J * c1 * J ** (-_TWO_THIRDS)
    h2 = 4.0 / J * c2 * J ** (-4.0 / 3.0)
    kv = bulk * J
    ki = bulk / J

    c1111 = h1 * (I1 / 9.0 + I1 / 3.0 - _TWO_THIRDS * B11) \
        + h2 * (B11 * B11 - 2.0 * I1 * B11 / 3.0 + I1 * I1 / 9.0) + ki
    c2222 = h1 * (I1 / 9.0 + I1 / 3.0 - _TWO_THIRDS * B22) \
        + h2 * (B22 * B22 - 2.0 * I1 * B22 / 3.0 + I1 * I1 / 9.0) + ki
    c3333 = h1 * (I1 / 9.0 + I1 / 3.0 - _TWO_THIRDS * B33) \
        + h2 * (B33 * B33 - 2.0 * I1 * B33 / 3.0 + I1 * I1 / 9.0) + ki
    c1122 = h1 * (I1 / 9.0 - (B11 + B22) / 3.0) \
        + h2 * (B11 * B22 - I1 / 3.0 * (B11 + B22) + I1 * I1 / 9.0) + kv
    c1133 = h1 * (I1 / 9.0 - (B11 + B33) / 3.0) \
        + h2 * (B11 * B33 - I1 / 3.0 * (B11 + B33) + I1 * I1 / 9.0) + kv
    c2233 = h1 * (I1 / 9.0 - (B22 + B33) / 3.0) \
        + h2 * (B22 * B33 - I1 / 3.0 * (B22 + B33) + I1 * I1 / 9.0) + kv
    c1112 = -h1 * B12 / 3.0 + h2 * (B11 * B12 - I1 / 3.0 * B12)
    c2212 = -h1 * B12 / 3.0 + h2 * (B22 * B12 - I1 / 3.0 * B12)
    c1233 = -h1 * B12 / 3.0 + h2 * (B33 * B12 - I1 / 3.0 * B12)
    c1212 = h1 * I1 / 6.0 + h2 * B12 * B12 - kv / 2.0 + ki / 2.0

    D = np.empty((nelem, 4, 3, 3))
    D[..., 0, 0], D[..., 0, 1], D[..., 0, 2] = c1111, c1122, c1112
    D[..., 1, 0], D[..., 1, 1], D[..., 1, 2] = c1122, c2222, c2212
    D[..., 2, 0], D[..., 2, 1], D[..., 2, 2] = c1112, c2212, c1212
    coup = np.stack([c1133, c2233, c1233], axis=-1)  # (n, 4, 3)
    D -= coup[..., :, None] * coup[..., None, :] / c3333[..., None, None]

    Bm = np.zeros((nelem, 4, 3, 8))
    cols = np.arange(4)
    Bm[..., 0, 2 * cols] = dndx1
    Bm[..., 1, 2 * cols + 1] = dndx2
    Bm[..., 2, 2 * cols] = dndx2
    Bm[..., 2, 2 * cols + 1] = dndx1

    ke = np.einsum("eg,egkr,egkl,egls->ers", dv, Bm, D, Bm)

    # Geometric part: I2 * (dN_a . sigma . dN_b).
    gx = np.stack([dndx1, dndx2], axis=-1)  # (n, 4, 4node, 2)
    sig2d = np.empty((nelem, 4, 2, 2))
    sig2d[..., 0, 0], sig2d[..., 0, 1] = s11, s12
    sig2d[..., 1, 0], sig2d[..., 1, 1] = s12, s22
    sgeo = np.einsum("eg,egai,egij,egbj->eab", dv, gx, sig2d, gx)
    ke[:, 0::2, 0::2] += sgeo
    ke[:, 1::2, 1::2] += sgeo

    # Plane-stress coupling correction (exact derivative of the
    # thickness-prefactor force; nonsymmetric away from zero stress).
    bs = np.einsum("egkr,egk->egr", Bm, sv)
    bv = np.einsum("egkr,egk->egr", Bm, coup)
    ke += np.einsum("eg,egr,egs->ers", dv / c3333, bs, bv)

    ke_out[...] = ke
    return STATUS_OK, -1, -1
