# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-element assembly kernel.

Scalar counterpart of ``numpy_impl.element_batch``; same inputs, outputs and
iteration semantics.  The element loop runs without the GIL so callers may
split the batch across threads over disjoint index ranges.
"""
from libc.math cimport fabs, pow

import numpy as np

STATUS_OK = 0
STATUS_INVERTED = 1
STATUS_PLANE_STRESS = 2

cdef int _OK = 0
cdef int _INVERTED = 1
cdef int _PLANE_STRESS = 2


cdef struct PointState:
    double B11, B22, B12, B33, I1, J, i1b, c1, det_fp
    double s11, s22, s12, s33


cdef inline void _eval_sigma(PointState* p, double f33, double a1, double a2,
                             double a3, double bulk) noexcept nogil:
    cdef double Jm23, Jm53, pvol
    p.B33 = f33 * f33
    p.J = p.det_fp * f33
    p.I1 = p.B11 + p.B22 + p.B33
    Jm23 = pow(p.J, -2.0 / 3.0)
    p.i1b = Jm23 * p.I1
    p.c1 = a1 + 2.0 * a2 * p.i1b + 3.0 * a3 * p.i1b * p.i1b
    Jm53 = Jm23 / p.J
    pvol = bulk / (2.0 * p.J) * (p.J * p.J - 1.0)
    p.s11 = 2.0 * Jm53 * p.c1 * (p.B11 - p.I1 / 3.0) + pvol
    p.s22 = 2.0 * Jm53 * p.c1 * (p.B22 - p.I1 / 3.0) + pvol
    p.s12 = 2.0 * Jm53 * p.c1 * p.B12
    p.s33 = 2.0 * Jm53 * p.c1 * (p.B33 - p.I1 / 3.0) + pvol


cdef inline double _c3333(PointState* p, double a2, double a3, double bulk) noexcept nogil:
    cdef double c2, h1, h2
    c2 = 2.0 * a2 + 6.0 * a3 * p.i1b
    h1 = 4.0 / p.J * p.c1 * pow(p.J, -2.0 / 3.0)
    h2 = 4.0 / p.J * c2 * pow(p.J, -4.0 / 3.0)
    return (h1 * (p.I1 / 9.0 + p.I1 / 3.0 - 2.0 / 3.0 * p.B33)
            + h2 * (p.B33 * p.B33 - 2.0 * p.I1 * p.B33 / 3.0 + p.I1 * p.I1 / 9.0)
            + bulk / p.J)


def element_batch(
    double[:, :, ::1] coords_cur,
    double[:, :, :, ::1] dndx_ref,
    double[:, ::1] det_jac_ref,
    double[::1] thickness,
    double[:, ::1] f33,
    double a1,
    double a2,
    double a3,
    double bulk,
    double ps_tol,
    int ps_maxit,
    bint want_stiffness,
    double[:, ::1] fint_out,
    double[:, :, ::1] ke_out,
    double[:, ::1] sig33_out,
):
    cdef Py_ssize_t nelem = coords_cur.shape[0]
    cdef int status = STATUS_OK
    cdef Py_ssize_t bad_e = -1, bad_g = -1
    with nogil:
        status = _run(coords_cur, dndx_ref, det_jac_ref, thickness, f33,
                      a1, a2, a3, bulk, ps_tol, ps_maxit, want_stiffness,
                      fint_out, ke_out, sig33_out, 0, nelem, &bad_e, &bad_g)
    return status, int(bad_e), int(bad_g)


def element_batch_range(
    double[:, :, ::1] coords_cur,
    double[:, :, :, ::1] dndx_ref,
    double[:, ::1] det_jac_ref,
    double[::1] thickness,
    double[:, ::1] f33,
    double a1,
    double a2,
    double a3,
    double bulk,
    double ps_tol,
    int ps_maxit,
    bint want_stiffness,
    double[:, ::1] fint_out,
    double[:, :, ::1] ke_out,
    double[:, ::1] sig33_out,
    Py_ssize_t start,
    Py_ssize_t stop,
):
    """Same as element_batch but restricted to elements [start, stop)."""
    cdef int status = STATUS_OK
    cdef Py_ssize_t bad_e = -1, bad_g = -1
    with nogil:
        status = _run(coords_cur, dndx_ref, det_jac_ref, thickness, f33,
                      a1, a2, a3, bulk, ps_tol, ps_maxit, want_stiffness,
                      fint_out, ke_out, sig33_out, start, stop, &bad_e, &bad_g)
    return status, int(bad_e), int(bad_g)


cdef int _run(
    double[:, :, ::1] coords_cur,
    double[:, :, :, ::1] dndx_ref,
    double[:, ::1] det_jac_ref,
    double[::1] thickness,
    double[:, ::1] f33,
    double a1, double a2, double a3, double bulk,
    double ps_tol, int ps_maxit, bint want_stiffness,
    double[:, ::1] fint_out,
    double[:, :, ::1] ke_out,
    double[:, ::1] sig33_out,
    Py_ssize_t start, Py_ssize_t stop,
    Py_ssize_t* bad_e, Py_ssize_t* bad_g,
) noexcept nogil:
    cdef Py_ssize_t e, g, a, b, it, r, s
    cdef double F11, F12, F21, F22, inv00, inv01, inv10, inv11
    cdef double f, fn, c33, dv, denom
    cdef double c2, h1, h2, kv, ki
    cdef double c1111, c2222, c3333v, c1122, c1133, c2233, c1112, c2212, c1233, c1212
    cdef double D[3][3]
    cdef double coup[3]
    cdef double dn1[4]
    cdef double dn2[4]
    cdef double Bm[3][8]
    cdef double bs[8]
    cdef double bv[8]
    cdef double svec[3]
    cdef double tmp
    cdef PointState p
    cdef bint converged

    for e in range(start, stop):
        for r in range(8):
            fint_out[e, r] = 0.0
        if want_stiffness:
            for r in range(8):
                for s in range(8):
                    ke_out[e, r, s] = 0.0
        for g in range(4):
            F11 = 0.0; F12 = 0.0; F21 = 0.0; F22 = 0.0
            for a in range(4):
                F11 += coords_cur[e, a, 0] * dndx_ref[e, g, a, 0]
                F12 += coords_cur[e, a, 0] * dndx_ref[e, g, a, 1]
                F21 += coords_cur[e, a, 1] * dndx_ref[e, g, a, 0]
                F22 += coords_cur[e, a, 1] * dndx_ref[e, g, a, 1]
            p.det_fp = F11 * F22 - F12 * F21
            if p.det_fp <= 0.0:
                bad_e[0] = e; bad_g[0] = g
                return _INVERTED
            p.B11 = F11 * F11 + F12 * F12
            p.B22 = F21 * F21 + F22 * F22
            p.B12 = F11 * F21 + F12 * F22

            # local plane-stress iteration on the out-of-plane stretch
            f = f33[e, g]
            if f <= 0.0:
                f = 1.0
            _eval_sigma(&p, f, a1, a2, a3, bulk)
            converged = fabs(p.s33) <= ps_tol
            it = 0
            while not converged and it < ps_maxit:
                c33 = _c3333(&p, a2, a3, bulk)
                denom = c33 + p.s33
                fn = f - p.s33 * f / denom
                if fn <= 0.0:
                    fn = 0.5 * f
                f = fn
                _eval_sigma(&p, f, a1, a2, a3, bulk)
                it += 1
                converged = fabs(p.s33) <= ps_tol
            if not converged:
                bad_e[0] = e; bad_g[0] = g
                return _PLANE_STRESS
            f33[e, g] = f
            sig33_out[e, g] = p.s33

            # current-configuration shape gradients: dN/dx = dN/dX * F^{-1}
            inv00 = F22 / p.det_fp
            inv01 = -F12 / p.det_fp
            inv10 = -F21 / p.det_fp
            inv11 = F11 / p.det_fp
            for a in range(4):
                dn1[a] = dndx_ref[e, g, a, 0] * inv00 + dndx_ref[e, g, a, 1] * inv10
                dn2[a] = dndx_ref[e, g, a, 0] * inv01 + dndx_ref[e, g, a, 1] * inv11

            dv = det_jac_ref[e, g] * p.det_fp * thickness[e]

            for a in range(4):
                fint_out[e, 2 * a] += dv * (p.s11 * dn1[a] + p.s12 * dn2[a])
                fint_out[e, 2 * a + 1] += dv * (p.s22 * dn2[a] + p.s12 * dn1[a])

            if not want_stiffness:
                continue

            c2 = 2.0 * a2 + 6.0 * a3 * p.i1b
            h1 = 4.0 / p.J * p.c1 * pow(p.J, -2.0 / 3.0)
            h2 = 4.0 / p.J * c2 * pow(p.J, -4.0 / 3.0)
            kv = bulk * p.J
            ki = bulk / p.J
            c1111 = h1 * (p.I1 / 9.0 + p.I1 / 3.0 - 2.0 / 3.0 * p.B11) \
                + h2 * (p.B11 * p.B11 - 2.0 * p.I1 * p.B11 / 3.0 + p.I1 * p.I1 / 9.0) + ki
            c2222 = h1 * (p.I1 / 9.0 + p.I1 / 3.0 - 2.0 / 3.0 * p.B22) \
                + h2 * (p.B22 * p.B22 - 2.0 * p.I1 * p.B22 / 3.0 + p.I1 * p.I1 / 9.0) + ki
            c3333v = h1 * (p.I1 / 9.0 + p.I1 / 3.0 - 2.0 / 3.0 * p.B33) \
                + h2 * (p.B33 * p.B33 - 2.0 * p.I1 * p.B33 / 3.0 + p.I1 * p.I1 / 9.0) + ki
            c1122 = h1 * (p.I1 / 9.0 - (p.B11 + p.B22) / 3.0) \
                + h2 * (p.B11 * p.B22 - p.I1 / 3.0 * (p.B11 + p.B22) + p.I1 * p.I1 / 9.0) + kv
            c1133 = h1 * (p.I1 / 9.0 - (p.B11 + p.B33) / 3.0) \
                + h2 * (p.B11 * p.B33 - p.I1 / 3.0 * (p.B11 + p.B33) + p.I1 * p.I1 / 9.0) + kv
            c2233 = h1 * (p.I1 / 9.0 - (p.B22 + p.B33) / 3.0) \
                + h2 * (p.B22 * p.B33 - p.I1 / 3.0 * (p.B22 + p.B33) + p.I1 * p.I1 / 9.0) + kv
            c1112 = -h1 * p.B12 / 3.0 + h2 * (p.B11 * p.B12 - p.I1 / 3.0 * p.B12)
            c2212 = -h1 * p.B12 / 3.0 + h2 * (p.B22 * p.B12 - p.I1 / 3.0 * p.B12)
            c1233 = -h1 * p.B12 / 3.0 + h2 * (p.B33 * p.B12 - p.I1 / 3.0 * p.B12)
            c1212 = h1 * p.I1 / 6.0 + h2 * p.B12 * p.B12 - kv / 2.0 + ki / 2.0

            coup[0] = c1133; coup[1] = c2233; coup[2] = c1233
            D[0][0] = c1111; D[0][1] = c1122; D[0][2] = c1112
            D[1][0] = c1122; D[1][1] = c2222; D[1][2] = c2212
            D[2][0] = c1112; D[2][1] = c2212; D[2][2] = c1212
            for r in range(3):
                for s in range(3):
                    D[r][s] -= coup[r] * coup[s] / c3333v

            for a in range(4):
                Bm[0][2 * a] = dn1[a]; Bm[0][2 * a + 1] = 0.0
                Bm[1][2 * a] = 0.0; Bm[1][2 * a + 1] = dn2[a]
                Bm[2][2 * a] = dn2[a]; Bm[2][2 * a + 1] = dn1[a]

            svec[0] = p.s11; svec[1] = p.s22; svec[2] = p.s12
            for r in range(8):
                bs[r] = Bm[0][r] * svec[0] + Bm[1][r] * svec[1] + Bm[2][r] * svec[2]
                bv[r] = Bm[0][r] * coup[0] + Bm[1][r] * coup[1] + Bm[2][r] * coup[2]

            # material part: B^T D B
            for r in range(8):
                for s in range(8):
                    tmp = 0.0
                    for a in range(3):
                        for b in range(3):
                            tmp += Bm[a][r] * D[a][b] * Bm[b][s]
                    ke_out[e, r, s] += dv * tmp

            # geometric part
            for a in range(4):
                for b in range(4):
                    tmp = dv * (dn1[a] * (p.s11 * dn1[b] + p.s12 * dn2[b])
                                + dn2[a] * (p.s12 * dn1[b] + p.s22 * dn2[b]))
                    ke_out[e, 2 * a, 2 * b] += tmp
                    ke_out[e, 2 * a + 1, 2 * b + 1] += tmp

            # plane-stress coupling correction
            for r in range(8):
                for s in range(8):
                    ke_out[e, r, s] += dv * bs[r] * bv[s] / c3333v

    return _OK
