# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled pointwise integrator for the BZ reaction terms.

Each grid point runs an independent adaptive 3-stage Radau IIA integration
with simplified Newton on its 9x9 stage system (dense LU, partial pivoting)
and the stiffly damped embedded error estimate.  Mirrors the batched numpy
path in ``stiffstep.PointwiseRadau`` specialized to the 3-species kinetics.
"""

from libc.math cimport fabs, sqrt

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef double SQ6 = sqrt(6.0)
cdef double[3][3] RA
cdef double[3] EW
cdef double GAMMA = 3.0 + 3.0 ** (2.0 / 3.0) - 3.0 ** (1.0 / 3.0)
cdef double EPSM = 2.220446049250313e-16

RA[0][0] = (88.0 - 7.0 * SQ6) / 360.0
RA[0][1] = (296.0 - 169.0 * SQ6) / 1800.0
RA[0][2] = (-2.0 + 3.0 * SQ6) / 225.0
RA[1][0] = (296.0 + 169.0 * SQ6) / 1800.0
RA[1][1] = (88.0 + 7.0 * SQ6) / 360.0
RA[1][2] = (-2.0 - 3.0 * SQ6) / 225.0
RA[2][0] = (16.0 - SQ6) / 36.0
RA[2][1] = (16.0 + SQ6) / 36.0
RA[2][2] = 1.0 / 9.0

EW[0] = (-13.0 - 7.0 * SQ6) / 3.0
EW[1] = (-13.0 + 7.0 * SQ6) / 3.0
EW[2] = -1.0 / 3.0


cdef inline void bz_f(double a, double b, double c,
                      double eps, double mu, double fpar, double q,
                      double* out) nogil:
    out[0] = (-q * a - a * b + fpar * c) / mu
    out[1] = (q * a - a * b + b * (1.0 - b)) / eps
    out[2] = b - c


cdef inline void bz_jac(double a, double b,
                        double eps, double mu, double fpar, double q,
                        double* J) nogil:
    # Row-major 3x3.
    J[0] = (-q - b) / mu
    J[1] = -a / mu
    J[2] = fpar / mu
    J[3] = (q - b) / eps
    J[4] = (-a + 1.0 - 2.0 * b) / eps
    J[5] = 0.0
    J[6] = 0.0
    J[7] = 1.0
    J[8] = -1.0


cdef inline int lu_factor(double* M, int n, int* piv) nogil:
    """In-place LU with partial pivoting; returns nonzero on singularity."""
    cdef int i, j, k, p
    cdef double mx, v, tmp
    for k in range(n):
        p = k
        mx = fabs(M[k * n + k])
        for i in range(k + 1, n):
            v = fabs(M[i * n + k])
            if v > mx:
                mx = v
                p = i
        if mx == 0.0:
            return 1
        piv[k] = p
        if p != k:
            for j in range(n):
                tmp = M[k * n + j]
                M[k * n + j] = M[p * n + j]
                M[p * n + j] = tmp
        for i in range(k + 1, n):
            M[i * n + k] /= M[k * n + k]
            v = M[i * n + k]
            for j in range(k + 1, n):
                M[i * n + j] -= v * M[k * n + j]
    return 0


cdef inline void lu_solve(double* M, int n, int* piv, double* b) nogil:
    cdef int i, j
    cdef double tmp, acc
    for i in range(n):
        if piv[i] != i:
            tmp = b[i]
            b[i] = b[piv[i]]
            b[piv[i]] = tmp
    for i in range(n):
        acc = b[i]
        for j in range(i):
            acc -= M[i * n + j] * b[j]
        b[i] = acc
    for i in range(n - 1, -1, -1):
        acc = b[i]
        for j in range(i + 1, n):
            acc -= M[i * n + j] * b[j]
        b[i] = acc / M[i * n + i]


cdef int advance_point(double* u, double t0, double dt,
                       double eps, double mu, double fpar, double q,
                       double rtol, double atol, double newton_tol,
                       int newton_max, long max_steps) nogil:
    """Advance one point over span dt.  0 = ok, 1 = underflow, -1 = Newton stall."""
    cdef double t = 0.0
    cdef double h = dt
    cdef double h_floor = 1e3 * EPSM * max(fabs(t0), max(fabs(t0 + dt), dt))
    cdef long nsteps = 0
    cdef bint rej_prev = False
    cdef double J[9]
    cdef double M[81]
    cdef double filt[9]
    cdef int pivM[9]
    cdef int pivF[3]
    cdef double Z[9]
    cdef double F[9]
    cdef double R[9]
    cdef double f0[3]
    cdef double est[3]
    cdef double ze[3]
    cdef double ytmp[3]
    cdef double scale[3]
    cdef double y1[3]
    cdef int i, j, li, lj, it
    cdef double dz, dz_old, rate, err, acc
    cdef bint newton_ok, have_old

    while t < dt * (1.0 - 4.0 * EPSM):
        if h > dt - t:
            h = dt - t
        nsteps += 1
        if nsteps > max_steps:
            return 1
        bz_jac(u[0], u[1], eps, mu, fpar, q, J)
        bz_f(u[0], u[1], u[2], eps, mu, fpar, q, f0)
        for i in range(3):
            scale[i] = atol + rtol * fabs(u[i])

        # M = I - h (A kron J)
        for li in range(3):
            for lj in range(3):
                for i in range(3):
                    for j in range(3):
                        M[(li * 3 + i) * 9 + (lj * 3 + j)] = -h * RA[li][lj] * J[i * 3 + j]
        for i in range(9):
            M[i * 9 + i] += 1.0
        if lu_factor(M, 9, pivM):
            h *= 0.5
            if h < h_floor:
                return 1
            continue

        for i in range(9):
            Z[i] = 0.0
        newton_ok = False
        have_old = False
        dz_old = 0.0
        for it in range(newton_max):
            for li in range(3):
                bz_f(u[0] + Z[li * 3], u[1] + Z[li * 3 + 1], u[2] + Z[li * 3 + 2],
                     eps, mu, fpar, q, &F[li * 3])
            for li in range(3):
                for i in range(3):
                    acc = 0.0
                    for lj in range(3):
                        acc += RA[li][lj] * F[lj * 3 + i]
                    R[li * 3 + i] = h * acc - Z[li * 3 + i]
            lu_solve(M, 9, pivM, R)
            dz = 0.0
            for li in range(3):
                for i in range(3):
                    Z[li * 3 + i] += R[li * 3 + i]
                    acc = R[li * 3 + i] / scale[i]
                    dz += acc * acc
            dz = sqrt(dz / 9.0)
            if dz <= newton_tol:
                newton_ok = True
                break
            if have_old and dz_old > 0.0:
                rate = dz / dz_old
                if rate >= 1.0:
                    break
                if rate / (1.0 - rate) * dz <= newton_tol:
                    newton_ok = True
                    break
            dz_old = dz
            have_old = True

        if not newton_ok:
            if h <= 2.0 * h_floor:
                return -1
            h *= 0.5
            rej_prev = True
            continue

        for i in range(3):
            y1[i] = u[i] + Z[6 + i]
            ze[i] = (EW[0] * Z[i] + EW[1] * Z[3 + i] + EW[2] * Z[6 + i]) / h

        # filt = gamma/h I - J
        for i in range(9):
            filt[i] = -J[i]
        for i in range(3):
            filt[i * 3 + i] += GAMMA / h
        if lu_factor(filt, 3, pivF):
            h *= 0.5
            if h < h_floor:
                return 1
            continue
        for i in range(3):
            est[i] = f0[i] + ze[i]
        lu_solve(filt, 3, pivF, est)
        err = 0.0
        for i in range(3):
            acc = atol + rtol * max(fabs(u[i]), fabs(y1[i]))
            acc = est[i] / acc
            err += acc * acc
        err = sqrt(err / 3.0)

        if rej_prev and err > 1.0:
            for i in range(3):
                ytmp[i] = u[i] + est[i]
            bz_f(ytmp[0], ytmp[1], ytmp[2], eps, mu, fpar, q, est)
            for i in range(3):
                est[i] += ze[i]
            lu_solve(filt, 3, pivF, est)
            err = 0.0
            for i in range(3):
                acc = atol + rtol * max(fabs(u[i]), fabs(y1[i]))
                acc = est[i] / acc
                err += acc * acc
            err = sqrt(err / 3.0)

        if err <= 1.0:
            t += h
            for i in range(3):
                u[i] = y1[i]
            rej_prev = False
            if err <= 1.0 / 16.0:
                h *= 2.0
        else:
            h *= 0.5
            rej_prev = True
            if h < h_floor:
                return 1
    return 0


def bz_advance(double[:, ::1] U, double t0, double dt,
               double eps, double mu, double fpar, double q,
               double rtol, double atol, double newton_tol,
               int newton_max, long max_steps):
    """Advance all points of ``U`` (shape (P, 3), modified in place).

    Returns 0 on success, ``p + 1`` on step underflow at point ``p`` and
    ``-(p + 1)`` on a stalled stage solve at point ``p``.
    """
    cdef Py_ssize_t P = U.shape[0]
    cdef Py_ssize_t p
    cdef int status
    if U.shape[1] != 3:
        raise ValueError("kernel expects 3 species per point")
    with nogil:
        for p in range(P):
            status = advance_point(&U[p, 0], t0, dt, eps, mu, fpar, q,
                                   rtol, atol, newton_tol, newton_max, max_steps)
            if status == 1:
                with gil:
                    return p + 1
            if status == -1:
                with gil:
                    return -(p + 1)
    return 0
