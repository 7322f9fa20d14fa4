# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Frank-Wolfe loop for the centered minimum-volume ellipsoid.

Mirrors ``_fw_py.fw_iterate`` operation for operation.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def fw_iterate(double[:, ::1] P, double[::1] u, double[:, ::1] Xinv,
               double[::1] g, double tol, long max_iter):
    cdef Py_ssize_t m = P.shape[0], D = P.shape[1]
    cdef Py_ssize_t i, a, b, jmax, jmin, j
    cdef double gmax, gmin, eps_plus, eps_minus, tau, tau_max, c, s, scale, uj
    cdef long it = 0
    cdef bint away
    cdef double[::1] w = np.empty(D)
    cdef double inf = float("inf")
    while True:
        jmax = 0
        gmax = g[0]
        jmin = -1
        gmin = inf
        for i in range(m):
            if g[i] > gmax:
                gmax = g[i]
                jmax = i
            if u[i] > 0 and g[i] < gmin:
                gmin = g[i]
                jmin = i
        eps_plus = gmax / D - 1.0
        eps_minus = 1.0 - gmin / D
        if (eps_plus <= tol and eps_minus <= tol) or it >= max_iter:
            return it, eps_plus, eps_minus
        uj = u[jmin]
        away = not (eps_plus >= eps_minus or uj >= 1.0)
        if away:
            j = jmin
            tau_max = uj / (1.0 - uj)
            if gmin <= 1.0:
                tau = tau_max
            else:
                tau = (1.0 - gmin / D) / (gmin - 1.0)
                if tau > tau_max:
                    tau = tau_max
            c = -tau / (1.0 + tau - tau * gmin)
            scale = 1.0 / (1.0 + tau)
        else:
            j = jmax
            tau = (gmax / D - 1.0) / (gmax - 1.0)
            c = tau / (1.0 - tau + tau * gmax)
            scale = 1.0 / (1.0 - tau)
        for a in range(D):
            s = 0.0
            for b in range(D):
                s += Xinv[a, b] * P[j, b]
            w[a] = s
        for a in range(D):
            for b in range(D):
                Xinv[a, b] = (Xinv[a, b] - c * w[a] * w[b]) * scale
        for i in range(m):
            s = 0.0
            for a in range(D):
                s += P[i, a] * w[a]
            g[i] = (g[i] - c * s * s) * scale
        if away:
            for i in range(m):
                u[i] *= 1.0 + tau
            if tau == tau_max:
                u[j] = 0.0
            else:
                u[j] -= tau
        else:
            for i in range(m):
                u[i] *= 1.0 - tau
            u[j] += tau
        it += 1
