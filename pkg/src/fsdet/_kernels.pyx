# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled replication kernel.

Draws one replication of the two-group factor model directly from a numpy
BitGenerator and accumulates per-group moment sums without materialising the
data.  Draw order and moment layout match ``fsdet._kernels_py.accumulate``.
"""
import numpy as np

from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport random_standard_normal


def accumulate(bit_generator, const double[::1] lam_xi, const double[::1] lam_g,
               const double[::1] psi, const double[::1] g_values, n_per_group,
               const double[:, ::1] weights, const double[::1] offsets,
               double f_xi, double f_g):
    cdef Py_ssize_t p = lam_xi.shape[0]
    cdef Py_ssize_t k, j, i, n_k
    cdef double xi, e, x, s, f, gk
    cdef bitgen_t *rng
    capsule = bit_generator.capsule
    if not PyCapsule_IsValid(capsule, "BitGenerator"):
        raise ValueError("expected a numpy BitGenerator")
    rng = <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")

    moments_arr = np.zeros((2, 9))
    var_arr = np.zeros((2, 2, p))
    cdef double[:, ::1] m = moments_arr
    cdef double[:, :, ::1] vs = var_arr
    cdef Py_ssize_t[2] sizes
    sizes[0] = n_per_group[0]
    sizes[1] = n_per_group[1]

    with bit_generator.lock, nogil:
        for k in range(2):
            gk = g_values[k]
            n_k = sizes[k]
            for j in range(n_k):
                xi = random_standard_normal(rng)
                s = -offsets[k]
                for i in range(p):
                    e = random_standard_normal(rng)
                    x = lam_xi[i] * xi + lam_g[i] * gk + psi[i] * e
                    s = s + weights[k, i] * x
                    vs[k, 0, i] += x
                    vs[k, 1, i] += x * x
                f = f_xi * xi + f_g * gk
                m[k, 0] += 1.0
                m[k, 1] += s
                m[k, 2] += s * s
                m[k, 3] += f
                m[k, 4] += f * f
                m[k, 5] += s * f
                m[k, 6] += xi
                m[k, 7] += xi * xi
                m[k, 8] += s * xi
    return moments_arr, var_arr
