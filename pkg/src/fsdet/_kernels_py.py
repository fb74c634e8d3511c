"""Numpy replication kernel, used when the compiled extension is unavailable.

Moment columns per group: n, sum s, sum s^2, sum f, sum f^2, sum s*f,
sum xi, sum xi^2, sum s*xi, where ``s`` is the weighted score and ``f`` the
factor the score is compared with.  ``var_sums[k, 0]`` and ``var_sums[k, 1]``
hold per-variable sums of x and x^2 in group ``k``.
"""

import numpy as np

BLOCK_ROWS = 1 << 15


def accumulate(bit_generator, lam_xi, lam_g, psi, g_values, n_per_group,
               weights, offsets, f_xi, f_g):
    rng = np.random.Generator(bit_generator)
    lam_xi = np.asarray(lam_xi, dtype=float)
    lam_g = np.asarray(lam_g, dtype=float)
    psi = np.asarray(psi, dtype=float)
    p = lam_xi.shape[0]
    moments = np.zeros((2, 9))
    var_sums = np.zeros((2, 2, p))
    for k in range(2):
        gk = g_values[k]
        remaining = int(n_per_group[k])
        while remaining > 0:
            rows = min(remaining, BLOCK_ROWS)
            remaining -= rows
            # row-major fill: xi then the p unique factors, case by case
            z = rng.standard_normal((rows, p + 1))
            xi = z[:, 0]
            x = np.multiply.outer(xi, lam_xi) + lam_g * gk + z[:, 1:] * psi
            s = x @ weights[k] - offsets[k]
            f = f_xi * xi + f_g * gk
            moments[k] += (
                rows, s.sum(), s @ s, f.sum(), f @ f, s @ f,
                xi.sum(), xi @ xi, s @ xi,
            )
            var_sums[k, 0] += x.sum(axis=0)
            var_sums[k, 1] += np.einsum("ij,ij->j", x, x)
    return moments, var_sums
