"""Compiled inner loop of the latent position sampler."""

import math

from numba import njit


@njit(cache=True)
def _softplus(x):
    if x > 0.0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


@njit(cache=True)
def position_sweep(adj, offset, positions, steps, log_u, prior_var):
    """
    One Metropolis pass over the nodes, in node order, updating `positions` in place.

    offset[i, j] holds alpha + beta'x_ij; a node's proposal is positions[i] + steps[i],
    accepted when log_u[i] is below the log posterior ratio. Only dyads touching the
    moved node enter the ratio. Returns the number of accepted moves.
    """
    n, d = positions.shape
    accepted = 0
    for i in range(n):
        delta = 0.0
        for j in range(n):
            if j == i:
                continue
            old = 0.0
            new = 0.0
            for k in range(d):
                a = positions[i, k] - positions[j, k]
                b = a + steps[i, k]
                old += a * a
                new += b * b
            old = math.sqrt(old)
            new = math.sqrt(new)

            eta_old = offset[i, j] - old
            eta_new = offset[i, j] - new
            delta += adj[i, j] * (eta_new - eta_old) - (_softplus(eta_new) - _softplus(eta_old))

            eta_old = offset[j, i] - old
            eta_new = offset[j, i] - new
            delta += adj[j, i] * (eta_new - eta_old) - (_softplus(eta_new) - _softplus(eta_old))

        prior = 0.0
        for k in range(d):
            moved = positions[i, k] + steps[i, k]
            prior += moved * moved - positions[i, k] * positions[i, k]
        delta -= prior / (2.0 * prior_var)

        if log_u[i] < delta:
            for k in range(d):
                positions[i, k] += steps[i, k]
            accepted += 1
    return accepted
