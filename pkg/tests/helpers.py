"""Shared oracles and builders used across the test modules.

Everything here recomputes results by a route independent of the production
code: exhaustive path search instead of dynamic programming, a generalized
eigenproblem instead of whitening plus SVD, finite differences instead of
backpropagation.
"""

import numpy as np
import scipy.linalg
import torch


def enumerate_dtw(delta):
    """Brute-force alignment: walk every monotone path, keep the cheapest.

    Returns (min_cost, optimal_paths) where each path is a list of (i, j)
    pairs from (0, 0) to (n-1, m-1); paths tied for the minimum within 1e-9
    are all returned.
    """
    n, m = delta.shape
    best = [np.inf]
    optimal = []

    def walk(i, j, cost, path):
        cost = cost + delta[i, j]
        if cost > best[0] + 1e-9:
            return  # cannot improve: costs are nonnegative
        path.append((i, j))
        if i == n - 1 and j == m - 1:
            if cost < best[0] - 1e-9:
                best[0] = cost
                optimal.clear()
                optimal.append(list(path))
            elif cost <= best[0] + 1e-9:
                best[0] = min(best[0], cost)
                optimal.append(list(path))
            path.pop()
            return
        if i + 1 < n and j + 1 < m:
            walk(i + 1, j + 1, cost, path)
        if i + 1 < n:
            walk(i + 1, j, cost, path)
        if j + 1 < m:
            walk(i, j + 1, cost, path)
        path.pop()

    walk(0, 0, 0.0, [])
    return best[0], optimal


def cca_eigen_oracle(x, y, dims, ridge=1e-6):
    """Canonical directions via the generalized eigenproblem.

    Centers the data, applies the same relative ridge as the production
    solver, and solves eig(Sxx^-1 Sxy Syy^-1 Syx) for the x-side directions
    and the matching y-side directions.  Returns (a, b, rho) with columns
    ordered by decreasing correlation.
    """
    x = x - x.mean(axis=0)
    y = y - y.mean(axis=0)
    n = x.shape[0]
    sxx = x.T @ x / n
    syy = y.T @ y / n
    sxy = x.T @ y / n
    sxx = sxx + ridge * (np.trace(sxx) / sxx.shape[0]) * np.eye(sxx.shape[0])
    syy = syy + ridge * (np.trace(syy) / syy.shape[0]) * np.eye(syy.shape[0])
    m = np.linalg.solve(sxx, sxy) @ np.linalg.solve(syy, sxy.T)
    w, v = scipy.linalg.eig(m)
    w = np.real(w)
    v = np.real(v)
    order = np.argsort(w)[::-1][:dims]
    a = v[:, order]
    rho = np.sqrt(np.clip(w[order], 0.0, None))
    b = np.linalg.solve(syy, sxy.T) @ a
    return a, b, rho


def empirical_correlations(x, y, a, b):
    """Pearson correlation of each projected dimension pair."""
    u = (x - x.mean(axis=0)) @ a
    v = (y - y.mean(axis=0)) @ b
    out = []
    for k in range(u.shape[1]):
        c = np.corrcoef(u[:, k], v[:, k])[0, 1]
        out.append(abs(c))
    return np.array(out)


def finite_difference_gradients(loss_fn, params, indices, eps=1e-5):
    """Central-difference gradient of loss_fn at selected parameter entries.

    params: list of tensors the loss depends on; indices: list of
    (param_index, flat_entry) pairs.  Returns the matching analytic and
    numeric gradients as two arrays.
    """
    with torch.no_grad():
        base = [p.detach().clone() for p in params]
    for p in params:
        if p.grad is not None:
            p.grad = None
    loss = loss_fn()
    loss.backward()
    analytic = []
    numeric = []
    for pi, flat in indices:
        analytic.append(float(params[pi].grad.reshape(-1)[flat]))
        with torch.no_grad():
            params[pi].reshape(-1)[flat] = base[pi].reshape(-1)[flat] + eps
            up = float(loss_fn())
            params[pi].reshape(-1)[flat] = base[pi].reshape(-1)[flat] - eps
            down = float(loss_fn())
            params[pi].reshape(-1)[flat] = base[pi].reshape(-1)[flat]
        numeric.append((up - down) / (2 * eps))
    return np.array(analytic), np.array(numeric)


def pick_indices(params, per_tensor, rng):
    """A spread of flat entry indices across every parameter tensor."""
    out = []
    for pi, p in enumerate(params):
        n = p.numel()
        take = min(per_tensor, n)
        for flat in rng.choice(n, size=take, replace=False):
            out.append((pi, int(flat)))
    return out


def relative_error(analytic, numeric):
    scale = np.maximum(np.abs(analytic) + np.abs(numeric), 1e-8)
    return np.abs(analytic - numeric) / scale
