"""Spectral-radius estimates for ``A'A`` by power iteration."""

import numpy as np

SAFETY = 1.01


def power_iteration(A, n_iter=100, rtol=1e-10):
    """Estimate ``rho(A'A)``, the largest eigenvalue of ``A'A``.

    Runs at most ``n_iter`` steps of power iteration on ``A'A`` from a fixed
    start vector and stops early once the Rayleigh quotient changes by less
    than ``rtol`` relative. The estimate never exceeds the true value.
    """
    A = np.asarray(A, dtype=float)
    v = np.random.default_rng(0).standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(n_iter):
        Av = A @ v
        new = float(Av @ Av)
        u = A.T @ Av
        nu = np.linalg.norm(u)
        if nu == 0.0:
            return new
        v = u / nu
        if abs(new - est) <= rtol * new:
            return new
        est = new
    return est


def is_spherical(M, rtol=1e-12):
    """Return ``c`` when ``M`` equals ``c I`` to relative tolerance, else ``None``."""
    c = float(np.mean(np.diag(M)))
    if c > 0 and np.max(np.abs(M - c * np.eye(M.shape[0]))) <= rtol * c:
        return c
    return None


def _dominates(A, c):
    """True when ``c I - A'A`` is positive definite, tested on the smaller Gram matrix."""
    G = A @ A.T if A.shape[0] <= A.shape[1] else A.T @ A
    try:
        np.linalg.cholesky(c * np.eye(G.shape[0]) - G)
    except np.linalg.LinAlgError:
        return False
    return True


def safe_rho(A, n_iter=100, rtol=1e-10):
    """Power-iteration estimate of ``rho(A'A)`` that ``SAFETY`` is known to cover.

    The short run is used as is when ``SAFETY * rho`` dominates ``A'A``;
    otherwise (slow convergence on a small eigengap) the iteration is
    continued until it does.
    """
    A = np.asarray(A, dtype=float)
    rho = power_iteration(A, n_iter, rtol)
    budget = n_iter
    while not _dominates(A, SAFETY * rho) and budget < 10**6:
        budget *= 10
        rho = power_iteration(A, budget, 0.0)
    return rho
