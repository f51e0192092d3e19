"""Independent reference computations used by the tests.

Nothing here imports the package's metric or solver code: dense matrices are
assembled entry by entry from their definitions, and the scalar recursions
were evaluated in exact rational arithmetic (see ``toy_recursions``) and
frozen below.
"""

from fractions import Fraction

import numpy as np


def dense_palm(A, r, Q):
    """``[[r A'A + Q, A'], [A, I/r]]``."""
    m, n = A.shape
    H = np.zeros((n + m, n + m))
    H[:n, :n] = r * A.T @ A + Q
    H[:n, n:] = A.T
    H[n:, :n] = A
    H[n:, n:] = np.eye(m) / r
    return H


def dense_npdhg2(A, r, Q):
    """``[[r I, A'], [A, AA'/r + Q]]``."""
    m, n = A.shape
    H = np.zeros((n + m, n + m))
    H[:n, :n] = r * np.eye(n)
    H[:n, n:] = A.T
    H[n:, :n] = A
    H[n:, n:] = A @ A.T / r + Q
    return H


def dense_block(blocks):
    """``blocks`` is a list of ``(r_i, Q_i, A_i)``."""
    m = blocks[0][2].shape[0]
    n = sum(A.shape[1] for _, _, A in blocks)
    H = np.zeros((n + m, n + m))
    o = 0
    for r, Q, A in blocks:
        k = A.shape[1]
        H[o:o + k, o:o + k] = r * A.T @ A + Q
        H[o:o + k, n:] = A.T
        H[n:, o:o + k] = A
        o += k
    H[n:, n:] = sum(1.0 / r for r, _, _ in blocks) * np.eye(m)
    return H


def dense_dual_primal(blocks):
    """``blocks`` is a list of ``(r_i, Q_i, s_i, A_i)``."""
    m = blocks[0][3].shape[0]
    n = sum(A.shape[1] for _, _, _, A in blocks)
    H = np.zeros((n + m, n + m))
    o = 0
    for r, Q, s, A in blocks:
        k = A.shape[1]
        H[o:o + k, o:o + k] = Q + s * np.eye(k)
        H[o:o + k, n:] = -A.T
        H[n:, o:o + k] = -A
        o += k
    H[n:, n:] = sum(1.0 / b[0] for b in blocks) * np.eye(m)
    return H


def toy_recursions(n=10):
    """Exact scalar-toy iterates (theta = 0, A = [1], b = 1, r = 1, zero start)."""
    F = Fraction
    out = {}
    x, lam, seq = F(0), F(0), []
    for _ in range(n):  # P-ALM, tau = 2
        xn = x + lam / 2
        lam, x = lam - (2 * xn - x - 1), xn
        seq.append((x, lam))
    out["palm"] = seq
    x, lam, seq = F(0), F(0), []
    for _ in range(n):  # B-ALM, delta = 1: G = 1 + 1 = 2
        xn = x + lam
        lam, x = lam - (2 * xn - x - 1) / 2, xn
        seq.append((x, lam))
    out["balm"] = seq
    x, lam, seq = F(0), F(0), []
    for _ in range(n):  # DP-ALM, s = 1, Q = 1.01
        ln = lam - (x - 1)
        x, lam = x + (2 * ln - lam) / (F(101, 100) + 1), ln
        seq.append((x, lam))
    out["dpalm"] = seq
    x, lam, seq = F(0), F(0), []
    for _ in range(n):  # relaxed P-ALM, gamma = 3/2
        xt = x + lam / 2
        lt = lam - (2 * xt - x - 1)
        x, lam = x + F(3, 2) * (xt - x), lam + F(3, 2) * (lt - lam)
        seq.append((x, lam))
    out["relax"] = seq
    return {k: [(float(a), float(b)) for a, b in v] for k, v in out.items()}


# frozen output of toy_recursions(10); rows are (x^k, lam^k) for k = 1..10
TOY = {
    "palm": [(0.0, 1.0), (0.5, 1.0), (1.0, 0.5), (1.25, 0.0), (1.25, -0.25), (1.125, -0.25),
             (1.0, -0.125), (0.9375, 0.0), (0.9375, 0.0625), (0.96875, 0.0625)],
    "balm": [(0.0, 0.5), (0.5, 0.5), (1.0, 0.25), (1.25, 0.0), (1.25, -0.125), (1.125, -0.125),
             (1.0, -0.0625), (0.9375, 0.0), (0.9375, 0.03125), (0.96875, 0.03125)],
    "dpalm": [(0.9950248756218906, 1.0), (1.4974876859483677, 1.0049751243781095),
              (1.5024626871828821, 0.5074874384297419), (1.2549811270157067, 0.005024751246859685),
              (1.0037684390631925, -0.2499563757688471), (0.8756623425979029, -0.2537248148320395),
              (0.8731501535293231, -0.12938715742994242),
              (0.9349971861220651, -0.0025373109592655534),
              (0.9984142591552015, 0.06246550291866936), (1.0310694753782197, 0.06405124376346782)],
    "relax": [(0.0, 1.5), (1.125, 0.75), (1.6875, -0.5625), (1.265625, -0.75),
              (0.703125, -0.0234375), (0.685546875, 0.45703125), (1.0283203125, 0.2431640625),
              (1.210693359375, -0.1640625), (1.087646484375, -0.2340087890625),
              (0.912139892578125, -0.01446533203125)],
}

# two-block toy: A_1 = A_2 = [1], b = 2, r_i = 1, tau_i = 2, dual step 1/2;
# rows are (x_1, x_2, lam) for k = 1..3
PDALM_TWO_BLOCK = [(0.0, 0.0, 1.0), (0.5, 0.5, 1.0), (1.0, 1.0, 0.5)]


def grid_ball_max(f, eta, n_points=10**6):
    """Max of ``f`` over ``n_points`` evenly spaced points of the circle of radius ``eta``.

    ``f`` takes an ``(k, 2)`` array and returns ``k`` values.
    """
    th = np.linspace(0.0, 2.0 * np.pi, n_points, endpoint=False)
    pts = eta * np.column_stack([np.cos(th), np.sin(th)])
    return float(np.max(f(pts)))


def simplex_grid_projection(c, n_points=200001):
    """Brute-force projection of a 2-vector onto the 1-simplex by grid search."""
    t = np.linspace(0.0, 1.0, n_points)
    d = (t - c[0]) ** 2 + (1.0 - t - c[1]) ** 2
    i = int(np.argmin(d))
    return np.array([t[i], 1.0 - t[i]])
