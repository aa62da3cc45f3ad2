"""Independent first-order reference for the min-norm problem.

Projected gradient ascent on the dual of  min ||z|| s.t. Az <= b  (Nesterov
momentum with restart on objective increase).  Shares no code with the
production active-set solver."""

import numpy as np


def pg_min_norm(A, b, max_iters=2_000_000, tol=1e-11):
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    b = np.asarray(b, dtype=np.float64).ravel()
    if A.shape[0] == 0 or b.min() >= 0:
        return np.zeros(A.shape[1])
    L = float(np.linalg.eigvalsh(A @ A.T).max())
    scale = max(1.0, float(np.abs(b).max()))
    lam = np.zeros(A.shape[0])
    prev = lam.copy()
    t = 1.0

    def dual(l):
        Atl = A.T @ l
        return 0.5 * float(Atl @ Atl) + float(b @ l)

    best = dual(lam)
    for k in range(max_iters):
        mom = lam + ((t - 1.0) / (t + 2.0)) * (lam - prev)
        z = -(A.T @ mom)
        nxt = np.maximum(0.0, mom + (A @ z - b) / L)
        prev, lam = lam, nxt
        t += 1.0
        val = dual(lam)
        if val > best:
            t = 1.0
            prev = lam.copy()
        best = min(best, val)
        if k % 64 == 0:
            z = -(A.T @ lam)
            r = A @ z - b
            viol = max(0.0, float(r.max()))
            comp = float(np.abs(lam * r).max())
            if viol <= tol * scale and comp <= tol * scale * scale:
                break
    return -(A.T @ lam)


def random_feasible_system(rng):
    """A small random system guaranteed nonempty: either the origin is
    feasible or a random shifted point is."""
    m = int(rng.integers(1, 4))
    rows = int(rng.integers(1, 7))
    A = rng.standard_normal((rows, m))
    if rng.random() < 0.5:
        b = np.abs(rng.standard_normal(rows))
    else:
        z0 = rng.standard_normal(m) * 2.0
        slack = np.abs(rng.standard_normal(rows)) * (rng.random(rows) < 0.7)
        b = A @ z0 + slack
    return A, b
