"""Central finite differences for the gradient checks."""
import numpy as np

H = 1e-5
# entries whose true gradient is below this are compared absolutely; the FD
# round-off floor is around 1e-11 for O(1) losses
FLOOR = 1e-6


def numeric_grads(loss_fn, params, h=H):
    out = []
    for p in params:
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            i = it.multi_index
            old = p[i]
            p[i] = old + h
            up = loss_fn()
            p[i] = old - h
            down = loss_fn()
            p[i] = old
            g[i] = (up - down) / (2 * h)
        out.append(g)
    return out


def max_relative_error(analytic, numeric, floor=FLOOR):
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


def random_instances(n=50, seed=2024):
    """Small random shapes: (input dim, hidden sizes, batch)."""
    rng = np.random.default_rng(seed)
    for i in range(n):
        hidden = tuple(int(h) for h in rng.integers(2, 5, size=rng.integers(1, 3)))
        yield i, int(rng.integers(2, 5)), hidden, int(rng.integers(2, 7)), np.random.default_rng([seed, i])
