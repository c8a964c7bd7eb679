"""Weighted sup norms ||w||_{eps,r} and their Hoelder variant."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..radial import RadialField, RadialGrid


@dataclass(frozen=True)
class WeightedNormSpec:
    r: float
    sigma: float = 0.5
    eps: float = 0.01
    strict: bool = True  # enforce 4 < r < N where N is known

    def __post_init__(self):
        if not 0 < self.sigma < 1:
            raise ValueError(f"sigma must lie in (0, 1), got {self.sigma}")
        if not 0 < self.eps < 1:
            raise ValueError(f"eps must lie in (0, 1), got {self.eps}")

    def check_dimension(self, N: int):
        if self.strict and not 4 < self.r < N:
            raise ValueError(f"weight exponent must satisfy 4 < r < N = {N}, got {self.r}")


def weight(r, exponent: float) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return (1.0 + r * r) ** (0.5 * exponent)


def weighted_sup(grid: RadialGrid, values, exponent: float) -> float:
    """sup_i (1 + r_i^2)^(exponent/2) |values_i|; ``values`` may carry leading axes."""
    v = np.abs(np.asarray(values, dtype=float))
    return float(np.max(weight(grid.nodes, exponent) * v, initial=0.0))


def holder_seminorm(grid: RadialGrid, values, exponent: float, sigma: float) -> float:
    """sup over ball centres of (1+|c|^2)^((exponent+sigma)/2) [f]_{sigma, B(c,1)}, along the radius.

    Every node pair (j, l) whose nodes fit in a common unit ball contributes its
    difference quotient, weighted by the largest admissible centre weight.
    Leading axes of ``values`` (directions, K-nodes) are maximized over.
    """
    r = grid.nodes
    f = np.asarray(values, dtype=float)
    f = f.reshape(-1, f.shape[-1])
    w = weight(r, exponent + sigma)
    best = 0.0
    for j in range(len(r) - 1):
        l_end = int(np.searchsorted(r, r[j] + 2.0, side="right"))
        if l_end <= j + 1:
            continue
        # the weight grows with r, so the best centre is the last node <= r_j + 1
        c = int(np.searchsorted(r, r[j] + 1.0, side="right")) - 1
        rl = r[j + 1 : l_end]
        ok = r[c] >= rl - 1.0
        if not np.any(ok):
            continue
        d = np.max(np.abs(f[:, j + 1 : l_end] - f[:, j : j + 1]), axis=0)
        q = d[ok] / (rl[ok] - r[j]) ** sigma
        best = max(best, float(np.max(q)) * w[c])
    return best


def weighted_norm(field, spec: WeightedNormSpec, N: int | None = None, holder: bool = False) -> float:
    """||field||_{eps, r} (and the Hoelder part if requested).

    ``field`` is a :class:`RadialField`, a ``ModeField`` (sup over its sampled
    directions) or a (grid, samples) pair whose samples carry leading axes.
    """
    if N is not None:
        spec.check_dimension(N)
    if isinstance(field, RadialField):
        grid, values = field.grid, field.values
    elif hasattr(field, "direction_samples"):
        grid, values = field.grid, field.direction_samples()
    else:
        grid, values = field
    out = weighted_sup(grid, values, spec.r)
    if holder:
        out += holder_seminorm(grid, values, spec.r, spec.sigma)
    return out
