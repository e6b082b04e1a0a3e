"""Independent reference implementations used only by the tests.

These deliberately avoid the package's code paths: bit lengths come from an
integer doubling loop, least squares from the normal equations in exact
fractions or plain numpy solves, partitions from brute-force subset search.
"""

from fractions import Fraction
from itertools import combinations

import numpy as np


def bits_oracle(y):
    a = abs(Fraction(y))
    if a < 1:
        return 1
    k, p = 0, 1
    while p < a:
        p *= 2
        k += 1
    return k + 1


def bits_sum_oracle(values):
    return sum(bits_oracle(float(v)) for v in np.ravel(values))


def ols_normal_equations(X, y):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    X1 = np.column_stack([np.ones(len(X)), X])
    return np.linalg.solve(X1.T @ X1, X1.T @ np.asarray(y, dtype=float))


def ols_exact(xs, ys):
    """Simple-regression OLS in exact rational arithmetic."""
    xs = [Fraction(x) for x in xs]
    ys = [Fraction(y) for y in ys]
    n = len(xs)
    mx, my = sum(xs) / n, sum(ys) / n
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    sxx = sum((x - mx) ** 2 for x in xs)
    slope = sxy / sxx
    return my - slope * mx, slope


def brute_force_partitions(tree):
    """All subsets of clusters that are disjoint and cover every individual."""
    ids = list(tree.ids)
    out = []
    for r in range(1, len(ids) + 1):
        for combo in combinations(ids, r):
            count = np.zeros(tree.n, dtype=int)
            for cid in combo:
                count[tree[cid].members] += 1
            if np.all(count == 1):
                out.append(frozenset(combo))
    return out
