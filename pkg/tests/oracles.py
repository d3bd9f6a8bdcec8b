"""Independent reference implementations used to check the library.

Deliberately naive: plain Python loops, no shared code with ``rackcast``.
"""

from __future__ import annotations

import itertools
import math


def gauss_solve(A, b):
    """Solve A x = b by Gaussian elimination with partial pivoting."""
    n = len(A)
    M = [list(map(float, row)) + [float(bi)] for row, bi in zip(A, b)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(M[r][col]))
        M[col], M[piv] = M[piv], M[col]
        if M[col][col] == 0:
            raise ZeroDivisionError("singular system")
        for r in range(col + 1, n):
            f = M[r][col] / M[col][col]
            for c in range(col, n + 1):
                M[r][c] -= f * M[col][c]
    x = [0.0] * n
    for r in range(n - 1, -1, -1):
        s = M[r][n] - sum(M[r][c] * x[c] for c in range(r + 1, n))
        x[r] = s / M[r][r]
    return x


def normal_equations(X, y, ridge=0.0):
    """Intercept-first coefficients of min ||y - b0 - X b||^2 + ridge ||b||^2."""
    rows = [[1.0, *map(float, r)] for r in X]
    p = len(rows[0])
    A = [[sum(r[i] * r[j] for r in rows) for j in range(p)] for i in range(p)]
    for i in range(1, p):
        A[i][i] += ridge
    b = [sum(r[i] * yi for r, yi in zip(rows, y)) for i in range(p)]
    return gauss_solve(A, b)


def poly2_row(x):
    """x_i, x_i^2, then x_i*x_j for i<j."""
    x = list(map(float, x))
    out = list(x) + [v * v for v in x]
    for i, j in itertools.combinations(range(len(x)), 2):
        out.append(x[i] * x[j])
    return out


def knn_brute(train_X, train_y, query, k):
    """Mean target of the k nearest rows after a full sort (index breaks ties)."""
    d = []
    for i, row in enumerate(train_X):
        d.append((sum((a - b) ** 2 for a, b in zip(row, query)), i))
    d.sort()
    return sum(train_y[i] for _, i in d[:k]) / k


def gini_counts(labels, n_classes):
    n = len(labels)
    if n == 0:
        return 0.0
    return 1.0 - sum((labels.count(c) / n) ** 2 for c in range(n_classes))


def brute_best_gini_split(X, y, n_classes, min_leaf=1):
    """Exhaustive (gain, feature, threshold) over midpoints of distinct values."""
    n = len(y)
    parent = gini_counts(list(y), n_classes)
    best = (0.0, -1, 0.0)
    for f in range(len(X[0])):
        values = sorted(set(row[f] for row in X))
        for lo, hi in zip(values, values[1:]):
            thr = lo + (hi - lo) / 2.0
            left = [y[i] for i in range(n) if X[i][f] <= thr]
            right = [y[i] for i in range(n) if X[i][f] > thr]
            if len(left) < min_leaf or len(right) < min_leaf:
                continue
            child = (len(left) * gini_counts(left, n_classes)
                     + len(right) * gini_counts(right, n_classes)) / n
            gain = parent - child
            if gain > best[0] + 1e-15:
                best = (gain, f, thr)
    return best


def brute_best_sse_split(x, r, min_leaf=1):
    """Best single threshold on one feature by explicit SSE evaluation."""
    pts = sorted(zip(x, r))
    best = (math.inf, None)
    for i in range(min_leaf, len(pts) - min_leaf + 1):
        if pts[i - 1][0] == pts[i][0]:
            continue
        left = [v for _, v in pts[:i]]
        right = [v for _, v in pts[i:]]
        ml, mr = sum(left) / len(left), sum(right) / len(right)
        sse = sum((v - ml) ** 2 for v in left) + sum((v - mr) ** 2 for v in right)
        if sse < best[0]:
            best = (sse, (pts[i - 1][0] + pts[i][0]) / 2)
    return best


def central_difference(f, weights, eps=1e-4):
    """Numerical gradient of scalar f(weights) for a dict of float arrays."""
    grads = {}
    for name, w in weights.items():
        g = w.copy()
        flat, gflat = w.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + eps
            up = f(weights)
            flat[i] = old - eps
            down = f(weights)
            flat[i] = old
            gflat[i] = (up - down) / (2 * eps)
        grads[name] = g
    return grads


def flat_line_simulation(series, alpha, level=None):
    """Hand-rolled fixed-alpha flat line: level moves only when demand > 0."""
    if level is None:
        level = next((d for d in series if d > 0), 0.0)
    out = []
    for d in series:
        out.append(level)
        if d > 0:
            level = level + alpha * (d - level)
    return out
