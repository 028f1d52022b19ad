"""Brute-force, definition-level graph-metric oracle for tiny graphs.

Everything here is deliberately written with explicit loops, simple-path
enumeration, and textbook formulas, independent of the library implementation.
Only sensible for n <= ~6 nodes.
"""

import math
from statistics import median


def _cbrt(x):
    return x ** (1.0 / 3.0)


def _neighbours(w, i):
    return [j for j in range(len(w)) if j != i and w[i][j] > 0]


def _simple_paths(w, s, t):
    """All simple paths s -> t as lists of nodes."""
    n = len(w)
    paths = []

    def walk(node, visited, path):
        if node == t:
            paths.append(list(path))
            return
        for nxt in range(n):
            if nxt not in visited and w[node][nxt] > 0:
                visited.add(nxt)
                path.append(nxt)
                walk(nxt, visited, path)
                path.pop()
                visited.remove(nxt)

    walk(s, {s}, [s])
    return paths


def _path_dist(w, path):
    d = 0.0
    for a, b in zip(path, path[1:]):
        d = d + 1.0 / w[a][b]
    return d


def _shortest(w, s, t):
    """(distance, list of shortest paths); (inf, []) if unreachable."""
    paths = _simple_paths(w, s, t)
    if not paths:
        return math.inf, []
    dists = [_path_dist(w, p) for p in paths]
    dmin = min(dists)
    return dmin, [p for p, d in zip(paths, dists) if d == dmin]


def oracle_strength(w):
    return [sum(w[i][j] for j in range(len(w)) if j != i) for i in range(len(w))]


def oracle_degree(w):
    n = len(w)
    off = [w[i][j] for i in range(n) for j in range(n) if i != j]
    tau = median(off) if off else 0.0
    return [float(sum(1 for j in range(n) if j != i and w[i][j] > tau))
            for i in range(n)]


def oracle_clustering(w):
    n = len(w)
    wmax = max((w[i][j] for i in range(n) for j in range(n)), default=0.0)
    out = []
    for i in range(n):
        k = len(_neighbours(w, i))
        if k < 2 or wmax == 0:
            out.append(0.0)
            continue
        total = 0.0
        for j in range(n):
            for h in range(n):
                if j != h and j != i and h != i:
                    total += _cbrt(
                        (w[i][j] / wmax) * (w[i][h] / wmax) * (w[j][h] / wmax)
                    )
        out.append(total / (k * (k - 1)))
    return out


def oracle_transitivity(w):
    n = len(w)
    wmax = max((w[i][j] for i in range(n) for j in range(n)), default=0.0)
    if wmax == 0:
        return 0.0
    num, den = 0.0, 0.0
    for i in range(n):
        k = len(_neighbours(w, i))
        den += k * (k - 1)
        for j in range(n):
            for h in range(n):
                if j != h and j != i and h != i:
                    num += _cbrt(
                        (w[i][j] / wmax) * (w[i][h] / wmax) * (w[j][h] / wmax)
                    )
    return num / den if den > 0 else 0.0


def oracle_betweenness(w):
    n = len(w)
    bc = [0.0] * n
    if n < 3:
        return bc
    for s in range(n):
        for t in range(s + 1, n):
            _, shortest = _shortest(w, s, t)
            sigma = len(shortest)
            if sigma == 0:
                continue
            for i in range(n):
                if i in (s, t):
                    continue
                through = sum(1 for p in shortest if i in p)
                bc[i] += through / sigma
    scale = 2.0 / ((n - 1) * (n - 2))
    return [b * scale for b in bc]


def oracle_eigenvector(w):
    n = len(w)
    v = [1.0 / math.sqrt(n)] * n
    for _ in range(10_000):
        nxt = [sum(w[i][j] * v[j] for j in range(n)) + v[i] for i in range(n)]
        norm = math.sqrt(sum(x * x for x in nxt))
        if norm == 0:
            return v
        nxt = [x / norm for x in nxt]
        if max(abs(a - b) for a, b in zip(nxt, v)) < 1e-14:
            return nxt
        v = nxt
    return v


def oracle_char_path_length(w):
    n = len(w)
    dists = []
    disconnected = False
    for s in range(n):
        for t in range(n):
            if s == t:
                continue
            d, _ = _shortest(w, s, t)
            if math.isinf(d):
                disconnected = True
            else:
                dists.append(d)
    return (sum(dists) / len(dists) if dists else 0.0), disconnected


def oracle_global_efficiency(w):
    n = len(w)
    if n < 2:
        return 0.0
    total = 0.0
    for s in range(n):
        for t in range(n):
            if s == t:
                continue
            d, _ = _shortest(w, s, t)
            if not math.isinf(d) and d > 0:
                total += 1.0 / d
    return total / (n * (n - 1))


def oracle_local_efficiency(w):
    n = len(w)
    out = []
    for i in range(n):
        neigh = _neighbours(w, i)
        k = len(neigh)
        if k < 2:
            out.append(0.0)
            continue
        sub = [[w[a][b] for b in neigh] for a in neigh]
        total = 0.0
        for s in range(k):
            for t in range(k):
                if s == t:
                    continue
                d, _ = _shortest(sub, s, t)
                if not math.isinf(d) and d > 0:
                    total += 1.0 / d
        out.append(total / (k * (k - 1)))
    return out


def oracle_assortativity(w):
    n = len(w)
    s = oracle_strength(w)
    xs, ys = [], []
    for i in range(n):
        for j in range(i + 1, n):
            if w[i][j] > 0:
                xs += [s[i], s[j]]
                ys += [s[j], s[i]]
    if len(xs) < 4:
        return 0.0
    mx = sum(xs) / len(xs)
    my = sum(ys) / len(ys)
    cov = sum((a - mx) * (b - my) for a, b in zip(xs, ys))
    vx = sum((a - mx) ** 2 for a in xs)
    vy = sum((b - my) ** 2 for b in ys)
    denom = math.sqrt(vx * vy)
    return cov / denom if denom > 0 else 0.0


def oracle_neighbourhood_overlap(w):
    n = len(w)
    vals = []
    for i in range(n):
        for j in range(i + 1, n):
            if w[i][j] <= 0:
                continue
            ni = set(_neighbours(w, i)) - {i, j}
            nj = set(_neighbours(w, j)) - {i, j}
            union = ni | nj
            vals.append(len(ni & nj) / len(union) if union else 0.0)
    return sum(vals) / len(vals) if vals else 0.0


def oracle_matching_index(w):
    n = len(w)
    if n < 2:
        return 0.0
    vals = []
    for i in range(n):
        for j in range(i + 1, n):
            ni = set(_neighbours(w, i)) - {i, j}
            nj = set(_neighbours(w, j)) - {i, j}
            denom = len(ni) + len(nj)
            vals.append(2.0 * len(ni & nj) / denom if denom else 0.0)
    return sum(vals) / len(vals)


def oracle_all(w):
    """Dict mirroring graphs.graph_metrics output (nodal lists, global floats)."""
    cpl, _ = oracle_char_path_length(w)
    return {
        "strength": oracle_strength(w),
        "degree": oracle_degree(w),
        "clustering": oracle_clustering(w),
        "betweenness": oracle_betweenness(w),
        "eigenvector": oracle_eigenvector(w),
        "local_efficiency": oracle_local_efficiency(w),
        "char_path_length": cpl,
        "global_efficiency": oracle_global_efficiency(w),
        "transitivity": oracle_transitivity(w),
        "assortativity": oracle_assortativity(w),
        "neighbourhood_overlap": oracle_neighbourhood_overlap(w),
        "matching_index": oracle_matching_index(w),
    }
