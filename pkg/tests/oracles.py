"""Independent reference computations used by the tests.

Nothing here calls into oklab; each routine takes a different road to the
same quantity.
"""
import itertools
import math
from fractions import Fraction

import numpy as np


# ---------------------------------------------------------------- plane geometry

def gift_wrap(points):
    """Jarvis march on exact coordinates; returns hull vertices (no collinear ones)."""
    pts = sorted(set((Fraction(x), Fraction(y)) for x, y in points))
    if len(pts) < 3:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    def d2(a, b):
        return (a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2

    start = pts[0]
    hull, cur = [], start
    while True:
        hull.append(cur)
        cand = pts[0] if pts[0] != cur else pts[1]
        for p in pts:
            if p == cur:
                continue
            c = cross(cur, cand, p)
            if c < 0 or (c == 0 and d2(cur, p) > d2(cur, cand)):
                cand = p
        cur = cand
        if cur == start:
            break
    # drop collinear middles
    out = []
    n = len(hull)
    for i in range(n):
        if cross(hull[i - 1], hull[i], hull[(i + 1) % n]) != 0:
            out.append(hull[i])
    return out


def shoelace(ring):
    n = len(ring)
    s = sum(ring[i][0] * ring[(i + 1) % n][1] - ring[(i + 1) % n][0] * ring[i][1] for i in range(n))
    return abs(Fraction(s)) / 2


def _seg_dist(p, a, b):
    p, a, b = (np.array(v, dtype=float) for v in (p, a, b))
    ab = b - a
    t = 0.0 if not ab.any() else float(np.clip((p - a) @ ab / (ab @ ab), 0, 1))
    return float(np.linalg.norm(p - (a + t * ab)))


def _inside(p, ring):
    n = len(ring)
    signs = []
    for i in range(n):
        a, b = ring[i], ring[(i + 1) % n]
        signs.append((b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]))
    return all(s >= 0 for s in signs) or all(s <= 0 for s in signs)


def polygon_hausdorff(ring_a, ring_b):
    """Hausdorff distance of convex polygons, attained at vertices."""
    def one(ra, rb):
        worst = 0.0
        for p in ra:
            if _inside(p, rb):
                continue
            worst = max(worst, min(_seg_dist(p, rb[i], rb[(i + 1) % len(rb)]) for i in range(len(rb))))
        return worst
    return max(one(ring_a, ring_b), one(ring_b, ring_a))


def grid_symmetric_difference(ring_a, ring_b, n=400):
    """Area of A Δ B by midpoint counting on an n×n grid over the joint box."""
    pts = list(ring_a) + list(ring_b)
    lo = [min(float(p[i]) for p in pts) for i in (0, 1)]
    hi = [max(float(p[i]) for p in pts) for i in (0, 1)]
    xs = lo[0] + (np.arange(n) + 0.5) * (hi[0] - lo[0]) / n
    ys = lo[1] + (np.arange(n) + 0.5) * (hi[1] - lo[1]) / n
    X, Y = np.meshgrid(xs, ys)

    def mask(ring):
        m = np.ones_like(X, dtype=bool)
        r = [(float(a), float(b)) for a, b in ring]
        k = len(r)
        orient = sum(r[i][0] * r[(i + 1) % k][1] - r[(i + 1) % k][0] * r[i][1] for i in range(k))
        sgn = 1.0 if orient > 0 else -1.0
        for i in range(k):
            a, b = r[i], r[(i + 1) % k]
            m &= sgn * ((b[0] - a[0]) * (Y - a[1]) - (b[1] - a[1]) * (X - a[0])) >= 0
        return m

    cell = (hi[0] - lo[0]) * (hi[1] - lo[1]) / n ** 2
    return float(np.sum(mask(ring_a) ^ mask(ring_b)) * cell)


def simplex_points_count(m, d):
    """|mΔ_d ∩ Z^d| for the standard simplex."""
    return math.comb(m + d, d)


# ---------------------------------------------------------------- adelic oracles

def brute_small_sections_1d(d_inf, d_p, primes, radius=None):
    """Count a ∈ Q with |a|_inf <= e^{d_inf}, |a|_p <= e^{d_p} at listed p,
    and a integral at every other prime, by scanning a/D over integers."""
    D = 1
    for p, dp in zip(primes, d_p):
        k = math.floor(dp / math.log(p) + 1e-12)
        if k > 0:
            D *= p ** k
    bound = math.exp(d_inf)
    R = int(bound * D) + 2 if radius is None else radius
    count = 0
    for n in range(-R, R + 1):
        a = Fraction(n, D)
        if abs(a) > bound + 1e-12:
            continue
        ok = True
        for p, dp in zip(primes, d_p):
            if a == 0:
                break
            v = _vp(a.numerator, p) - _vp(a.denominator, p)
            if -v * math.log(p) > dp + 1e-12:
                ok = False
                break
        if ok and a.denominator != 1:
            rest = a.denominator
            for p in primes:
                while rest % p == 0:
                    rest //= p
            ok = rest == 1
        count += ok
    return count


def _vp(n, p):
    n = abs(n)
    if n == 0:
        return 10 ** 9
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def _minors(B, k):
    """All k×k minors of a batch B (s, k, n) -> (s, C(n, k)) integer array."""
    n = B.shape[2]
    cols = list(itertools.combinations(range(n), k))
    out = np.empty((B.shape[0], len(cols)), dtype=np.int64)
    for j, S in enumerate(cols):
        out[:, j] = np.rint(np.linalg.det(B[:, :, S].astype(float))).astype(np.int64)
    return out, cols


def subspace_degrees(deg_arch, deg_p, primes, B):
    """Arakelov degrees of the subspaces spanned by the rows of each B[s].

    Hermitian norm with orthogonal basis at infinity (Gram determinant by
    Cauchy–Binet over exact integer minors), diagonal ultrametric
    norms at the listed primes, standard integral structure elsewhere.
    Rank-deficient samples get -inf.
    """
    s, k, n = B.shape
    minors, cols = _minors(B, k)
    # Cauchy–Binet: det(B diag(e^{-2d}) B^T) = Σ_S minor_S^2 e^{-2 Σ_S d}
    with np.errstate(divide="ignore"):
        logs = np.log(np.abs(minors).astype(float)) * 2.0
    logs = logs - 2.0 * np.array([sum(deg_arch[i] for i in S) for S in cols])[None, :]
    top = np.max(logs, axis=1, keepdims=True)
    with np.errstate(invalid="ignore"):
        logdet = (top + np.log(np.sum(np.exp(logs - top), axis=1, keepdims=True)))[:, 0]
    total = -0.5 * logdet
    g = np.gcd.reduce(np.abs(minors), axis=1)
    rest = g.copy()
    for p, dp in zip(primes, deg_p):
        vals = np.full(minors.shape, np.inf)
        for j, S in enumerate(cols):
            v = np.array([_vp(int(x), p) if x else np.inf for x in minors[:, j]], dtype=float)
            vals[:, j] = v * math.log(p) + sum(dp[i] for i in S)
        with np.errstate(invalid="ignore"):
            total = total + vals.min(axis=1)
        for _ in range(64):
            mask = (rest % p == 0) & (rest > 0)
            if not mask.any():
                break
            rest = np.where(mask, rest // p, rest)
    total = total + np.log(np.maximum(rest, 1))
    return np.where(g > 0, total, -np.inf)


def hn_oracle(deg_arch, deg_p, primes, samples=1000, rng=None):
    """Jumping numbers as successive differences of the upper envelope of
    (dim W, deg W) over coordinate and random subspaces."""
    rng = rng or np.random.default_rng(0)
    n = len(deg_arch)
    best = {0: 0.0}
    for k in range(1, n + 1):
        S = np.array(list(itertools.combinations(range(n), k)))
        eye = np.eye(n, dtype=np.int64)
        B = eye[S]
        best[k] = float(np.max(subspace_degrees(deg_arch, deg_p, primes, B)))
    rand_max = {}
    for k in range(1, n + 1):
        B = rng.integers(-3, 4, size=(samples // n + 1, k, n))
        rand_max[k] = float(np.max(subspace_degrees(deg_arch, deg_p, primes, B)))
    hull = _upper_envelope([(k, max(best[k], rand_max.get(k, -np.inf))) for k in range(n + 1)])
    return [hull[k] - hull[k - 1] for k in range(1, n + 1)], best, rand_max


def _upper_envelope(points):
    """Values at 0..n of the concave envelope of (k, y_k)."""
    n = len(points) - 1
    vals = []
    for k in range(n + 1):
        best = -np.inf
        for (a, ya), (b, yb) in itertools.combinations(points, 2):
            if a <= k <= b and a != b:
                best = max(best, ya + (yb - ya) * (k - a) / (b - a))
        best = max(best, points[k][1])
        vals.append(best)
    return vals


def ff_coordinate_oracle(totals):
    """Function-field mode: jumping numbers from coordinate subspaces only."""
    n = len(totals)
    pts = [(0, 0.0)]
    for k in range(1, n + 1):
        pts.append((k, max(sum(totals[i] for i in S) for S in itertools.combinations(range(n), k))))
    hull = _upper_envelope(pts)
    return [hull[k] - hull[k - 1] for k in range(1, n + 1)]


# ---------------------------------------------------------------- toric oracles

def roof_integral_1d(pieces, a, b, positive=False, n=200_000):
    """Midpoint rule for ∫_a^b min_k (g_k x + c_k) (or its positive part)."""
    x = a + (np.arange(n) + 0.5) * (b - a) / n
    y = np.min(np.array([g * x + c for g, c in pieces]), axis=0)
    if positive:
        y = np.maximum(y, 0.0)
    return float(y.sum() * (b - a) / n)


def legendre_green(verts, vals, u):
    """max_j (-<v_j, u> + ϑ(v_j)) by plain loops."""
    return max(-sum(a * b for a, b in zip(v, u)) + t for v, t in zip(verts, vals))


def transform_by_lp(points, values, x):
    """max t such that x is a convex combination of points with value >= t,
    found by scanning thresholds and solving a feasibility LP for each."""
    from scipy.optimize import linprog
    pts = np.asarray(points, dtype=float)
    vals = np.asarray(values, dtype=float)
    for t in sorted(set(vals.tolist()), reverse=True):
        sel = pts[vals >= t]
        k = len(sel)
        A = np.vstack([sel.T, np.ones(k)])
        b = np.append(np.asarray(x, dtype=float), 1.0)
        res = linprog(np.zeros(k), A_eq=A, b_eq=b, bounds=[(0, None)] * k, method="highs")
        if res.status == 0:
            return t
    return float("nan")
