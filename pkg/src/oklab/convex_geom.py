"""Exact rational convex geometry for polytopes in R^d, d <= 4.

Bodies carry both a vertex list and a half-space description, all in
``fractions.Fraction``.  Hulls are computed on integer-scaled coordinates;
for d >= 3 qhull is only used to propose candidates, and every facet it
suggests is rebuilt and certified in exact arithmetic.
"""
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from itertools import combinations
from math import factorial, gcd, lcm, sqrt

import numpy as np

HAUSDORFF_TOL = 1e-9


class DimensionMismatch(ValueError):
    pass


class DegenerateBodyError(ValueError):
    """Raised when an operation needs a full-dimensional body."""


def point(coords):
    return tuple(Fraction(c) for c in coords)


@dataclass(frozen=True)
class ConvexBody:
    """A polytope given by irredundant vertices and its half-spaces.

    ``facets`` holds pairs ``(normal, offset)`` meaning ``normal . x <= offset``;
    ``equations`` holds ``(normal, offset)`` with ``normal . x == offset`` and is
    non-empty exactly when the body is lower dimensional.
    """
    dim: int
    vertices: tuple
    facets: tuple = ()
    equations: tuple = ()

    @property
    def is_empty(self):
        return len(self.vertices) == 0

    @property
    def affine_dim(self):
        if self.is_empty:
            return -1
        return self.dim - len(self.equations)

    @property
    def is_full(self):
        return not self.is_empty and not self.equations

    def __contains__(self, p):
        return contains(self, p)

    def __repr__(self):
        vs = ", ".join("(" + ", ".join(str(c) for c in v) + ")" for v in self.vertices)
        return f"ConvexBody(dim={self.dim}, vertices=[{vs}])"


def empty_body(d):
    return ConvexBody(d, ())


# ---------------------------------------------------------------- linear algebra

def _dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def _sub(a, b):
    return tuple(x - y for x, y in zip(a, b))


def _echelon(rows):
    """Reduced row echelon form of ``rows`` (exact); returns (rows, pivots)."""
    m = [list(r) for r in rows]
    pivots = []
    r = 0
    ncols = len(m[0]) if m else 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = Fraction(1) / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def _rank(vectors):
    if not vectors:
        return 0
    return len(_echelon(vectors)[1])


def _nullspace(rows, n):
    """Basis of {x : rows . x = 0} in Q^n, as primitive integer vectors."""
    if not rows:
        return [tuple(1 if i == j else 0 for i in range(n)) for j in range(n)]
    ech, piv = _echelon(rows)
    free = [c for c in range(n) if c not in piv]
    basis = []
    for f in free:
        v = [Fraction(0)] * n
        v[f] = Fraction(1)
        for row, p in zip(ech, piv):
            v[p] = -row[f]
        basis.append(_primitive(v))
    return basis


def _primitive(v):
    den = reduce(lcm, (Fraction(x).denominator for x in v), 1)
    ints = [int(Fraction(x) * den) for x in v]
    g = reduce(gcd, (abs(x) for x in ints), 0) or 1
    return tuple(x // g for x in ints)


def _det(rows):
    m = [list(map(Fraction, r)) for r in rows]
    n = len(m)
    det = Fraction(1)
    for c in range(n):
        piv = next((i for i in range(c, n) if m[i][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            det = -det
        det *= m[c][c]
        for i in range(c + 1, n):
            if m[i][c] != 0:
                f = m[i][c] / m[c][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[c])]
    return det


def _solve(a, b):
    """Solve the square system a x = b exactly; None if singular."""
    n = len(a)
    aug = [list(map(Fraction, row)) + [Fraction(bi)] for row, bi in zip(a, b)]
    ech, piv = _echelon(aug)
    if piv != list(range(n)):
        return None
    return tuple(row[n] for row in ech)


def _int_det(rows):
    # Bareiss fraction-free elimination on integer matrices
    m = [list(r) for r in rows]
    n = len(m)
    sign, prev = 1, 1
    for k in range(n - 1):
        if m[k][k] == 0:
            sw = next((i for i in range(k + 1, n) if m[i][k] != 0), None)
            if sw is None:
                return 0
            m[k], m[sw] = m[sw], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


# ---------------------------------------------------------------- hull

def _check_points(points):
    pts = [point(p) for p in points]
    if not pts:
        raise ValueError("hull of an empty point list")
    d = len(pts[0])
    if d < 1:
        raise ValueError("points must have dimension >= 1")
    if any(len(p) != d for p in pts):
        raise DimensionMismatch("points of different dimensions")
    return pts, d


def hull(points):
    """Convex hull of a nonempty list of rational points."""
    pts, d = _check_points(points)
    pts = list(dict.fromkeys(pts))
    scale = reduce(lcm, (c.denominator for p in pts for c in p), 1)
    ipts = [tuple(c.numerator * (scale // c.denominator) for c in p) for p in pts]
    vidx, facets, eqs = _int_hull(ipts, d)
    verts = tuple(sorted(pts[i] for i in vidx))
    facets = tuple(sorted(set((n, Fraction(b, scale)) for n, b in facets)))
    eqs = tuple(sorted(set((n, Fraction(b, scale)) for n, b in eqs)))
    return ConvexBody(d, verts, facets, eqs)


def _int_hull(pts, d):
    """Hull of distinct integer points.

    Returns (vertex indices, facets, equations) with integer normals and
    integer offsets.
    """
    p0 = pts[0]
    basis = []
    for p in pts[1:]:
        diff = _sub(p, p0)
        if any(diff):
            cand = basis + [diff]
            if _rank(cand) == len(cand):
                basis = cand
                if len(basis) == d:
                    break
    k = len(basis)
    if k == d:
        return _full_hull(pts, d)
    normals = _nullspace(basis, d) if basis else [
        tuple(1 if i == j else 0 for i in range(d)) for j in range(d)]
    eqs = [(n, _dot(n, p0)) for n in normals]
    if k == 0:
        return [0], [], eqs
    _, piv = _echelon(basis)
    proj = [tuple(p[c] for c in piv) for p in pts]
    vidx, sub_facets, _ = _full_hull(proj, k)
    facets = []
    for n, b in sub_facets:
        full = [0] * d
        for c, x in zip(piv, n):
            full[c] = x
        facets.append((tuple(full), b))
    return vidx, facets, eqs


def _full_hull(pts, d):
    if d == 1:
        xs = [p[0] for p in pts]
        lo = min(range(len(xs)), key=xs.__getitem__)
        hi = max(range(len(xs)), key=xs.__getitem__)
        return [lo, hi], [((-1,), -xs[lo]), ((1,), xs[hi])], []
    if d == 2:
        return _hull2(pts)
    return _hull_nd(pts, d)


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _hull2(pts):
    order = sorted(range(len(pts)), key=pts.__getitem__)
    lower, upper = [], []
    for i in order:
        while len(lower) > 1 and _cross(pts[lower[-2]], pts[lower[-1]], pts[i]) <= 0:
            lower.pop()
        lower.append(i)
    for i in reversed(order):
        while len(upper) > 1 and _cross(pts[upper[-2]], pts[upper[-1]], pts[i]) <= 0:
            upper.pop()
        upper.append(i)
    ring = lower[:-1] + upper[:-1]
    facets = []
    for a, b in zip(ring, ring[1:] + ring[:1]):
        pa, pb = pts[a], pts[b]
        n = _primitive((pb[1] - pa[1], pa[0] - pb[0]))
        facets.append((n, _dot(n, pa)))
    return ring, facets, []


def _hyperplane(rows, d):
    """Integer normal of the hyperplane through d affinely independent points."""
    diffs = [_sub(r, rows[0]) for r in rows[1:]]
    n = []
    for j in range(d):
        minor = [[row[c] for c in range(d) if c != j] for row in diffs]
        n.append((-1) ** j * _int_det(minor))
    if not any(n):
        return None
    g = reduce(gcd, (abs(x) for x in n))
    n = tuple(x // g for x in n)
    return n, _dot(n, rows[0])


def _facets_from_simplices(pts, simplices, d, inner):
    facets = set()
    for s in simplices:
        hp = _hyperplane([pts[i] for i in s], d)
        if hp is None:
            return None
        n, b = hp
        # inner = (sum of candidates, count): keep the centroid on the inside
        if _dot(n, inner[0]) > b * inner[1]:
            n, b = tuple(-x for x in n), -b
        facets.add((n, b))
    return sorted(facets)


def _brute_facets(pts, cand, d):
    facets = set()
    for s in combinations(cand, d):
        hp = _hyperplane([pts[i] for i in s], d)
        if hp is None:
            continue
        n, b = hp
        vals = [_dot(n, pts[i]) for i in cand]
        if all(v <= b for v in vals):
            facets.add((n, b))
        elif all(v >= b for v in vals):
            facets.add((tuple(-x for x in n), -b))
    return sorted(facets)


def _hull_nd(pts, d):
    from scipy.spatial import ConvexHull, QhullError

    arr = np.array(pts, dtype=float)
    shift = arr.mean(axis=0)
    span = np.abs(arr - shift).max() or 1.0
    cand, simplices = None, None
    try:
        qh = ConvexHull((arr - shift) / span)
        cand = sorted(set(int(i) for i in qh.vertices))
        simplices = [tuple(int(i) for i in s) for s in qh.simplices]
    except QhullError:
        cand = list(range(len(pts)))
    # exact interior point: centroid of the candidates, kept as (sum, count)
    inner = (tuple(sum(pts[i][c] for i in cand) for c in range(d)), len(cand))
    facets = None
    if simplices is not None:
        facets = _facets_from_simplices(pts, simplices, d, inner)
    if facets is None:
        facets = _brute_facets(pts, cand, d)
    while True:
        bad = [i for i, p in enumerate(pts)
               if any(_dot(n, p) > b for n, b in facets)]
        if not bad:
            break
        cand = sorted(set(cand) | set(bad))
        facets = _brute_facets(pts, cand, d)
    vidx = []
    for i in cand:
        tight = [n for n, b in facets if _dot(n, pts[i]) == b]
        if len(tight) >= d and _rank(tight) == d:
            vidx.append(i)
    return vidx, facets, []


# ---------------------------------------------------------------- membership

def contains(body, p, interior_only=False):
    """H-representation membership test; ``interior_only`` asks for λ ∈ B°."""
    p = point(p)
    if len(p) != body.dim:
        raise DimensionMismatch("point and body dimensions differ")
    if body.is_empty:
        return False
    if interior_only:
        if body.equations:
            return False
        return all(_dot(n, p) < b for n, b in body.facets)
    if any(_dot(n, p) != b for n, b in body.equations):
        return False
    return all(_dot(n, p) <= b for n, b in body.facets)


def require_full(body):
    if not body.is_full:
        raise DegenerateBodyError(
            f"body has affine dimension {body.affine_dim} < {body.dim}")


def facet_arrays(body):
    """Float arrays (A, b) with A x <= b for vectorised membership sweeps."""
    a = np.array([[float(x) for x in n] for n, _ in body.facets], dtype=float).reshape(-1, body.dim)
    b = np.array([float(o) for _, o in body.facets], dtype=float)
    return a, b


# ---------------------------------------------------------------- faces, volume

def _incidences(body):
    verts = body.vertices
    return [frozenset(i for i, v in enumerate(verts) if _dot(n, v) == b)
            for n, b in body.facets]


def _affine_dim(verts, idx):
    idx = sorted(idx)
    base = verts[idx[0]]
    return _rank([_sub(verts[i], base) for i in idx[1:]])


def _triangulate(body):
    """Simplices (as vertex index lists) covering the body, anchored recursively."""
    verts = body.vertices
    inc = _incidences(body)
    cache = {}

    def adim(s):
        if s not in cache:
            cache[s] = _affine_dim(verts, s)
        return cache[s]

    def tri(face, k):
        if k == 0:
            return [[next(iter(face))]]
        anchor = min(face)
        subs = set()
        for f in inc:
            s = face & f
            if s != face and len(s) >= k and adim(s) == k - 1:
                subs.add(s)
        out = []
        for s in sorted(subs, key=sorted):
            if anchor in s:
                continue
            for simp in tri(s, k - 1):
                out.append([anchor] + simp)
        return out

    return tri(frozenset(range(len(verts))), body.dim)


def polygon_order(verts):
    """Counter-clockwise cyclic order of the vertices of a convex polygon."""
    idx, _, _ = _hull2(list(verts))
    return [verts[i] for i in idx]


def volume(body):
    """Exact Lebesgue measure; 0 for empty and lower-dimensional bodies."""
    if not body.is_full:
        return Fraction(0)
    d = body.dim
    if d == 1:
        return body.vertices[-1][0] - body.vertices[0][0]
    if d == 2:
        ring = polygon_order(list(body.vertices))
        s = sum(a[0] * b[1] - a[1] * b[0] for a, b in zip(ring, ring[1:] + ring[:1]))
        return abs(s) / 2
    verts = body.vertices
    total = Fraction(0)
    for simp in _triangulate(body):
        v0 = verts[simp[0]]
        total += abs(_det([_sub(verts[i], v0) for i in simp[1:]]))
    return total / factorial(d)


def simplices(body):
    """Triangulation of a full-dimensional body as tuples of vertices."""
    require_full(body)
    if body.dim == 1:
        return [tuple(body.vertices)]
    if body.dim == 2:
        ring = polygon_order(list(body.vertices))
        return [(ring[0], ring[i], ring[i + 1]) for i in range(1, len(ring) - 1)]
    verts = body.vertices
    return [tuple(verts[i] for i in s) for s in _triangulate(body)]


# ---------------------------------------------------------------- constructions

def _same_dim(a, b):
    if a.dim != b.dim:
        raise DimensionMismatch(f"dimensions {a.dim} and {b.dim} differ")


def minkowski_sum(a, b):
    _same_dim(a, b)
    if a.is_empty or b.is_empty:
        return empty_body(a.dim)
    return hull([tuple(x + y for x, y in zip(u, v)) for u in a.vertices for v in b.vertices])


def scale(body, alpha):
    alpha = Fraction(alpha)
    if alpha <= 0:
        raise ValueError("scale factor must be positive")
    if body.is_empty:
        return body
    return ConvexBody(
        body.dim,
        tuple(tuple(alpha * c for c in v) for v in body.vertices),
        tuple((n, alpha * b) for n, b in body.facets),
        tuple((n, alpha * b) for n, b in body.equations),
    )


def translate(body, shift):
    shift = point(shift)
    if body.is_empty:
        return body
    return ConvexBody(
        body.dim,
        tuple(tuple(c + s for c, s in zip(v, shift)) for v in body.vertices),
        tuple((n, b + _dot(n, shift)) for n, b in body.facets),
        tuple((n, b + _dot(n, shift)) for n, b in body.equations),
    )


def from_halfspaces(d, halfspaces):
    """Polytope {x : a.x <= b for (a, b)} by exact vertex enumeration.

    The system must describe a bounded set.
    """
    hs = []
    seen = set()
    for a, b in halfspaces:
        a = tuple(Fraction(x) for x in a)
        if not any(a):
            if Fraction(b) < 0:
                return empty_body(d)
            continue
        n = _primitive(a)
        j = next(i for i, x in enumerate(n) if x)
        key = (n, Fraction(b) * n[j] / a[j])
        if key not in seen:
            seen.add(key)
            hs.append(key)
    verts = set()
    for combo in combinations(hs, d):
        sol = _solve([n for n, _ in combo], [b for _, b in combo])
        if sol is None:
            continue
        if all(_dot(n, sol) <= b for n, b in hs):
            verts.add(sol)
    if not verts:
        return empty_body(d)
    return hull(list(verts))


def intersection(a, b):
    _same_dim(a, b)
    if a.is_empty or b.is_empty:
        return empty_body(a.dim)
    hs = list(a.facets) + list(b.facets)
    for n, o in list(a.equations) + list(b.equations):
        hs.append((n, o))
        hs.append((tuple(-x for x in n), -o))
    return from_halfspaces(a.dim, hs)


# ---------------------------------------------------------------- metrics

def _faces(body):
    """All nonempty faces as frozensets of vertex indices (body itself included)."""
    inc = [f for f in _incidences(body) if f]
    faces = set(inc)
    frontier = set(inc)
    while frontier:
        new = set()
        for f in frontier:
            for g in inc:
                h = f & g
                if h and h not in faces:
                    new.add(h)
        faces |= new
        frontier = new
    faces.add(frozenset(range(len(body.vertices))))
    faces |= {frozenset([i]) for i in range(len(body.vertices))}
    return faces


def _project_affine(p, pts):
    base = pts[0]
    dirs = [_sub(q, base) for q in pts[1:]]
    indep = []
    for v in dirs:
        if _rank(indep + [v]) == len(indep) + 1:
            indep.append(v)
    if not indep:
        return base
    rhs = _sub(p, base)
    gram = [[_dot(u, v) for v in indep] for u in indep]
    coef = _solve(gram, [_dot(u, rhs) for u in indep])
    return tuple(b + sum(c * u[i] for c, u in zip(coef, indep)) for i, b in enumerate(base))


def squared_distance_to_body(p, body, faces=None):
    """Exact squared Euclidean distance from a rational point to a polytope."""
    p = point(p)
    if contains(body, p):
        return Fraction(0)
    verts = body.vertices
    faces = faces if faces is not None else _faces(body)
    best = None
    for f in faces:
        q = _project_affine(p, [verts[i] for i in sorted(f)])
        if not contains(body, q):
            continue
        dq = sum((x - y) ** 2 for x, y in zip(p, q))
        if best is None or dq < best:
            best = dq
    return best


def hausdorff_distance(a, b):
    """d_H(a, b), as the largest vertex-to-body distance in either direction."""
    _same_dim(a, b)
    if a.is_empty or b.is_empty:
        raise ValueError("Hausdorff distance needs nonempty bodies")
    fa, fb = _faces(a), _faces(b)
    worst = Fraction(0)
    for v in a.vertices:
        worst = max(worst, squared_distance_to_body(v, b, fb))
    for v in b.vertices:
        worst = max(worst, squared_distance_to_body(v, a, fa))
    return sqrt(worst)


def symmetric_difference_distance(a, b):
    """vol(a) + vol(b) - 2 vol(a ∩ b), exact."""
    _same_dim(a, b)
    va, vb = volume(a), volume(b)
    if va == 0 or vb == 0:
        return va + vb
    return va + vb - 2 * volume(intersection(a, b))


# ---------------------------------------------------------------- text format

def _fmt(c):
    return f"{c.numerator}/{c.denominator}"


def dumps(body):
    lines = [f"dim {body.dim}"]
    lines += [" ".join(_fmt(c) for c in v) for v in body.vertices]
    return "\n".join(lines) + "\n"


def loads(text):
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or not lines[0].startswith("dim "):
        raise ValueError("line 1: expected 'dim d'")
    d = int(lines[0].split()[1])
    pts = []
    for k, ln in enumerate(lines[1:], start=2):
        try:
            p = tuple(Fraction(tok) for tok in ln.split())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"line {k}: bad rational ({exc})") from None
        if len(p) != d:
            raise ValueError(f"line {k}: expected {d} coordinates")
        pts.append(p)
    if not pts:
        return empty_body(d)
    return hull(pts)
