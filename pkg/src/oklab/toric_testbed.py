"""Toric metrized divisors: the testbed with computable ground truth.

A divisor is a rational polytope P together with one concave piecewise
linear roof per place.  Level m of its graded algebra has one section x^γ
per lattice point γ ∈ mP, with degree m·ϑ_w(γ/m) at place w.  Green
functions are the Legendre-type duals g_w(u) = max_{λ∈P} (-<λ,u> + ϑ_w(λ)).
"""
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import product
from math import factorial

import numpy as np
from scipy.stats import qmc

from . import adelic_core as ac
from . import convex_geom as cg
from .concave_transform import FilteredGradedAlgebra, chi_volume
from .extrapolate import extrapolate


def _frac(x):
    return x if isinstance(x, Fraction) else Fraction(x)


def _dot(a, b):
    return sum(x * y for x, y in zip(a, b))


@dataclass(frozen=True)
class PiecewiseLinearConcave:
    """min_k (<a_k, λ> + b_k) on ``domain``."""
    domain: cg.ConvexBody
    pieces: tuple

    def __post_init__(self):
        if not self.pieces:
            raise ValueError("a roof needs at least one affine piece")
        d = self.domain.dim
        clean = []
        for grad, off in self.pieces:
            grad = tuple(_frac(g) for g in grad)
            if len(grad) != d:
                raise ValueError("gradient length differs from the polytope dimension")
            clean.append((grad, _frac(off)))
        object.__setattr__(self, "pieces", tuple(sorted(set(clean))))

    @classmethod
    def constant(cls, domain, c=0):
        return cls(domain, (((0,) * domain.dim, c),))

    def __call__(self, lam):
        lam = cg.point(lam)
        return min(_dot(a, lam) + b for a, b in self.pieces)

    def evaluate(self, pts):
        pts = np.asarray(pts, dtype=float).reshape(-1, self.domain.dim)
        a = np.array([[float(x) for x in g] for g, _ in self.pieces])
        b = np.array([float(o) for _, o in self.pieces])
        return np.min(pts @ a.T + b, axis=1)

    @cached_property
    def cells(self):
        """(piece, cell) pairs: where each piece attains the minimum."""
        out = []
        for k, (a, b) in enumerate(self.pieces):
            hs = list(self.domain.facets)
            for j, (a2, b2) in enumerate(self.pieces):
                if j != k:
                    hs.append((tuple(x - y for x, y in zip(a, a2)), b2 - b))
            cell = cg.from_halfspaces(self.domain.dim, hs)
            if cell.is_full:
                out.append((k, cell))
        return out

    @cached_property
    def vertices(self):
        """Vertices of the subdivision of the domain induced by the pieces."""
        vs = set(self.domain.vertices)
        for _, cell in self.cells:
            vs.update(cell.vertices)
        return tuple(sorted(vs))

    def graph_points(self):
        return [v + (self(v),) for v in self.vertices]

    def maximum(self):
        return max(self(v) for v in self.vertices)

    def minimum(self):
        return min(self(v) for v in self.vertices)

    @property
    def is_constant(self):
        return len(self.pieces) == 1 and not any(self.pieces[0][0])


def _upper_envelope(domain, points):
    """Roof whose graph is the upper hull of ``points`` over ``domain``."""
    body = cg.hull(points)
    pieces = []
    for n, b in body.equations:
        if n[-1] != 0:
            pieces.append((tuple(Fraction(-x, n[-1]) for x in n[:-1]), Fraction(b) / n[-1]))
    for n, b in body.facets:
        if n[-1] > 0:
            pieces.append((tuple(Fraction(-x, n[-1]) for x in n[:-1]), Fraction(b) / n[-1]))
    if not pieces:
        raise ValueError("graph points do not define a roof")
    return PiecewiseLinearConcave(domain, tuple(pieces))


def sup_convolution(f, g):
    """(f □ g)(x) = max_{x = y + z} f(y) + g(z) on the Minkowski sum."""
    dom = cg.minkowski_sum(f.domain, g.domain)
    pts = [tuple(a + b for a, b in zip(p, q)) for p in f.graph_points() for q in g.graph_points()]
    return _upper_envelope(dom, pts)


# ---------------------------------------------------------------- divisors

@dataclass(frozen=True)
class MetrizedToricDivisor:
    polytope: cg.ConvexBody
    roofs: dict
    curve: ac.AdelicCurve

    def __post_init__(self):
        labels = set(self.curve.labels)
        roofs = {}
        for label, roof in self.roofs.items():
            if label not in labels:
                raise ValueError(f"roof for unknown place {label!r}")
            pl = self.curve.places[self.curve.index(label)]
            if roof.domain != self.polytope:
                raise ValueError(f"roof at {label!r} lives on a different polytope")
            if pl.kind == ac.TRIVIAL and not (roof.is_constant and roof.pieces[0][1] == 0):
                raise ValueError(f"trivial place {label!r} must carry the zero roof")
            roofs[label] = roof
        object.__setattr__(self, "roofs", roofs)

    def __hash__(self):
        return id(self)

    @property
    def dim(self):
        return self.polytope.dim

    @property
    def is_lattice(self):
        return all(c.denominator == 1 for v in self.polytope.vertices for c in v)

    def roof(self, label):
        r = self.roofs.get(label)
        return r if r is not None else PiecewiseLinearConcave.constant(self.polytope)

    def _weights(self):
        return {pl.label: Fraction(pl.weight) for pl in self.curve.places}

    def total_roof(self):
        """Σ_w nu(w) ϑ_w as a single roof (pieces summed over the common refinement)."""
        w = self._weights()
        pieces = []
        labels = [lab for lab in self.roofs if w[lab] != 0]
        if not labels:
            return PiecewiseLinearConcave.constant(self.polytope)
        for combo in product(*(self.roofs[lab].pieces for lab in labels)):
            grad = tuple(sum(w[lab] * a[i] for lab, (a, _) in zip(labels, combo))
                         for i in range(self.dim))
            off = sum(w[lab] * b for lab, (_, b) in zip(labels, combo))
            pieces.append((grad, off))
        return PiecewiseLinearConcave(self.polytope, tuple(pieces))

    def roof_value(self, lam):
        w = self._weights()
        return sum(w[lab] * r(lam) for lab, r in self.roofs.items())

    # ----- exact volumes

    def _integration_cells(self, positive):
        total = self.total_roof()
        for k, cell in total.cells:
            a, b = total.pieces[k]
            if positive:
                cell = cg.intersection(cell, cg.from_halfspaces(
                    self.dim, list(cell.facets) + [(tuple(-x for x in a), b)]))
                if not cell.is_full:
                    continue
            yield a, b, cell

    def exact_integral(self, positive=False):
        """∫_P Σ nu ϑ (or its positive part), exactly."""
        cg.require_full(self.polytope)
        acc = Fraction(0)
        for a, b, cell in self._integration_cells(positive):
            for simp in cg.simplices(cell):
                vol = abs(cg._det([cg._sub(v, simp[0]) for v in simp[1:]])) / factorial(self.dim)
                centroid = tuple(sum(v[i] for v in simp) / len(simp) for i in range(self.dim))
                acc += vol * (_dot(a, centroid) + b)
        return acc

    def period(self, positive=False):
        """Least q such that the level sums of the (positive) weights are a
        polynomial in m along multiples of q: the lcm of the denominators of
        all integration-cell vertices."""
        q = 1
        for v in self.polytope.vertices:
            for c in v:
                q = math.lcm(q, c.denominator)
        for _, _, cell in self._integration_cells(positive):
            for v in cell.vertices:
                for c in v:
                    q = math.lcm(q, c.denominator)
        return q

    def exact_volume(self, positive=True):
        """(d+1)!∫ max(Σνϑ, 0) (vol̂) or (d+1)!∫ Σνϑ (vol̂_χ^num)."""
        return factorial(self.dim + 1) * self.exact_integral(positive)

    def geometric_volume(self):
        """vol(D) = d!·vol(P)."""
        return factorial(self.dim) * cg.volume(self.polytope)

    def mu_max(self):
        return self.total_roof().maximum()

    def mu_min(self):
        return self.total_roof().minimum()

    def is_big(self):
        return self.polytope.is_full and self.mu_max() > 0

    # ----- operations on divisors

    def scaled(self, alpha):
        alpha = _frac(alpha)
        if alpha <= 0:
            raise ValueError("scale factor must be positive")
        poly = cg.scale(self.polytope, alpha)
        roofs = {lab: PiecewiseLinearConcave(poly, tuple((a, alpha * b) for a, b in r.pieces))
                 for lab, r in self.roofs.items()}
        return MetrizedToricDivisor(poly, roofs, self.curve)

    def shifted(self, c):
        """D(c): add c(w) to the roof at w.  A scalar is placed at the first
        place of positive weight, scaled so that ∫c = c."""
        if not isinstance(c, dict):
            pl = next(p for p in self.curve.places if p.weight > 0 and p.kind != ac.TRIVIAL)
            c = {pl.label: _frac(c) / _frac(pl.weight)}
        roofs = dict(self.roofs)
        for lab, cw in c.items():
            r = self.roof(lab)
            roofs[lab] = PiecewiseLinearConcave(
                self.polytope, tuple((a, b + _frac(cw)) for a, b in r.pieces))
        return MetrizedToricDivisor(self.polytope, roofs, self.curve)

    def plus(self, other):
        """D + D': Minkowski sum of polytopes, sup-convolution of roofs."""
        if other.curve != self.curve:
            raise ValueError("divisors live on different curves")
        poly = cg.minkowski_sum(self.polytope, other.polytope)
        roofs = {}
        for lab in set(self.roofs) | set(other.roofs):
            r = sup_convolution(self.roof(lab), other.roof(lab))
            roofs[lab] = PiecewiseLinearConcave(poly, r.pieces)
        return MetrizedToricDivisor(poly, roofs, self.curve)

    def standard_effective(self):
        """Simplex conv(0, e_1, ..., e_d) with zero roofs: an effective divisor."""
        d = self.dim
        simplex = cg.hull([(0,) * d] + [tuple(int(i == j) for j in range(d)) for i in range(d)])
        return MetrizedToricDivisor(simplex, {}, self.curve)

    def algebra(self, M, allow_rational=True):
        return sections(self, M, allow_rational=allow_rational, with_bundles=False)[1]


def lattice_points(body, m=1):
    """Integer points of m·body, in lexicographic order."""
    d = body.dim
    lo = [math.floor(m * min(v[i] for v in body.vertices)) for i in range(d)]
    hi = [math.ceil(m * max(v[i] for v in body.vertices)) for i in range(d)]
    mesh = np.stack(np.meshgrid(*[np.arange(lo[i], hi[i] + 1) for i in range(d)],
                                indexing="ij"), axis=-1).reshape(-1, d)
    keep = np.ones(len(mesh), dtype=bool)
    for n, b in body.facets:
        keep &= mesh @ np.array(n, dtype=np.int64) * b.denominator <= m * b.numerator
    for n, b in body.equations:
        keep &= mesh @ np.array(n, dtype=np.int64) * b.denominator == m * b.numerator
    return mesh[keep]


def sections(divisor, M, allow_rational=False, with_bundles=True):
    """Per-level diagonal bundles and the filtered graded algebra up to M.

    Level m has one basis vector x^γ per γ ∈ mP ∩ Z^d with degree
    m·ϑ_w(γ/m) at place w.  Rational (non-lattice) polytopes are accepted
    only with ``allow_rational``.
    """
    if M < 1:
        raise ValueError("truncation must be >= 1")
    if not divisor.is_lattice and not allow_rational:
        raise ValueError("polytope has non-lattice vertices")
    curve = divisor.curve
    nu = curve.weights
    pieces = {}
    for j, pl in enumerate(curve.places):
        if pl.label in divisor.roofs:
            r = divisor.roofs[pl.label]
            pieces[j] = (np.array([[float(x) for x in g] for g, _ in r.pieces]),
                         np.array([float(o) for _, o in r.pieces]))
    bundles, levels = [], {}
    for m in range(1, M + 1):
        pts = lattice_points(divisor.polytope, m)
        deg = np.zeros((len(pts), len(curve.places)))
        for j, (a, b) in pieces.items():
            deg[:, j] = np.min(pts @ a.T + m * b, axis=1) if len(pts) else 0.0
        if with_bundles:
            labels = tuple("x^" + ",".join(str(c) for c in g) for g in pts)
            bundles.append(ac.DiagonalAdelicBundle(curve, deg, labels))
        w = deg @ nu
        levels[m] = {tuple(int(c) for c in g): float(x) for g, x in zip(pts, w)}
    return bundles, FilteredGradedAlgebra(divisor.dim, levels, divisor)


def roof_transform(divisor):
    """λ -> Σ_w nu(w) ϑ_w(λ), vectorised over float arrays."""
    total = divisor.total_roof()
    return total.evaluate


# ---------------------------------------------------------------- Green functions, heights

def green_function(divisor, place, u):
    """g_w(u) = max over subdivision vertices λ of (-<λ, u> + ϑ_w(λ)).

    ``u`` is a single vector or an (n, d) array; the result matches.
    """
    r = divisor.roof(place)
    verts = np.array([[float(c) for c in v] for v in r.vertices])
    vals = np.array([float(r(v)) for v in r.vertices])
    uu = np.asarray(u, dtype=float)
    single = uu.ndim == 1
    uu = uu.reshape(-1, divisor.dim)
    out = np.max(-uu @ verts.T + vals, axis=1)
    return float(out[0]) if single else out


@dataclass(frozen=True)
class TropicalPoint:
    """Per-place tropical coordinates u_w = -log|x|_w (zero when absent)."""
    coords: dict

    def at(self, label, d):
        return tuple(self.coords.get(label, (0.0,) * d))


def height(divisor, x):
    total = 0.0
    for pl in divisor.curve.places:
        if pl.kind == ac.TRIVIAL or pl.weight == 0:
            continue
        total += pl.weight * green_function(divisor, pl.label, x.at(pl.label, divisor.dim))
    return total


def _active_places(divisor):
    return [pl for pl in divisor.curve.places if pl.kind != ac.TRIVIAL and pl.weight > 0]


def sample_tropical(divisor, n, seed=42, radius=None):
    """Quasi-random tropical points obeying the product formula Σ nu u_w = 0.

    Returns a dict label -> (n, d) array.
    """
    places = _active_places(divisor)
    d = divisor.dim
    if radius is None:
        grads = [abs(float(c)) for r in divisor.roofs.values() for g, _ in r.pieces for c in g]
        radius = 4.0 * (1.0 + max(grads, default=0.0))
    sampler = qmc.Halton(d=d * len(places), scramble=True, seed=seed)
    raw = (2.0 * sampler.random(n) - 1.0) * radius
    w = np.array([pl.weight for pl in places])
    u = raw.reshape(n, len(places), d)
    mean = np.einsum("p,npd->nd", w, u) / w.sum()
    u = u - mean[:, None, :]
    return {pl.label: u[:, k, :] for k, pl in enumerate(places)}


def _candidates(divisor):
    """u = 0 and, per pair of places, a roof gradient balanced by the other."""
    places = _active_places(divisor)
    d = divisor.dim
    rows = [{pl.label: np.zeros(d) for pl in places}]
    for p, q in product(places, places):
        if p.label == q.label:
            continue
        for g, _ in divisor.roof(p.label).pieces:
            a = np.array([float(c) for c in g])
            row = {pl.label: np.zeros(d) for pl in places}
            row[p.label] = a
            row[q.label] = -p.weight / q.weight * a
            rows.append(row)
    return {pl.label: np.array([r[pl.label] for r in rows]) for pl in places}


def heights(divisor, coords):
    """Heights of the tropical points given as label -> (n, d) arrays."""
    n = len(next(iter(coords.values())))
    total = np.zeros(n)
    for pl in _active_places(divisor):
        total += pl.weight * green_function(divisor, pl.label, coords[pl.label])
    return total


@dataclass(frozen=True)
class EssentialMinimumReport:
    estimate: float
    zhang_bound: float
    mu_max: float
    samples: int
    holds: bool
    tight: bool


def essential_minimum_estimate(divisor, samples=10_000, seed=42, tol=1e-6):
    """inf of the height over sampled tropical points, against
    ζ_ess >= μ_max^asy >= vol̂_χ^num/((d+1) vol(D))."""
    if not divisor.is_big():
        raise ValueError("essential minimum estimate needs a big divisor")
    pts = sample_tropical(divisor, samples, seed)
    cand = _candidates(divisor)
    est = min(float(np.min(heights(divisor, pts))), float(np.min(heights(divisor, cand))))
    d = divisor.dim
    bound = float(divisor.exact_volume(positive=False)) / ((d + 1) * float(divisor.geometric_volume()))
    mu = float(divisor.mu_max())
    holds = est >= bound - tol and est >= mu - tol
    return EssentialMinimumReport(est, bound, mu, samples, holds, abs(est - mu) <= tol)


# ---------------------------------------------------------------- families and checks

def _erode(divisor, boundary, eps):
    for r in boundary.roofs.values():
        if not r.is_constant:
            raise ValueError("erosion needs constant boundary roofs")
    hs = []
    for n, b in divisor.polytope.facets:
        h = max(_dot(n, v) for v in boundary.polytope.vertices)
        hs.append((n, b - eps * h))
    poly = cg.from_halfspaces(divisor.dim, hs)
    if not poly.is_full:
        raise ValueError(f"erosion by {eps} leaves no full-dimensional polytope")
    roofs = {}
    for lab in set(divisor.roofs) | set(boundary.roofs):
        c = boundary.roof(lab).pieces[0][1]
        pieces = tuple((a, b + eps * _dot(a, v) - eps * c)
                       for a, b in divisor.roof(lab).pieces for v in boundary.polytope.vertices)
        roofs[lab] = PiecewiseLinearConcave(poly, pieces)
    return MetrizedToricDivisor(poly, roofs, divisor.curve)


def boundary_family(divisor, boundary, eps_list):
    """D_ε = D + εB for ε > 0 and the erosion D - |ε|B for ε < 0."""
    for r in boundary.roofs.values():
        if r.minimum() < 0:
            raise ValueError("boundary roofs must be nonnegative")
    out = []
    for eps in eps_list:
        eps = _frac(eps)
        if eps == 0:
            out.append(divisor)
        elif eps > 0:
            out.append(divisor.plus(boundary.scaled(eps)))
        else:
            out.append(_erode(divisor, boundary, -eps))
    return out


@dataclass(frozen=True)
class HilbertSamuelReport:
    degree_side: float
    error_bar: float
    integral_side: float
    relative_gap: float


def hilbert_samuel_check(divisor, M):
    """chi_volume from finite-level degrees vs (d+1)!∫_P Σ nu ϑ exactly."""
    alg = divisor.algebra(M)
    rep = chi_volume(alg, M)
    ref = float(divisor.exact_volume(positive=False))
    gap = abs(rep.estimate - ref) / max(abs(ref), 1e-12)
    return HilbertSamuelReport(rep.estimate, rep.error_bar, ref, gap)


def classical_volume(divisor, M):
    """Extrapolated ĥ⁰(V_m)(d+1)!/m^{d+1} from small-section counts."""
    bundles, _ = sections(divisor, M, allow_rational=True)
    d = divisor.dim
    seq = {m: ac.small_sections_h0(b) * factorial(d + 1) / m ** (d + 1)
           for m, b in enumerate(bundles, start=1) if b.rank}
    return extrapolate(seq)


@dataclass(frozen=True)
class HeightInequalityReport:
    epsilon: float
    c: float
    violations: int
    tested: int
    part: int
    exceptional_region: str = "none"


def height_inequality_check(divisor_d, divisor_m, samples=10_000, part=1, seed=42,
                            margin=1e-6, kmax=20):
    """Largest ε = 2^-k with h_D >= ε h_M - c on all sampled tropical points.

    Part 1 takes c = 0; part 2 takes c = -(vol̂_χ^num/((d+1)vol(D)) - margin).
    """
    if divisor_d.curve != divisor_m.curve or divisor_d.dim != divisor_m.dim:
        raise ValueError("divisors must share curve and dimension")
    pts = sample_tropical(divisor_d, samples, seed)
    cand = _candidates(divisor_d)
    coords = {lab: np.vstack([pts[lab], cand[lab]]) for lab in pts}
    hd, hm = heights(divisor_d, coords), heights(divisor_m, coords)
    if part == 1:
        c = 0.0
    else:
        d = divisor_d.dim
        c = -(float(divisor_d.exact_volume(positive=False))
              / ((d + 1) * float(divisor_d.geometric_volume())) - margin)
    tol = 1e-9
    best = None
    for k in range(kmax + 1):
        eps = 2.0 ** -k
        bad = int(np.sum(hd < eps * hm - c - tol))
        if bad == 0:
            best = (eps, bad)
            break
    if best is None:
        eps = 2.0 ** -kmax
        best = (eps, int(np.sum(hd < eps * hm - c - tol)))
    return HeightInequalityReport(best[0], c, best[1], len(hd), part)


def duality_residual(divisor, m, gamma, place=None, u_samples=None):
    """|inf_u(<γ,u> + m g_w(u)) - m ϑ_w(γ/m)|, i.e. -log||x^γ||_sup vs the roof.

    The infimum runs over the roof gradients (where it is attained for PL
    roofs) plus any extra ``u_samples``.
    """
    gamma = tuple(int(c) for c in gamma)
    lam = tuple(Fraction(c, m) for c in gamma)
    if not cg.contains(divisor.polytope, lam):
        raise ValueError(f"γ = {gamma} is not in {m}P")
    labels = [place] if place is not None else [pl.label for pl in _active_places(divisor)]
    worst = 0.0
    g = np.array(gamma, dtype=float)
    for lab in labels:
        r = divisor.roof(lab)
        us = np.array([[float(c) for c in a] for a, _ in r.pieces])
        if u_samples is not None:
            us = np.vstack([us, np.asarray(u_samples, dtype=float).reshape(-1, divisor.dim)])
        vals = us @ g + m * green_function(divisor, lab, us)
        worst = max(worst, abs(float(np.min(vals)) - m * float(r(lam))))
    return worst


supnorm_duality_check = duality_residual


# ---------------------------------------------------------------- templates

def p1_linear(curve=None):
    """P = [0,1], roof 1 - λ at the real place."""
    curve = curve or ac.rational_curve((2,))
    poly = cg.hull([(0,), (1,)])
    return MetrizedToricDivisor(poly, {"inf": PiecewiseLinearConcave(poly, (((-1,), 1),))}, curve)


def p2_linear(curve=None):
    """Standard simplex, roof 1 - λ1 - λ2 at the real place."""
    curve = curve or ac.rational_curve((2,))
    poly = cg.hull([(0, 0), (1, 0), (0, 1)])
    return MetrizedToricDivisor(poly, {"inf": PiecewiseLinearConcave(poly, (((-1, -1), 1),))}, curve)


def p1_function_field(q=2):
    """Pure function-field instance: roof (1 - λ)·log q at infinity of F_q(t)."""
    curve = ac.function_field_curve(q, [(0, 1)])
    poly = cg.hull([(0,), (1,)])
    lq = Fraction(math.log(q))
    return MetrizedToricDivisor(poly, {"inf": PiecewiseLinearConcave(poly, (((-lq,), lq),))}, curve)


def random_pl(seed=42, dim=None):
    """A random big divisor: small lattice polytope, 1-3 roof pieces at the
    real place and a constant roof at p = 2."""
    rng = random.Random(seed)
    d = dim or rng.choice((1, 2))
    curve = ac.rational_curve((2,))
    while True:
        pts = [tuple(rng.randint(0, 2) for _ in range(d)) for _ in range(rng.randint(d + 1, 5))]
        poly = cg.hull(pts)
        if poly.is_full:
            break
    while True:
        pieces = []
        for _ in range(rng.randint(1, 3)):
            grad = tuple(rng.randint(-1, 1) for _ in range(d))
            pieces.append((grad, Fraction(rng.randint(0, 8), 4)))
        roof = PiecewiseLinearConcave(poly, tuple(pieces))
        aux = PiecewiseLinearConcave.constant(poly, Fraction(rng.randint(-2, 2), 8))
        div = MetrizedToricDivisor(poly, {"inf": roof, "2": aux}, curve)
        if div.is_big():
            return div


def unit_boundary(divisor, g=1):
    """B with P_B = [0,1]^d and constant roof g at the first active place."""
    d = divisor.dim
    cube = cg.hull([tuple(bits) for bits in product((0, 1), repeat=d)])
    lab = _active_places(divisor)[0].label
    return MetrizedToricDivisor(cube, {lab: PiecewiseLinearConcave.constant(cube, g)}, divisor.curve)


TEMPLATES = {
    "p1_linear": lambda seed: p1_linear(),
    "p2_linear": lambda seed: p2_linear(),
    "random_pl": lambda seed: random_pl(seed),
    "boundary_family": lambda seed: p1_linear(),
}


# ---------------------------------------------------------------- instance files

class InstanceParseError(ValueError):
    def __init__(self, line, msg):
        super().__init__(f"line {line}: {msg}")
        self.line = line
        self.msg = msg


def _fmt(x):
    x = _frac(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _fmt_step(pl):
    if pl.value_group_step is None:
        return None
    if pl.center is not None and isinstance(pl.center, int):
        return f"log:{pl.center}"
    return repr(pl.value_group_step)


def _fmt_center(pl):
    if pl.center is None:
        return None
    if isinstance(pl.center, int):
        return str(pl.center)
    return ",".join(str(c) for c in pl.center)


def dumps_instance(divisor, boundary=None, epsilons=None):
    curve = divisor.curve
    lines = ["[curve]", f"mode {curve.mode}" + (f" q={curve.q}" if curve.q else "")]
    for pl in curve.places:
        toks = ["place", pl.label, pl.kind, repr(float(pl.weight))]
        step, center = _fmt_step(pl), _fmt_center(pl)
        if step:
            toks.append(f"step={step}")
        if center:
            toks.append(f"center={center}")
        lines.append(" ".join(toks))

    def body(div, prefix):
        out = [f"[{prefix}polytope]"]
        out += [" ".join(_fmt(c) for c in v) for v in div.polytope.vertices]
        for lab in sorted(div.roofs):
            out.append(f"[{prefix}place {lab}]")
            for a, b in div.roofs[lab].pieces:
                out.append(" ".join(_fmt(c) for c in a) + " " + _fmt(b))
        return out

    lines += body(divisor, "")
    if boundary is not None:
        lines += body(boundary, "boundary ")
    if epsilons:
        lines.append("[epsilons]")
        lines.append(" ".join(_fmt(e) for e in epsilons))
    return "\n".join(lines) + "\n"


@dataclass
class Instance:
    divisor: MetrizedToricDivisor
    boundary: MetrizedToricDivisor = None
    epsilons: list = field(default_factory=list)


def _parse_step(tok, line):
    if tok.startswith("log:"):
        try:
            return math.log(int(tok[4:]))
        except ValueError:
            raise InstanceParseError(line, f"bad step {tok!r}") from None
    try:
        return float(tok)
    except ValueError:
        raise InstanceParseError(line, f"bad step {tok!r}") from None


def loads_instance(text):
    """Parse an instance file; errors carry the offending line number."""
    section, arg = None, None
    mode, q, places = ac.NUMBER_FIELD, None, []
    verts = {"": [], "boundary ": []}
    pieces = {"": {}, "boundary ": {}}
    starts = {}
    epsilons = []
    for k, raw in enumerate(text.splitlines(), start=1):
        ln = raw.split("#", 1)[0].strip()
        if not ln:
            continue
        if ln.startswith("["):
            if not ln.endswith("]"):
                raise InstanceParseError(k, "unterminated section header")
            head = ln[1:-1].strip()
            prefix = ""
            if head.startswith("boundary "):
                prefix, head = "boundary ", head[len("boundary "):].strip()
            if head == "curve" and not prefix:
                section, arg = "curve", None
            elif head == "polytope":
                section, arg = prefix + "polytope", None
            elif head.startswith("place "):
                section, arg = prefix + "place", head[6:].strip()
                pieces[prefix][arg] = []
                starts[(prefix, arg)] = k
            elif head == "epsilons" and not prefix:
                section, arg = "epsilons", None
            else:
                raise InstanceParseError(k, f"unknown section [{head}]")
            continue
        toks = ln.split()
        try:
            if section == "curve":
                if toks[0] == "mode":
                    mode = toks[1]
                    for t in toks[2:]:
                        if t.startswith("q="):
                            q = int(t[2:])
                elif toks[0] == "place":
                    label, kind, weight = toks[1], toks[2], float(toks[3])
                    step, center = None, None
                    for t in toks[4:]:
                        if t.startswith("step="):
                            step = _parse_step(t[5:], k)
                        elif t.startswith("center="):
                            val = t[7:]
                            center = int(val) if "," not in val and mode == ac.NUMBER_FIELD \
                                else tuple(int(c) for c in val.split(","))
                        else:
                            raise InstanceParseError(k, f"unknown place field {t!r}")
                    places.append(ac.Place(label, kind, weight, step, center))
                else:
                    raise InstanceParseError(k, f"unknown curve entry {toks[0]!r}")
            elif section in ("polytope", "boundary polytope"):
                prefix = "boundary " if section.startswith("boundary") else ""
                verts[prefix].append((k, tuple(Fraction(t) for t in toks)))
            elif section in ("place", "boundary place"):
                prefix = "boundary " if section.startswith("boundary") else ""
                vals = [Fraction(t) for t in toks]
                pieces[prefix][arg].append((k, tuple(vals[:-1]), vals[-1]))
            elif section == "epsilons":
                epsilons += [Fraction(t) for t in toks]
            else:
                raise InstanceParseError(k, "content outside any section")
        except InstanceParseError:
            raise
        except (ValueError, ZeroDivisionError, IndexError) as exc:
            raise InstanceParseError(k, str(exc) or "malformed entry") from None
    if not places:
        raise InstanceParseError(1, "missing [curve] place table")
    try:
        curve = ac.AdelicCurve(tuple(places), mode, q)
    except ValueError as exc:
        raise InstanceParseError(1, str(exc)) from None

    def build(prefix):
        if not verts[prefix]:
            return None
        dims = {len(v) for _, v in verts[prefix]}
        if len(dims) != 1:
            raise InstanceParseError(verts[prefix][-1][0], "vertices of different dimensions")
        poly = cg.hull([v for _, v in verts[prefix]])
        d = poly.dim
        roofs = {}
        for lab, plist in pieces[prefix].items():
            if not plist:
                raise InstanceParseError(starts[(prefix, lab)], f"place {lab} has no pieces")
            for k, g, _ in plist:
                if len(g) != d:
                    raise InstanceParseError(k, f"expected {d} gradient entries and an offset")
            roofs[lab] = PiecewiseLinearConcave(poly, tuple((g, b) for _, g, b in plist))
        try:
            return MetrizedToricDivisor(poly, roofs, curve)
        except ValueError as exc:
            raise InstanceParseError(starts.get((prefix, next(iter(roofs), "")), 1), str(exc)) from None

    div = build("")
    if div is None:
        raise InstanceParseError(1, "missing [polytope] section")
    return Instance(div, build("boundary "), epsilons)
