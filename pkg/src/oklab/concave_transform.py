"""The concave transform of a filtered graded algebra and its volumes.

An algebra stores, per level m, the weights of its distinct valuation
vectors γ.  From these

    ρ(m, γ)   = weight of γ at level m (or -inf),
    ρ̃(m, γ)  = max_{n <= N} ρ(nm, nγ)/n,
    Γ^t       = {(m, γ) : ρ̃(m, γ) >= m t},
    G(λ)      = sup{t : λ ∈ Δ(Γ^t)}.

At a finite truncation the bodies Δ(Γ^t) are nested hulls that only change
at finitely many thresholds t.  ``concave_transform`` sweeps those thresholds
once from the top, which gives G at every point, its integral (layer-cake
formula) and its push-forward measure exactly for the truncated data.
"""
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

import numpy as np

from . import convex_geom as cg
from .extrapolate import extrapolate
from .graded_okounkov import GradedSemigroup

DEFAULT_FEKETE_DEPTH = 8
DEFAULT_GRID = 64
VALUE_TOL = 1e-12


@dataclass
class FilteredGradedAlgebra:
    """Per-level maps γ -> weight (one weight per valuation vector)."""
    dim: int
    levels: dict
    provenance: object = field(default=None, repr=False)

    def __post_init__(self):
        clean = {}
        for m, entries in self.levels.items():
            if isinstance(entries, dict):
                items = entries.items()
            else:
                items = list(entries)
                if len({tuple(g) for g, _ in items}) != len(items):
                    raise ValueError(f"level {m}: valuation vectors must be distinct")
            clean[int(m)] = {tuple(int(c) for c in g): float(w) for g, w in items}
        self.levels = clean

    @property
    def truncation(self):
        return max((m for m in self.levels if self.levels[m]), default=0)

    def weights(self, m):
        return np.array(sorted(self.levels.get(m, {}).values()), dtype=float)

    def semigroup(self):
        return GradedSemigroup(self.dim, {m: set(v) for m, v in self.levels.items() if m > 0})

    def shifted(self, c):
        """Weights w + m c at level m, i.e. every norm multiplied by e^{-c}."""
        return FilteredGradedAlgebra(
            self.dim, {m: {g: w + m * c for g, w in lv.items()} for m, lv in self.levels.items()})

    def veronese(self, k):
        """Level m of the result is level k m of this algebra."""
        top = self.truncation // k
        return FilteredGradedAlgebra(
            self.dim, {m: dict(self.levels.get(k * m, {})) for m in range(1, top + 1)})

    def restricted(self, levels):
        keep = set(levels)
        return FilteredGradedAlgebra(
            self.dim, {m: lv for m, lv in self.levels.items() if m in keep},
            self.provenance)


def superadditivity_violations(alg, max_level=None, tol=1e-9):
    """Pairs of entries whose product has no entry of weight >= w + w'."""
    top = max_level or alg.truncation
    bad = []
    for m in range(1, top + 1):
        for m2 in range(m, top + 1 - m):
            lv, lv2, tgt = alg.levels.get(m, {}), alg.levels.get(m2, {}), alg.levels.get(m + m2, {})
            for g, w in lv.items():
                for g2, w2 in lv2.items():
                    s = tuple(a + b for a, b in zip(g, g2))
                    if tgt.get(s, -math.inf) < w + w2 - tol:
                        bad.append(((m, g), (m2, g2)))
    return bad


# ---------------------------------------------------------------- ρ, ρ̃

def rho(alg, m, gamma):
    if m > alg.truncation:
        raise ValueError("level beyond truncation")
    return alg.levels.get(m, {}).get(tuple(gamma), -math.inf)


def rho_tilde(alg, m, gamma, N=DEFAULT_FEKETE_DEPTH):
    """max_{1<=n<=N, nm<=M} ρ(nm, nγ)/n, a lower bound for the Fekete limit."""
    top = alg.truncation
    best = -math.inf
    for n in range(1, N + 1):
        if n * m > top:
            break
        w = alg.levels.get(n * m, {}).get(tuple(n * c for c in gamma))
        if w is not None and w / n > best:
            best = w / n
    return best


def _normalized_points(alg, M, N, levels=None):
    """Map normalized point γ/m -> max ρ̃(m, γ)/m over representations."""
    ms = [m for m in sorted(alg.levels) if 1 <= m <= M and alg.levels[m]]
    if levels is not None:
        allowed = set(levels)
        ms = [m for m in ms if m in allowed]
    if not ms:
        raise ValueError("no nonempty levels up to the truncation")
    scale = 1
    for m in ms:
        scale = scale * m // math.gcd(scale, m)
    best = {}
    stationary = True
    for m in ms:
        for g, w in alg.levels[m].items():
            r = w
            for n in range(2, N + 1):
                if n * m > M:
                    break
                w2 = alg.levels.get(n * m, {}).get(tuple(n * c for c in g))
                if w2 is not None and w2 / n > r + VALUE_TOL * max(1.0, abs(r)):
                    r = w2 / n
                    stationary = False
            key = tuple(c * (scale // m) for c in g)
            v = r / m
            if key not in best or v > best[key]:
                best[key] = v
    return best, scale, stationary


# ---------------------------------------------------------------- transform

@dataclass
class ConcaveTransform:
    """G at finite truncation, stored as nested hulls H_0 ⊂ H_1 ⊂ ... .

    ``values[k]`` is the threshold at which ``hulls[k]`` appears, so
    G(λ) = values[k] for the first k with λ ∈ hulls[k].
    """
    dim: int
    domain: cg.ConvexBody
    values: list
    hulls: list
    volumes: list
    grid: np.ndarray
    grid_values: np.ndarray
    M: int
    N: int
    stationary: bool
    grid_size: int
    grid_exact: list = field(default_factory=list, repr=False)
    grid_index: list = field(default_factory=list, repr=False)

    @property
    def sup(self):
        return self.values[0]

    @property
    def inf(self):
        return self.values[-1]

    def _member(self, k, x, xf):
        body = self.hulls[k]
        if body.is_full:
            a, b = self._arrays[k]
            slack = b - a @ xf
            if np.all(slack > 1e-9):
                return True
            if np.any(slack < -1e-9):
                return False
        return cg.contains(body, x)

    def __post_init__(self):
        self._arrays = [cg.facet_arrays(h) if h.is_full else None for h in self.hulls]

    def evaluate(self, points):
        """G at rational points of the domain (nan outside)."""
        out = []
        for p in points:
            x = cg.point(p)
            xf = np.array([float(c) for c in x])
            if not self._member(len(self.hulls) - 1, x, xf):
                out.append(math.nan)
                continue
            lo, hi = 0, len(self.hulls) - 1
            while lo < hi:
                mid = (lo + hi) // 2
                if self._member(mid, x, xf):
                    hi = mid
                else:
                    lo = mid + 1
            out.append(self.values[lo])
        return np.array(out, dtype=float)

    def superlevel_volume(self, t):
        """vol{G >= t} as an exact rational."""
        # values are decreasing; hull k is {G >= values[k]}
        k = _last_index_geq(self.values, t)
        return Fraction(0) if k < 0 else self.volumes[k]

    def integral(self, positive_part=False):
        """∫_Δ G (or ∫ max(G, 0)) by the layer-cake formula."""
        vals, vols = self.values, self.volumes
        total = 0.0
        for k in range(len(vals)):
            lower = vals[k + 1] if k + 1 < len(vals) else None
            if positive_part:
                if vals[k] <= 0:
                    break
                lower = 0.0 if lower is None else max(lower, 0.0)
            if lower is None:
                total += vals[k] * float(vols[k])
            else:
                total += (vals[k] - lower) * float(vols[k])
        return total

    def pushforward_cdf(self, x):
        """F(x) = vol{G <= x}/vol(Δ) for the truncated transform."""
        full = self.volumes[-1]
        above = Fraction(0)
        k = _last_index_gt(self.values, x)
        if k >= 0:
            above = self.volumes[k]
        return float(1 - above / full)

    def atoms(self):
        """Push-forward of normalized Lebesgue measure: (value, mass) pairs."""
        full = self.volumes[-1]
        out, prev = [], Fraction(0)
        for v, vol in zip(self.values, self.volumes):
            if vol > prev:
                out.append((v, float((vol - prev) / full)))
            prev = vol
        return out[::-1]

    def to_csv(self):
        head = ",".join(f"lambda_{i + 1}" for i in range(self.dim)) + ",G"
        rows = [head]
        for p, g in zip(self.grid, self.grid_values):
            rows.append(",".join(f"{c:.12g}" for c in p) + f",{g:.12g}")
        return "\n".join(rows) + "\n"


def _last_index_geq(desc, t):
    # number of entries >= t, minus one
    lo, hi = 0, len(desc)
    while lo < hi:
        mid = (lo + hi) // 2
        if desc[mid] >= t - VALUE_TOL:
            lo = mid + 1
        else:
            hi = mid
    return lo - 1


def _last_index_gt(desc, t):
    lo, hi = 0, len(desc)
    while lo < hi:
        mid = (lo + hi) // 2
        if desc[mid] > t + VALUE_TOL:
            lo = mid + 1
        else:
            hi = mid
    return lo - 1


def _group_desc(items):
    """Group (value, point) pairs by value (within tolerance), descending."""
    items = sorted(items, key=lambda kv: -kv[0])
    groups = []
    for v, p in items:
        if groups and groups[-1][0] - v <= VALUE_TOL * max(1.0, abs(v)):
            groups[-1][1].append(p)
        else:
            groups.append((v, [p]))
    return groups


def transform_grid(body, n):
    """Cell midpoints of an n-per-axis grid over the bounding box of ``body``,
    kept when they lie in body° at distance >= 1/(2n) (box units) from ∂."""
    cg.require_full(body)
    d = body.dim
    lo = np.array([float(min(v[i] for v in body.vertices)) for i in range(d)])
    hi = np.array([float(max(v[i] for v in body.vertices)) for i in range(d)])
    axes = [lo[i] + (hi[i] - lo[i]) * (np.arange(n) + 0.5) / n for i in range(d)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    a, b = cg.facet_arrays(body)
    norms = np.linalg.norm(a, axis=1)
    margin = float(np.min(hi - lo)) / (2 * n)
    keep = np.all(mesh @ a.T <= b - margin * norms + 1e-12, axis=1)
    idx = np.stack(np.meshgrid(*[np.arange(n)] * d, indexing="ij"), axis=-1).reshape(-1, d)[keep]
    pts = mesh[keep]
    fr = [tuple(Fraction(c).limit_denominator(10 ** 12) for c in p) for p in pts]
    return pts, fr, [tuple(int(c) for c in i) for i in idx]


def sublevel_body(alg, t, M=None, N=DEFAULT_FEKETE_DEPTH):
    """Δ(Γ^t): hull of γ/m with ρ̃(m, γ) >= m t; empty body if none."""
    M = M or alg.truncation
    best, scale, _ = _normalized_points(alg, M, N)
    pts = [tuple(Fraction(c, scale) for c in key) for key, v in best.items()
           if v >= t - VALUE_TOL * max(1.0, abs(t))]
    if not pts:
        return cg.empty_body(alg.dim)
    return cg.hull(pts)


def concave_transform(alg, M=None, N=DEFAULT_FEKETE_DEPTH, grid=DEFAULT_GRID,
                      points=None, levels=None):
    """G on a grid of Δ° (or at the given ``points``), by a threshold sweep."""
    M = M or alg.truncation
    if grid < 2:
        raise ValueError("grid must have at least 2 points per axis")
    best, scale, stationary = _normalized_points(alg, M, N, levels)
    groups = _group_desc((v, key) for key, v in best.items())
    values, hulls, volumes = [], [], []
    verts = []
    current = None
    for v, keys in groups:
        if current is not None and current.is_full:
            arr = np.array(keys, dtype=float) / scale
            a, b = cg.facet_arrays(current)
            slack = b[None, :] - arr @ a.T
            outside = [k for k, s in zip(keys, slack) if np.any(s < 1e-9)]
            outside = [k for k in outside
                       if not cg.contains(current, tuple(Fraction(c, scale) for c in k))]
        else:
            outside = keys
        if current is not None and not outside:
            continue
        new = [tuple(Fraction(c, scale) for c in k) for k in outside]
        current = cg.hull(list(verts) + new)
        verts = current.vertices
        values.append(v)
        hulls.append(current)
        volumes.append(cg.volume(current))
    domain = hulls[-1]
    if points is None:
        gpts, gfr, gidx = transform_grid(domain, grid)
    else:
        gidx = []
        gfr = [cg.point(p) for p in points]
        for p in gfr:
            if not cg.contains(domain, p, interior_only=True):
                raise ValueError(f"grid point {tuple(map(str, p))} lies outside Δ°")
        gpts = np.array([[float(c) for c in p] for p in gfr], dtype=float).reshape(-1, alg.dim)
    ct = ConcaveTransform(alg.dim, domain, values, hulls, volumes, gpts,
                          np.zeros(len(gpts)), M, N, stationary, grid, gfr, gidx)
    ct.grid_values = ct.evaluate(gfr)
    return ct


def midpoint_concavity_defect(ct, steps=(1, 2, 4, 8)):
    """Largest (G(x-s)+G(x+s))/2 - G(x) over grid points x and offsets s."""
    index = {p: g for p, g in zip(ct.grid_index, ct.grid_values)}
    dirs = [tuple(int(i == j) for j in range(ct.dim)) for i in range(ct.dim)]
    if ct.dim > 1:
        dirs.append((1,) * ct.dim)
    worst = 0.0
    for p, g in index.items():
        for e in dirs:
            for s in steps:
                lo = index.get(tuple(a - s * b for a, b in zip(p, e)))
                hi = index.get(tuple(a + s * b for a, b in zip(p, e)))
                if lo is not None and hi is not None:
                    worst = max(worst, (lo + hi) / 2 - g)
    return worst


# ---------------------------------------------------------------- measures

@dataclass(frozen=True)
class JumpingMeasure:
    level: int
    atoms: tuple
    masses: tuple

    def cdf(self, x):
        k = bisect_right(self.atoms, x)
        return float(sum(self.masses[:k]))


def bisect_right(seq, x):
    lo, hi = 0, len(seq)
    while lo < hi:
        mid = (lo + hi) // 2
        if x < seq[mid]:
            hi = mid
        else:
            lo = mid + 1
    return lo


def jumping_measure(alg, m):
    """ν_m: atoms w/m for the level-m weights, each of mass 1/dim."""
    w = alg.weights(m)
    if len(w) == 0:
        raise ValueError(f"level {m} is empty")
    atoms = tuple(float(x) / m for x in np.sort(w))
    return JumpingMeasure(m, atoms, tuple([1.0 / len(w)] * len(w)))


def kolmogorov_distance(measure, reference):
    """sup_x |F_ν(x) - F_ref(x)| against a transform or a list of (atom, mass)."""
    ref = reference.atoms() if isinstance(reference, ConcaveTransform) else list(reference)
    ref = sorted(ref)
    xs = sorted(set(measure.atoms) | {a for a, _ in ref})
    ra = [a for a, _ in ref]
    rc = np.cumsum([mass for _, mass in ref])
    ma = list(measure.atoms)
    mc = np.cumsum(measure.masses)
    worst = 0.0
    for x in xs:
        k1 = bisect_right(ma, x)
        k2 = bisect_right(ra, x)
        f1 = mc[k1 - 1] if k1 else 0.0
        f2 = rc[k2 - 1] if k2 else 0.0
        worst = max(worst, abs(f1 - f2))
    return float(worst)


# ---------------------------------------------------------------- volumes

@dataclass(frozen=True)
class VolumeReport:
    quantity: str
    estimate: float
    error_bar: float
    reference_value: float
    pipeline_value: float = None

    @property
    def relative_gap(self):
        ref = self.reference_value
        if ref is None:
            return None
        return abs(self.estimate - ref) / max(abs(ref), 1e-12)


def volume_reports_csv(reports):
    rows = ["quantity,estimate,error_bar,reference_value"]
    for r in reports:
        ref = "" if r.reference_value is None else f"{r.reference_value:.12g}"
        rows.append(f"{r.quantity},{r.estimate:.12g},{r.error_bar:.12g},{ref}")
    return "\n".join(rows) + "\n"


def _level_sequence(alg, M, fn):
    d = alg.dim
    return {m: fn(alg.weights(m)) * factorial(d + 1) / m ** (d + 1)
            for m in range(1, M + 1) if len(alg.weights(m))}


def _volume_limit(alg, M, fn, positive):
    """Extrapolate a level sequence.  When the provenance reports a period q
    (the sequence is a polynomial in 1/m along multiples of q), fit that
    polynomial exactly on those levels; otherwise fall back to a + b/m."""
    seq = _level_sequence(alg, M, fn)
    prov = alg.provenance
    q = prov.period(positive) if prov is not None and hasattr(prov, "period") else None
    if q is not None:
        sub = {m: v for m, v in seq.items() if m % q == 0}
        deg = min(alg.dim + 1, len(sub) - 2)
        if deg >= 1 and len(sub) >= 3:
            return extrapolate(sub, degree=deg, window="all", check_degree=deg - 1)
    return extrapolate(seq)


def _exact_volume(alg, positive):
    prov = alg.provenance
    if prov is not None and hasattr(prov, "exact_volume"):
        return float(prov.exact_volume(positive=positive))
    return None


def arithmetic_volume(alg, M=None, transform=None):
    """vol̂ from deg₊ of the levels, with the integral side as reference.

    The reference is the exact piecewise-linear integral when the algebra
    carries a toric provenance, otherwise (d+1)!∫max(G, 0) of the pipeline.
    """
    M = M or alg.truncation
    ex = _volume_limit(alg, M, lambda w: float(w[w > 0].sum()), True)
    ct = transform or concave_transform(alg, M)
    pipe = factorial(alg.dim + 1) * ct.integral(positive_part=True)
    ref = _exact_volume(alg, True)
    return VolumeReport("vol_hat", max(ex.limit, 0.0), ex.error,
                        pipe if ref is None else ref, pipe)


def chi_volume(alg, M=None):
    """Extrapolated deg(V_m)(d+1)!/m^{d+1}."""
    M = M or alg.truncation
    ex = _volume_limit(alg, M, lambda w: float(w.sum()), False)
    return VolumeReport("vol_chi", ex.limit, ex.error, _exact_volume(alg, False))


def chi_volume_num(transform):
    """(d+1)!∫_Δ G."""
    return factorial(transform.dim + 1) * transform.integral()


@dataclass(frozen=True)
class AsymptoticSlopes:
    mu_max: float
    mu_min: float
    error_max: float
    error_min: float


def asymptotic_slopes(alg, M=None):
    M = M or alg.truncation
    top = {m: float(alg.weights(m).max()) / m for m in range(1, M + 1) if len(alg.weights(m))}
    bot = {m: float(alg.weights(m).min()) / m for m in range(1, M + 1) if len(alg.weights(m))}
    a, b = extrapolate(top), extrapolate(bot)
    return AsymptoticSlopes(a.limit, b.limit, a.error, b.error)


@dataclass(frozen=True)
class BignessResult:
    big: bool
    reason: str
    witness: tuple = None


def bigness_test(alg, M=None, transform=None, tol=None):
    """Big iff Δ is full dimensional and μ_max^asy > 0."""
    M = M or alg.truncation
    tol = 1.0 / M if tol is None else tol
    from .graded_okounkov import okounkov_body
    body = okounkov_body(alg.semigroup(), M)
    if not body.is_full:
        return BignessResult(False, f"Kodaira dimension {body.affine_dim} < {alg.dim}")
    slopes = asymptotic_slopes(alg, M)
    if slopes.mu_max <= tol:
        return BignessResult(False, f"mu_max_asy = {slopes.mu_max:.6g} <= {tol:.3g}")
    ct = transform or concave_transform(alg, M, grid=16)
    k = int(np.argmax(ct.grid_values))
    witness = tuple(float(c) for c in ct.grid[k]) if len(ct.grid) else None
    return BignessResult(True, f"mu_max_asy = {slopes.mu_max:.6g}", witness)


# ---------------------------------------------------------------- properties

@dataclass(frozen=True)
class PropertyCheck:
    name: str
    worst: float
    tolerance: float
    passed: bool


def _check(name, worst, tol):
    worst = float(worst)
    return PropertyCheck(name, worst, tol, bool(worst <= tol))


def _grid_points(ct, limit, seed=0):
    pts = list(ct.grid_exact)
    if len(pts) > limit:
        rng = random.Random(seed)
        pts = rng.sample(pts, limit)
    return pts


def property_suite(alg_a, alg_b=None, alpha=2, c=0.3, M=None, N=DEFAULT_FEKETE_DEPTH,
                   grid=16, pairs=200, seed=0):
    """Scaling, shifting, monotonicity, slope bounds, superadditivity and
    Brunn–Minkowski, each reported as (worst violation, tolerance).

    Checks that need to rebuild a divisor (scaling, sums, effective bumps)
    use the toric provenance of the algebras and are skipped without it.
    """
    M = M or alg_a.truncation
    slack = 3.0 / M
    ga = concave_transform(alg_a, M, N, grid)
    pts = _grid_points(ga, 400, seed)
    base = ga.evaluate(pts)
    out = []
    prov = alg_a.provenance

    if prov is not None and float(alpha).is_integer():
        alpha = int(alpha)
        top = M // alpha
        scaled = prov.scaled(alpha).algebra(top)
        gs = concave_transform(scaled, top, N, grid)
        gv = concave_transform(alg_a, M, N, grid, levels=range(alpha, alpha * top + 1, alpha))
        img = [tuple(alpha * x for x in p) for p in pts]
        exact = np.abs(gs.evaluate(img) - alpha * gv.evaluate(pts))
        out.append(_check("scaling_exact", np.nanmax(exact), 1e-9))
        approx = np.abs(gs.evaluate(img) - alpha * base)
        out.append(_check("scaling_truncation", np.nanmax(approx), alpha * 3.0 / top))

    shifted = prov.shifted(c).algebra(M) if prov is not None else alg_a.shifted(c)
    gc = concave_transform(shifted, M, N, grid)
    out.append(_check("shift", np.max(np.abs(gc.evaluate(pts) - base - c)), 1e-9))

    bump = prov.shifted(abs(c)).algebra(M) if prov is not None else alg_a.shifted(abs(c))
    worst = np.max(base - concave_transform(bump, M, N, grid).evaluate(pts))
    if prov is not None:
        bigger = prov.plus(prov.standard_effective()).algebra(M)
        worst = max(worst, np.max(base - concave_transform(bigger, M, N, grid).evaluate(pts)))
    out.append(_check("monotonicity", max(worst, 0.0), 1e-12))

    sl = asymptotic_slopes(alg_a, M)
    over = max(ga.sup - sl.mu_max, sl.mu_min - ga.inf, float(np.max(base)) - sl.mu_max, 0.0)
    out.append(_check("slope_bounds", over, slack))
    out.append(_check("sup_equals_mu_max", abs(ga.sup - sl.mu_max), slack))

    prov_b = alg_b.provenance if alg_b is not None else None
    if prov is not None and prov_b is not None:
        gb = concave_transform(alg_b, M, N, grid)
        total = prov.plus(prov_b)
        gsum = concave_transform(total.algebra(M), M, N, grid)
        rng = random.Random(seed + 1)
        pa, pb = list(ga.grid_exact), list(gb.grid_exact)
        sel = [(rng.choice(pa), rng.choice(pb)) for _ in range(pairs)]
        lhs = gsum.evaluate([tuple(x + y for x, y in zip(p, q)) for p, q in sel])
        rhs = ga.evaluate([p for p, _ in sel]) + gb.evaluate([q for _, q in sel])
        out.append(_check("superadditivity", max(float(np.max(rhs - lhs)), 0.0), slack))
        va = prov.exact_volume(positive=True)
        vb = prov_b.exact_volume(positive=True)
        vs = total.exact_volume(positive=True)
        if prov.is_big() and prov_b.is_big():
            e = 1.0 / (alg_a.dim + 1)
            gap = float(va) ** e + float(vb) ** e - float(vs) ** e
            out.append(_check("brunn_minkowski", max(gap, 0.0), 1e-12 * (1 + float(vs))))
    return out
