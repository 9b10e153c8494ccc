"""Graded semigroups of valuation vectors and their Okounkov bodies."""
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

from . import convex_geom as cg
from .extrapolate import extrapolate

DEFAULT_TRUNCATION = {1: 60, 2: 40, 3: 16}


def default_truncation(d):
    return DEFAULT_TRUNCATION.get(d, 16)


@dataclass(frozen=True)
class FlagSpec:
    dim: int
    order: tuple = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("flag dimension must be >= 1")
        order = tuple(range(self.dim)) if self.order is None else tuple(self.order)
        if sorted(order) != list(range(self.dim)):
            raise ValueError("order must be a permutation of the variables")
        object.__setattr__(self, "order", order)

    def key(self, gamma):
        return tuple(gamma[i] for i in self.order)


def lex_valuation(exponents, flag=None):
    """Lexicographically smallest exponent vector of a nonzero polynomial."""
    exps = [tuple(e) for e in exponents]
    if not exps:
        raise ValueError("the zero polynomial has no valuation")
    flag = flag or FlagSpec(len(exps[0]))
    return min(exps, key=flag.key)


@dataclass
class GradedSemigroup:
    """Levels m -> set of valuation vectors, with Γ_0 = {0}."""
    dim: int
    levels: dict
    generators: tuple = field(default=())

    def __post_init__(self):
        self.levels = {m: frozenset(tuple(g) for g in pts) for m, pts in self.levels.items()}
        self.levels[0] = frozenset([(0,) * self.dim])

    @property
    def truncation(self):
        return max(self.levels)

    def level(self, m):
        return self.levels.get(m, frozenset())


def generate(generators, M):
    """All sums of generators (m_i, γ_i) of total level <= M."""
    if M < 1:
        raise ValueError("truncation must be >= 1")
    gens = [(int(m), tuple(int(x) for x in g)) for m, g in generators]
    if not gens:
        raise ValueError("need at least one generator")
    if any(m < 1 for m, _ in gens):
        raise ValueError("generators must sit at levels >= 1")
    d = len(gens[0][1])
    levels = {0: {(0,) * d}}
    for m in range(1, M + 1):
        cur = set()
        for k, g in gens:
            if k <= m:
                for base in levels.get(m - k, ()):
                    cur.add(tuple(a + b for a, b in zip(base, g)))
        levels[m] = cur
    return GradedSemigroup(d, levels, tuple(gens))


def _levels_upto(gamma, M):
    return [m for m in sorted(gamma.levels) if 1 <= m <= M and gamma.levels[m]]


def okounkov_body(gamma, M=None):
    """Hull of the union of Γ_m/m over 1 <= m <= M."""
    M = gamma.truncation if M is None else M
    ms = _levels_upto(gamma, M)
    if not ms:
        raise ValueError("all levels up to the truncation are empty")
    pts = []
    for m in ms:
        level_hull = cg.hull(list(gamma.levels[m]))
        pts.extend(tuple(Fraction(c, 1) / m for c in v) for v in level_hull.vertices)
    return cg.hull(pts)


@dataclass(frozen=True)
class VolumeGrowth:
    sequence: dict
    limit: float
    error: float
    body_volume: Fraction
    kodaira_dimension: int
    dim: int

    @property
    def is_big(self):
        return self.kodaira_dimension == self.dim


def volume_growth(gamma, M=None):
    """Sequence |Γ_m|·d!/m^d, its extrapolated limit and d!·vol(Δ_M).

    When the body is lower dimensional the limit is ``None`` and the Kodaira
    dimension (affine dimension of Δ) is reported instead.
    """
    M = gamma.truncation if M is None else M
    d = gamma.dim
    body = okounkov_body(gamma, M)
    kod = body.affine_dim
    seq = {m: len(gamma.levels[m]) * factorial(d) / m ** d for m in _levels_upto(gamma, M)}
    if kod < d:
        return VolumeGrowth(seq, None, None, Fraction(0), kod, d)
    ex = extrapolate(seq)
    return VolumeGrowth(seq, ex.limit, ex.error, factorial(d) * cg.volume(body), kod, d)


@dataclass(frozen=True)
class ConvergenceReport:
    hausdorff: tuple
    symmetric_difference: tuple
    direction: str
    target_contained: bool
    intersection_gap: float
    first_interior_index: dict
    coverage: float
    equivalence_holds: bool


def _monotone(bodies):
    def inside(a, b):
        return all(cg.contains(b, v) for v in a.vertices)
    pairs = list(zip(bodies, bodies[1:]))
    if all(inside(b, a) for a, b in pairs):
        return "decreasing"
    if all(inside(a, b) for a, b in pairs):
        return "increasing"
    return "none"


def interior_grid(body, n):
    """Points of a uniform n-per-axis grid (cell midpoints) inside body°."""
    lo = [min(v[i] for v in body.vertices) for i in range(body.dim)]
    hi = [max(v[i] for v in body.vertices) for i in range(body.dim)]
    axes = [[lo[i] + (hi[i] - lo[i]) * Fraction(2 * k + 1, 2 * n) for k in range(n)]
            for i in range(body.dim)]
    out = [()]
    for ax in axes:
        out = [p + (x,) for p in out for x in ax]
    return [p for p in out if cg.contains(body, p, interior_only=True)]


def body_convergence(bodies, target, grid=8, tol=1e-9):
    """d_H and d_S of each body to the target, plus monotone-family checks.

    Decreasing families: the target must lie in every body, and
    ``intersection_gap`` is d_S(∩ B_j, target).  Increasing families: each
    grid point of target° gets the first index j with the point in B_j°.
    """
    bodies = list(bodies)
    dh = tuple(cg.hausdorff_distance(b, target) for b in bodies)
    ds = tuple(float(cg.symmetric_difference_distance(b, target)) for b in bodies)
    direction = _monotone(bodies) if len(bodies) > 1 else "none"
    contained = all(all(cg.contains(b, v) for v in target.vertices) for b in bodies)
    gap = None
    if direction == "decreasing":
        inter = bodies[0]
        for b in bodies[1:]:
            inter = cg.intersection(inter, b)
        gap = float(cg.symmetric_difference_distance(inter, target))
    first, coverage = {}, None
    if target.is_full:
        pts = interior_grid(target, grid)
        for p in pts:
            first[p] = next((j for j, b in enumerate(bodies, start=1)
                             if cg.contains(b, p, interior_only=True)), None)
        coverage = sum(v is not None for v in first.values()) / len(pts) if pts else 1.0
    agree = _tends_to_zero(dh, tol) == _tends_to_zero(ds, tol)
    return ConvergenceReport(dh, ds, direction, contained, gap, first, coverage, agree)


def _tends_to_zero(seq, tol):
    # finite-sequence proxy: already ~0, or a nonincreasing tail that has
    # at least halved from the start of the sequence
    if seq[-1] <= tol:
        return True
    tail = seq[len(seq) // 2:]
    steady = all(b <= a + tol for a, b in zip(tail, tail[1:]))
    return len(seq) > 1 and steady and seq[-1] <= 0.5 * seq[0]


def interior_index_oracle(p):
    """First j with p in ((1 - 1/j)·simplex)°: the least integer j > 1/(1 - Σp)."""
    s = sum(Fraction(c) for c in p)
    return int(1 / (1 - s)) + 1


# ---------------------------------------------------------------- text format

def dumps(gamma):
    lines = []
    for m in sorted(gamma.levels):
        pts = " ".join(",".join(str(c) for c in g) for g in sorted(gamma.levels[m]))
        lines.append(f"{m}: {pts}".rstrip())
    return "\n".join(lines) + "\n"


def loads(text):
    levels, d = {}, None
    for k, ln in enumerate(text.splitlines(), start=1):
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        head, sep, rest = ln.partition(":")
        if not sep:
            raise ValueError(f"line {k}: expected 'm: γ1 γ2 ...'")
        try:
            m = int(head)
            pts = [tuple(int(x) for x in tok.split(",")) for tok in rest.split()]
        except ValueError:
            raise ValueError(f"line {k}: bad integer") from None
        for p in pts:
            if d is None:
                d = len(p)
            elif len(p) != d:
                raise ValueError(f"line {k}: dimension mismatch")
        levels[m] = pts
    if d is None:
        raise ValueError("no valuation vectors found")
    return GradedSemigroup(d, levels)
