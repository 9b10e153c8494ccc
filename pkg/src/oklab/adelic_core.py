"""Toy adelic curves and diagonal adelic vector bundles.

A bundle is a degree matrix ``deg[i, j] = -log ||e_i||_{w_j}`` (in nats) over
the places ``w_j`` of a curve.  The distinguished basis is orthogonal at every
place: Hermitian at archimedean places and ultrametric elsewhere, so
determinant norms factor and every invariant is a closed formula in the
matrix entries.
"""
import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

ARCHIMEDEAN = "archimedean"
NONARCHIMEDEAN = "nonarchimedean"
TRIVIAL = "trivial"
KINDS = (ARCHIMEDEAN, NONARCHIMEDEAN, TRIVIAL)

NUMBER_FIELD = "number_field_like"
FUNCTION_FIELD = "function_field_like"

TOL = 1e-12


@dataclass(frozen=True)
class Place:
    """A place with weight ``nu``.

    ``center`` identifies the place for evaluating absolute values: a prime
    ``p`` in number-field mode, a polynomial over F_q (coefficients from the
    constant term up) or ``None`` for the place at infinity in
    function-field mode.
    """
    label: str
    kind: str
    weight: float = 1.0
    value_group_step: float = None
    center: object = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown place kind {self.kind!r}")
        if self.weight < 0:
            raise ValueError("place weight must be >= 0")
        if self.value_group_step is not None and self.value_group_step <= 0:
            raise ValueError("value_group_step must be positive")


@dataclass(frozen=True)
class AdelicCurve:
    places: tuple
    mode: str = NUMBER_FIELD
    q: int = None

    def __post_init__(self):
        if self.mode not in (NUMBER_FIELD, FUNCTION_FIELD):
            raise ValueError(f"unknown curve mode {self.mode!r}")
        labels = [p.label for p in self.places]
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate place labels")
        if self.mode == FUNCTION_FIELD and any(p.kind == ARCHIMEDEAN for p in self.places):
            raise ValueError("function-field curves have no archimedean places")

    @property
    def weights(self):
        return np.array([p.weight for p in self.places], dtype=float)

    @property
    def labels(self):
        return [p.label for p in self.places]

    def index(self, label):
        return self.labels.index(label)


def rational_curve(primes=(2, 3), archimedean=True):
    """Q-like curve: the given primes plus (optionally) the real place."""
    places = [Place(str(p), NONARCHIMEDEAN, 1.0, math.log(p), p) for p in primes]
    if archimedean:
        places.append(Place("inf", ARCHIMEDEAN, 1.0))
    return AdelicCurve(tuple(places), NUMBER_FIELD)


def function_field_curve(q, polys=((0, 1),), infinity=True):
    """F_q(t)-like curve with places at irreducible ``polys`` and at infinity.

    A finite place P has weight deg P; every place has value group step log q.
    Only prime q is supported.
    """
    step = math.log(q)
    places = []
    for poly in polys:
        poly = _strip(tuple(c % q for c in poly))
        places.append(Place(_poly_label(poly), NONARCHIMEDEAN, float(len(poly) - 1), step, poly))
    if infinity:
        places.append(Place("inf", NONARCHIMEDEAN, 1.0, step, None))
    return AdelicCurve(tuple(places), FUNCTION_FIELD, q)


# ---------------------------------------------------------------- product formula

def _strip(poly):
    poly = list(poly)
    while poly and poly[-1] == 0:
        poly.pop()
    return tuple(poly)


def _poly_label(poly):
    terms = []
    for k in range(len(poly) - 1, -1, -1):
        c = poly[k]
        if not c:
            continue
        mono = "" if k == 0 else ("t" if k == 1 else f"t^{k}")
        coef = "" if c == 1 and k > 0 else str(c)
        terms.append(coef + mono)
    return "+".join(terms) or "0"


def _poly_divmod(a, b, p):
    a = list(a)
    b = _strip(b)
    inv = pow(b[-1], p - 2, p)
    quot = [0] * max(len(a) - len(b) + 1, 1)
    while len(_strip(a)) >= len(b):
        a = list(_strip(a))
        shift = len(a) - len(b)
        c = a[-1] * inv % p
        quot[shift] = c
        for k, bk in enumerate(b):
            a[k + shift] = (a[k + shift] - c * bk) % p
    return _strip(quot), _strip(a)


def _poly_valuation(f, poly, p):
    f = _strip(tuple(c % p for c in f))
    if not f:
        raise ValueError("zero polynomial has no valuation")
    v = 0
    while True:
        qt, r = _poly_divmod(f, poly, p)
        if r:
            return v
        f, v = qt, v + 1


def _int_valuation(n, p):
    n = abs(n)
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def _rat_valuation(a, p):
    return _int_valuation(a.numerator, p) - _int_valuation(a.denominator, p)


def product_formula_residual(curve, a):
    """Σ_w nu(w) log|a|_w over the places of the curve.

    ``a`` is a nonzero rational in number-field mode and a pair
    ``(numerator, denominator)`` of coefficient sequences in function-field
    mode.
    """
    if curve.mode == NUMBER_FIELD:
        a = Fraction(a)
        if a == 0:
            raise ValueError("a must be nonzero")
        total = 0.0
        for pl in curve.places:
            if pl.kind == ARCHIMEDEAN:
                total += pl.weight * math.log(abs(a))
            elif pl.kind == NONARCHIMEDEAN:
                total -= pl.weight * _rat_valuation(a, pl.center) * pl.value_group_step
        return total
    num, den = a
    p = curve.q
    num, den = _strip(tuple(c % p for c in num)), _strip(tuple(c % p for c in den))
    if not num or not den:
        raise ValueError("a must be a nonzero rational function")
    # work with integers until the end so that the sum is exact
    weighted = Fraction(0)
    for pl in curve.places:
        if pl.kind != NONARCHIMEDEAN:
            continue
        if pl.center is None:
            v = (len(den) - 1) - (len(num) - 1)
        else:
            v = _poly_valuation(num, pl.center, p) - _poly_valuation(den, pl.center, p)
        weighted += Fraction(pl.weight) * v
    return 0.0 if weighted == 0 else -float(weighted) * math.log(p)


# ---------------------------------------------------------------- bundles

@dataclass(frozen=True, eq=False)
class DiagonalAdelicBundle:
    curve: AdelicCurve
    degrees: np.ndarray
    basis_labels: tuple = field(default=None)

    def __post_init__(self):
        deg = np.array(self.degrees, dtype=float).reshape(-1, len(self.curve.places))
        for j, pl in enumerate(self.curve.places):
            if pl.kind == TRIVIAL and np.any(deg[:, j] != 0):
                raise ValueError(f"nonzero degree at trivial place {pl.label}")
        deg.setflags(write=False)
        object.__setattr__(self, "degrees", deg)
        labels = self.basis_labels
        if labels is None:
            labels = tuple(f"e{i}" for i in range(deg.shape[0]))
        if len(labels) != deg.shape[0]:
            raise ValueError("one basis label per row required")
        object.__setattr__(self, "basis_labels", tuple(labels))

    @property
    def rank(self):
        return self.degrees.shape[0]

    @property
    def ultrametric_flags(self):
        return tuple(pl.kind != ARCHIMEDEAN for pl in self.curve.places)

    def totals(self):
        """Per-basis-vector degrees Σ_w nu(w) deg[i, w]."""
        return self.degrees @ self.curve.weights


def bundle(curve, degrees, labels=None):
    return DiagonalAdelicBundle(curve, np.asarray(degrees, dtype=float), labels)


def zero_bundle(curve):
    return DiagonalAdelicBundle(curve, np.zeros((0, len(curve.places))))


@dataclass(frozen=True)
class SlopeProfile:
    jumping_numbers: tuple
    degree: float
    positive_degree: float
    mu_max: float
    mu_min: float


def arakelov_degree(b):
    # fsum is exactly rounded, so the result does not depend on row order
    return math.fsum(b.totals())


def positive_degree(b):
    t = b.totals()
    return float(t[t > 0].sum())


def hn_slopes(b):
    mus = tuple(sorted((float(x) for x in b.totals()), reverse=True))
    return SlopeProfile(
        jumping_numbers=mus,
        degree=math.fsum(mus),
        positive_degree=float(sum(m for m in mus if m > 0)),
        mu_max=mus[0] if mus else -math.inf,
        mu_min=mus[-1] if mus else math.inf,
    )


# ---------------------------------------------------------------- purification

def _steps(curve, deg):
    steps = []
    for j, pl in enumerate(curve.places):
        if pl.kind == NONARCHIMEDEAN and np.any(deg[:, j] != 0) and pl.value_group_step is None:
            raise ValueError(f"place {pl.label} has no discrete value group")
        steps.append(pl.value_group_step)
    return steps


def _floor_steps(x, step):
    return np.floor(x / step + TOL)


def purify(b, curve=None):
    """Unit-ball purification: nonarchimedean entries drop to step multiples."""
    curve = curve or b.curve
    deg = np.array(b.degrees, dtype=float)
    for j, (pl, step) in enumerate(zip(curve.places, _steps(curve, deg))):
        if pl.kind == NONARCHIMEDEAN and step is not None:
            deg[:, j] = step * _floor_steps(deg[:, j], step)
        elif pl.kind == TRIVIAL:
            deg[:, j] = 0.0
    return DiagonalAdelicBundle(curve, deg, b.basis_labels)


def impurity(b, curve=None):
    """σ = Σ_w nu(w) max_i (deg[i, w] - deg_pur[i, w]); zero iff pure."""
    curve = curve or b.curve
    if b.rank == 0:
        return 0.0
    gap = b.degrees - purify(b, curve).degrees
    per_place = np.where(np.abs(gap) < TOL, 0.0, gap).max(axis=0)
    return float(per_place @ curve.weights)


def is_pure(b, curve=None):
    return impurity(b, curve) == 0.0


# ---------------------------------------------------------------- small sections

def _check_finite(b):
    if not np.all(np.isfinite(b.degrees)):
        raise ValueError("non-finite degree: small-section set is unbounded")


def small_sections_count(b, curve=None):
    """Size of the small-section set per basis direction.

    Function-field mode returns k-dimensions of H^0 on P^1 for the divisor
    Σ_P floor(deg/step) P; number-field mode returns lattice point counts in
    the axis-aligned adelic box.
    """
    curve = curve or b.curve
    _check_finite(b)
    pur = purify(b, curve).degrees
    w = curve.weights
    kinds = [pl.kind for pl in curve.places]
    if curve.mode == FUNCTION_FIELD:
        out = []
        for row in pur:
            div = 0.0
            for j, pl in enumerate(curve.places):
                if kinds[j] == NONARCHIMEDEAN:
                    div += w[j] * round(row[j] / pl.value_group_step)
            out.append(max(0, int(round(div)) + 1))
        return out
    if ARCHIMEDEAN not in kinds:
        raise ValueError("number-field mode without an archimedean place: "
                         "small-section set is unbounded")
    out = []
    for row in pur:
        radius = math.exp(float(row @ w))
        out.append(2 * math.floor(radius + 1e-9) + 1)
    return out


def small_sections_h0(b, curve=None):
    """ĥ⁰ in nats: dim·log q (function field) or log #sections (number field)."""
    curve = curve or b.curve
    counts = small_sections_count(b, curve)
    if curve.mode == FUNCTION_FIELD:
        return float(sum(counts)) * math.log(curve.q)
    return float(sum(math.log(c) for c in counts))


def euler_characteristic(b, curve=None):
    """χ from the unit-ball lattice.

    Function-field mode: Σ_i Σ_w nu(w) deg_pur[i, w].  Number-field mode adds
    the Haar volume of the archimedean box [-1, 1]^n, i.e. n·log 2 per unit of
    archimedean weight.
    """
    curve = curve or b.curve
    _check_finite(b)
    pur = purify(b, curve)
    chi = arakelov_degree(pur)
    if curve.mode == NUMBER_FIELD:
        arch = sum(pl.weight for pl in curve.places if pl.kind == ARCHIMEDEAN)
        chi += arch * b.rank * math.log(2)
    return chi


# ---------------------------------------------------------------- combinators

def psi_direct_sum(a, b):
    """Direct sum with norm max(||x||, ||y||) at every place."""
    if a.curve != b.curve:
        raise ValueError("bundles live on different curves")
    return DiagonalAdelicBundle(
        a.curve, np.vstack([a.degrees, b.degrees]), a.basis_labels + b.basis_labels)


def tensor(a, b):
    if a.curve != b.curve:
        raise ValueError("bundles live on different curves")
    rows = [ra + rb for ra in a.degrees for rb in b.degrees]
    labels = [f"{x}*{y}" for x in a.basis_labels for y in b.basis_labels]
    return DiagonalAdelicBundle(a.curve, np.array(rows).reshape(-1, len(a.curve.places)), labels)


@dataclass(frozen=True)
class TensorSlopeReport:
    mu_min_tensor: float
    mu_min_a: float
    mu_min_b: float
    defect: float
    bound: float
    holds: bool


def tensor_slope_check(a, b, c0=0.0):
    t = tensor(a, b)
    ma, mb, mt = hn_slopes(a).mu_min, hn_slopes(b).mu_min, hn_slopes(t).mu_min
    defect = mt - ma - mb
    if abs(defect) < TOL * max(1.0, abs(mt)):
        defect = 0.0
    n = max(a.rank * b.rank, 1)
    bound = -c0 * math.log(n) if n > 1 else 0.0
    return TensorSlopeReport(mt, ma, mb, defect, bound, defect >= bound - TOL)


# ---------------------------------------------------------------- CSV

def degrees_to_csv(b):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["basis", "place", "degree"])
    for label, row in zip(b.basis_labels, b.degrees):
        for pl, x in zip(b.curve.places, row):
            w.writerow([label, pl.label, repr(float(x))])
    return buf.getvalue()


def degrees_from_csv(text, curve):
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["basis", "place", "degree"]:
        raise ValueError("line 1: expected header basis,place,degree")
    labels, entries = [], {}
    for k, row in enumerate(rows[1:], start=2):
        if len(row) != 3:
            raise ValueError(f"line {k}: expected 3 fields")
        label, place, value = row
        if label not in labels:
            labels.append(label)
        try:
            j = curve.index(place)
        except ValueError:
            raise ValueError(f"line {k}: unknown place {place!r}") from None
        entries[(label, j)] = float(value)
    deg = np.zeros((len(labels), len(curve.places)))
    for (label, j), x in entries.items():
        deg[labels.index(label), j] = x
    return DiagonalAdelicBundle(curve, deg, tuple(labels))
