"""Command-line runner: ``oklab run`` over an instance file, ``oklab generate`` for templates.

Exit codes: 0 all hard checks pass, 1 a check failed, 2 the instance did
not parse, 3 an I/O error.
"""
import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import adelic_core as ac
from . import concave_transform as ct
from . import convex_geom as cg
from . import graded_okounkov as go
from . import toric_testbed as tt

SUITES = ("okounkov", "transform", "volumes", "toric", "metrics")


@dataclass(frozen=True)
class ExperimentConfig:
    instance: str
    suite: str = "all"
    truncation: int = None
    fekete_depth: int = ct.DEFAULT_FEKETE_DEPTH
    grid: int = ct.DEFAULT_GRID
    samples: int = 10_000
    seed: int = 42
    out: str = "oklab_out"

    def __post_init__(self):
        if self.suite not in SUITES + ("all",):
            raise ValueError(f"unknown suite {self.suite!r}")
        if self.truncation is not None and self.truncation < 4:
            raise ValueError("truncation must be >= 4")
        if self.grid < 8:
            raise ValueError("grid must be >= 8")
        if self.fekete_depth < 1 or self.samples < 1:
            raise ValueError("fekete depth and sample count must be positive")


@dataclass(frozen=True)
class Row:
    name: str
    estimate: float
    reference: float
    gap: float
    passed: bool


def _row(name, estimate, reference, gap, passed):
    return Row(name, float(estimate), None if reference is None else float(reference),
               float(gap), bool(passed))


class _Context:
    """Lazily shared per-run objects (algebra, transform) for the suites."""

    def __init__(self, inst, cfg):
        self.inst = inst
        self.div = inst.divisor
        self.cfg = cfg
        self.M = cfg.truncation or go.default_truncation(self.div.dim)
        self.alg = self.div.algebra(self.M)
        self.transform = ct.concave_transform(self.alg, self.M, cfg.fekete_depth, cfg.grid)


def _lipschitz(div):
    return max((sum(abs(float(c)) for c in g) * pl.weight
                for pl in div.curve.places if pl.label in div.roofs
                for g, _ in div.roofs[pl.label].pieces), default=0.0)


def suite_okounkov(cx):
    div, M = cx.div, cx.M
    gamma = cx.alg.semigroup()
    vg = go.volume_growth(gamma, M)
    ref = float(div.geometric_volume())
    rows = [_row("okounkov_volume", vg.limit, ref, abs(vg.limit - ref),
                 abs(vg.limit - ref) <= 0.01 * ref + vg.error)]
    body = go.okounkov_body(gamma, M)
    dh = cg.hausdorff_distance(body, div.polytope)
    rows.append(_row("okounkov_body_hausdorff", dh, 0.0, dh, dh <= 1e-12))
    rows.append(_row("okounkov_body_volume", float(vg.body_volume), ref,
                     abs(float(vg.body_volume) - ref), abs(float(vg.body_volume) - ref) <= 1e-12))
    return rows


def suite_transform(cx):
    div, M, T = cx.div, cx.M, cx.transform
    ref = tt.roof_transform(div)(T.grid)
    err = float(np.max(np.abs(T.grid_values - ref))) if len(ref) else 0.0
    tol = (div.dim * _lipschitz(div) + 1.0) / M
    rows = [_row("transform_sup_error", err, 0.0, err, err <= tol)]
    defect = ct.midpoint_concavity_defect(T)
    rows.append(_row("transform_concavity", defect, 0.0, defect, defect <= tol))
    viol = ct.superadditivity_violations(cx.alg, min(M, 12))
    rows.append(_row("filtration_superadditive", len(viol), 0, len(viol), not viol))
    mu = float(div.mu_max())
    rows.append(_row("transform_sup", T.sup, mu, abs(T.sup - mu), abs(T.sup - mu) <= 3.0 / M))
    nu = ct.jumping_measure(cx.alg, M)
    ks = ct.kolmogorov_distance(nu, T)
    ks_tol = 0.05 if div.dim == 1 else 0.15
    rows.append(_row("kolmogorov", ks, 0.0, ks, ks <= ks_tol))
    return rows


def suite_volumes(cx):
    div, M = cx.div, cx.M
    rows = []
    vh = ct.arithmetic_volume(cx.alg, M, cx.transform)
    rows.append(_row("vol_hat", vh.estimate, vh.reference_value, abs(vh.estimate - vh.reference_value),
                     vh.relative_gap <= 0.05 or abs(vh.estimate - vh.reference_value) <= 0.05))
    hs = tt.hilbert_samuel_check(div, M)
    rows.append(_row("hilbert_samuel", hs.degree_side, hs.integral_side, hs.relative_gap,
                     hs.relative_gap <= 0.05 or abs(hs.degree_side - hs.integral_side) <= 0.05))
    num = float(div.exact_volume(positive=False))
    rows.append(_row("vol_chi_le_num", hs.degree_side, num, max(hs.degree_side - num, 0.0),
                     hs.degree_side <= num + hs.error_bar + 1e-9))
    cl = tt.classical_volume(div, M)
    rows.append(_row("classical_le_adelic", cl.limit, vh.estimate, max(cl.limit - vh.estimate, 0.0),
                     cl.limit <= vh.estimate + cl.error + vh.error_bar + 1e-9))
    if div.curve.mode == ac.FUNCTION_FIELD:
        gap = abs(cl.limit - vh.estimate) / max(abs(vh.estimate), 1e-12)
        rows.append(_row("classical_eq_adelic", cl.limit, vh.estimate, gap, gap <= 0.05))
    inst = cx.inst
    if inst.boundary is not None and inst.epsilons:
        rows += _continuity_rows(cx)
    return rows


def _continuity_rows(cx):
    div, inst = cx.div, cx.inst
    eps = sorted((e for e in inst.epsilons if e > 0), reverse=True)
    fam = tt.boundary_family(div, inst.boundary, eps)
    base = float(div.exact_volume(positive=True))
    diffs = [abs(float(d.exact_volume(positive=True)) - base) for d in fam]
    C = max(d / float(e) for d, e in zip(diffs, eps)) if eps else 0.0
    shrinking = all(b <= a + 1e-12 for a, b in zip(diffs, diffs[1:]))
    rows = [_row("continuity_constant", C, None, diffs[-1] if diffs else 0.0,
                 bool(np.isfinite(C)) and shrinking)]
    pts = cx.transform.grid
    gd = tt.roof_transform(div)(pts)
    gaps = [float(np.max(np.abs(tt.roof_transform(d)(pts) - gd))) for d in fam]
    mono = all(b <= a + 1e-12 for a, b in zip(gaps, gaps[1:]))
    mono = mono and (not gaps or gaps[-1] <= 0.5 * gaps[0] or gaps[0] <= 1e-12)
    rows.append(_row("continuity_G", gaps[-1] if gaps else 0.0, 0.0,
                     gaps[-1] if gaps else 0.0, mono))
    return rows


def suite_toric(cx):
    div, cfg = cx.div, cx.cfg
    rows = []
    worst = 0.0
    for m in (1, 2, min(cx.M, 7)):
        for g in tt.lattice_points(div.polytope, m):
            worst = max(worst, tt.duality_residual(div, m, g))
    rows.append(_row("supnorm_duality", worst, 0.0, worst, worst <= 1e-9))
    if div.is_big():
        em = tt.essential_minimum_estimate(div, cfg.samples, cfg.seed)
        rows.append(_row("zhang", em.estimate, em.zhang_bound,
                         max(em.zhang_bound - em.estimate, 0.0), em.holds))
        rows.append(_row("essential_minimum_mu_max", em.estimate, em.mu_max,
                         abs(em.estimate - em.mu_max), em.estimate >= em.mu_max - 1e-6))
        h1 = tt.height_inequality_check(div, div.standard_effective(), cfg.samples, 1, cfg.seed)
        rows.append(_row("height_inequality_1", h1.epsilon, None, h1.violations, h1.violations == 0))
        h2 = tt.height_inequality_check(div, div, cfg.samples, 2, cfg.seed)
        rows.append(_row("height_inequality_2", h2.epsilon, h2.c, h2.violations, h2.violations == 0))
    return rows


def suite_metrics(cx):
    div = cx.div
    gamma = cx.alg.semigroup()
    js = list(range(1, min(cx.M, 12) + 1))
    bodies = [go.okounkov_body(gamma, j) for j in js]
    rep = go.body_convergence(bodies, div.polytope, grid=8)
    rows = [_row("hausdorff_symmetric_equivalence", rep.hausdorff[-1], 0.0,
                 rep.symmetric_difference[-1], rep.equivalence_holds)]
    d = div.dim
    simplex = cg.hull([(0,) * d] + [tuple(int(i == k) for k in range(d)) for i in range(d)])
    fam = [cg.scale(simplex, Fraction(j - 1, j)) if j > 1 else cg.empty_body(d)
           for j in range(1, 41)]
    fam = [b for b in fam if not b.is_empty]
    rep2 = go.body_convergence(fam, simplex, grid=8)
    bad = sum(1 for p, j in rep2.first_interior_index.items()
              if j is None or j + 1 != go.interior_index_oracle(p))
    rows.append(_row("interior_index", bad, 0, bad, bad == 0))
    return rows


SUITE_FUNCS = {"okounkov": suite_okounkov, "transform": suite_transform,
               "volumes": suite_volumes, "toric": suite_toric, "metrics": suite_metrics}


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    return repr(float(x))


def summary_csv(rows):
    lines = ["name,estimate,reference,gap,pass"]
    for r in rows:
        lines.append(",".join([r.name, _fmt(r.estimate), _fmt(r.reference), _fmt(r.gap), _fmt(r.passed)]))
    return "\n".join(lines) + "\n"


def measures_csv(cx):
    nu = ct.jumping_measure(cx.alg, cx.M)
    ref = cx.transform
    xs = sorted(set(nu.atoms) | {a for a, _ in ref.atoms()})
    lines = ["t,nu_m_cdf,pushforward_cdf"]
    for x in xs:
        lines.append(f"{x!r},{nu.cdf(x)!r},{ref.pushforward_cdf(x)!r}")
    return "\n".join(lines) + "\n"


def run(cfg):
    try:
        text = Path(cfg.instance).read_text()
    except OSError as exc:
        print(f"error: cannot read {cfg.instance}: {exc}", file=sys.stderr)
        return 3
    try:
        inst = tt.loads_instance(text)
    except tt.InstanceParseError as exc:
        print(f"{cfg.instance}:{exc.line}: {exc.msg}", file=sys.stderr)
        return 2
    try:
        cx = _Context(inst, cfg)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    names = SUITES if cfg.suite == "all" else (cfg.suite,)
    threads = max(1, int(os.environ.get("OKLAB_THREADS", "1") or 1))
    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(lambda n: SUITE_FUNCS[n](cx), names))
    rows = [r for rs in results for r in rs]
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.csv").write_text(summary_csv(rows))
        (out / "transform.csv").write_text(cx.transform.to_csv())
        (out / "measures.csv").write_text(measures_csv(cx))
    except OSError as exc:
        print(f"error: cannot write to {out}: {exc}", file=sys.stderr)
        return 3
    failed = [r.name for r in rows if not r.passed]
    for r in rows:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name} estimate={_fmt(r.estimate)} gap={_fmt(r.gap)}")
    return 1 if failed else 0


def generate(template, out, seed=42, epsilons=None):
    if template not in tt.TEMPLATES:
        raise ValueError(f"unknown template {template!r}; choose from {', '.join(tt.TEMPLATES)}")
    div = tt.TEMPLATES[template](seed)
    out = Path(out)
    if template != "boundary_family":
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(tt.dumps_instance(div))
        return [out]
    eps = [Fraction(e) for e in (epsilons or [Fraction(1, j) for j in range(1, 9)])]
    boundary = tt.unit_boundary(div)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "base.inst"]
    paths[0].write_text(tt.dumps_instance(div, boundary, eps))
    for k, d in enumerate(tt.boundary_family(div, boundary, eps), start=1):
        p = out / f"eps_{k:02d}.inst"
        p.write_text(f"# epsilon {eps[k - 1]}\n" + tt.dumps_instance(d))
        paths.append(p)
    return paths


def _run_parser(p):
    p.add_argument("--instance", required=True)
    p.add_argument("--suite", default="all", choices=SUITES + ("all",))
    p.add_argument("--truncation", type=int, default=None)
    p.add_argument("--fekete-depth", type=int, default=ct.DEFAULT_FEKETE_DEPTH)
    p.add_argument("--grid", type=int, default=ct.DEFAULT_GRID)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", default="oklab_out")


def build_parser():
    parser = argparse.ArgumentParser(prog="oklab")
    sub = parser.add_subparsers(dest="command", required=True)
    _run_parser(sub.add_parser("run", help="run check suites on an instance"))
    g = sub.add_parser("generate", help="write a template instance")
    g.add_argument("template", choices=sorted(tt.TEMPLATES))
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int, default=42)
    g.add_argument("--epsilons", nargs="*", default=None)
    return parser


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0].startswith("--") and argv[0] not in ("--help",):
        argv = ["run"] + argv
    args = build_parser().parse_args(argv)
    if args.command == "generate":
        try:
            paths = generate(args.template, args.out, args.seed, args.epsilons)
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 3
        for p in paths:
            print(p)
        return 0
    try:
        cfg = ExperimentConfig(args.instance, args.suite, args.truncation, args.fekete_depth,
                               args.grid, args.samples, args.seed, args.out)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
