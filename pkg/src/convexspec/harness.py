"""Experiment campaigns and the command-line entry point.

Commands: mu (planar eigenvalues), sl (weighted 1-D eigenvalues), kroger
(bound table with constructive cross-checks), constant (the explicit-bound
pipeline report), sharpness (triangle sweep and log-log slope of the
deficit), verify (symmetric-domain bound margins), estimate-c (empirical
deficit constants over domain families).  Outputs are JSON or CSV with a
schema field; runs are deterministic for a fixed seed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import ConvexHull

from . import __version__
from .explicit_bound import EXPLICIT_CONSTANT, explicit_constant, tau_optimality, verify_symmetric_bound
from .fem2d import THIN_ASPECT, neumann_eigs, neumann_eigs_extrapolated, neumann_eigs_thin
from .geometry import ConvexPolygon, diameter, flatness, load_polygon, make_triangle, regular_polygon, width_orthogonal
from .specfun import bessel_zero
from .sturm import ProfileWeight, kroger_bound, maximizer_profile, optimize_peak, optimize_trapezoid, sl_eigs

SCHEMA = 1

__all__ = [
    "ExperimentConfig",
    "SweepRow",
    "SharpnessResult",
    "CEstimate",
    "sharpness_sweep",
    "estimate_c",
    "kroger_table",
    "run",
    "main",
    "random_convex_polygon",
    "random_symmetric_trapezoid",
    "lens_polygon",
    "superequilateral_triangle",
]


# ---------------------------------------------------------------------------
# domain families

def superequilateral_triangle(alpha: float) -> ConvexPolygon:
    """T_alpha scaled so the base (its diameter for alpha > pi/3) has length 1."""
    if not (math.pi / 3 < alpha < math.pi):
        raise ValueError(f"superequilateral aperture needed, got {alpha}")
    return make_triangle(alpha, 1.0 / (2.0 * math.sin(alpha / 2)))


def random_convex_polygon(rng: np.random.Generator, n_points: int = 12, aspect: float = 1.0) -> ConvexPolygon:
    """Convex hull of n uniform points in a 1 x aspect rectangle."""
    for _ in range(64):
        pts = rng.uniform(0.0, 1.0, (n_points, 2)) * np.array([1.0, aspect])
        try:
            hull = ConvexHull(pts)
            return ConvexPolygon(pts[hull.vertices])
        except Exception:
            continue
    raise RuntimeError("failed to draw a convex polygon")


def random_symmetric_trapezoid(rng: np.random.Generator) -> ConvexPolygon:
    """Symmetric trapezoid with diameter exactly the unit base segment."""
    t = rng.uniform(0.08, 0.85)
    ymax = math.sqrt(max(1e-12, 1.0 - (1.0 + t) ** 2 / 4.0))
    y = ymax * rng.uniform(0.3, 0.95)
    return ConvexPolygon([[0.0, 0.0], [1.0, 0.0], [(1 + t) / 2, y], [(1 - t) / 2, y]])


def lens_polygon(sagitta: float, n_arc: int = 64) -> ConvexPolygon:
    """Symmetric lens (two reflected circular caps) over the unit segment."""
    if not (0 < sagitta < 0.5):
        raise ValueError("sagitta must lie in (0, 0.5)")
    R = (0.25 + sagitta**2) / (2 * sagitta)
    c = np.array([0.5, sagitta - R])
    th0 = math.atan2(-c[1], -c[0])
    th1 = math.atan2(-c[1], 1.0 - c[0])
    th = np.linspace(th0, th1, n_arc)
    upper = c + R * np.stack([np.cos(th), np.sin(th)], axis=1)
    lower = upper[::-1] * np.array([1.0, -1.0])
    verts = np.concatenate([lower[:-1], upper[:-1]])
    return ConvexPolygon(verts[::-1])


# ---------------------------------------------------------------------------
# sweep rows

@dataclass(frozen=True)
class SweepRow:
    domain_id: str
    D: float
    w: float
    a2: float
    mu_k: float
    mu_upper: float
    deficit: float
    deficit_a2: float
    deficit_w: float

    def to_json(self) -> dict:
        return {
            "domain": self.domain_id,
            "D": self.D,
            "w": self.w,
            "a2": self.a2,
            "mu_k": self.mu_k,
            "mu_upper": self.mu_upper,
            "deficit": self.deficit,
            "deficit_a2": self.deficit_a2,
            "deficit_w": self.deficit_w,
        }


def _eigen_row(domain_id, poly, k, h_target, bound, with_a2=True):
    """One sweep row: accurate mu_k plus a conforming upper bound.

    The deficit uses the Richardson-extrapolated eigenvalue; mu_upper keeps
    the fine-level conforming value whose excess only strengthens any
    strict-inequality certificate.
    """
    fl = flatness(poly) if with_a2 else None
    info = diameter(poly)
    w = width_orthogonal(poly, info.direction)
    D = info.length
    extr, fine = neumann_eigs_extrapolated(poly, k, h_target)
    mu = float(extr[k])
    deficit = bound - mu * D * D
    return SweepRow(
        domain_id,
        D,
        w,
        fl.a2 if fl else float("nan"),
        mu,
        float(fine.values[k]),
        deficit,
        deficit * D * D / fl.a2**2 if fl else float("nan"),
        deficit * D * D / (w * w),
    )


@dataclass(frozen=True)
class SharpnessResult:
    rows: list
    slope: float
    fit_window: tuple
    violations: list


def sharpness_sweep(alphas, h_target: float = 0.015, fit_lo: float = 0.02, fit_hi: float = 0.2) -> SharpnessResult:
    """Triangle sweep: deficit of mu_1 T_alpha against the sharp bound.

    Each row asserts the two-sided sandwich sin^2(a/2) <= mu_1 D^2/(4 j01^2)
    < 1; the least-squares slope of log(deficit) against log(w) is fitted
    inside [fit_lo, fit_hi], the window where the quadratic regime holds and
    the discretization floor stays negligible.
    """
    j01sq4 = 4.0 * bessel_zero(0, 1) ** 2
    rows = []
    violations = []
    for alpha in alphas:
        T = superequilateral_triangle(alpha)
        row = _eigen_row(f"talpha:{alpha / math.pi:.6f}pi", T, 1, h_target, j01sq4, with_a2=True)
        rows.append(row)
        lower = math.sin(alpha / 2) ** 2
        ratio = row.mu_k * row.D**2 / j01sq4
        ratio_upper = row.mu_upper * row.D**2 / j01sq4
        if not (lower <= ratio_upper and ratio < 1.0):
            violations.append(
                {"domain": row.domain_id, "check": "laugesen-sandwich", "ratio": ratio, "lower": lower}
            )
        if row.deficit <= 0:
            violations.append({"domain": row.domain_id, "check": "deficit-positive", "deficit": row.deficit})
    ws = np.array([r.w for r in rows])
    ds = np.array([r.deficit for r in rows])
    sel = (ws >= fit_lo) & (ws <= fit_hi) & (ds > 0)
    if np.count_nonzero(sel) < 3:
        raise ValueError("need at least 3 sweep points inside the fit window")
    slope = float(np.polyfit(np.log(ws[sel]), np.log(ds[sel]), 1)[0])
    return SharpnessResult(rows, slope, (fit_lo, fit_hi), violations)


@dataclass(frozen=True)
class CEstimate:
    c_empirical: float
    argmin_domain: str
    c_w_normalized: float
    rows: list
    violations: list


def _family_domains(family: str, n: int, rng: np.random.Generator):
    if family == "mixed":
        n_tri = max(1, n // 4)
        for i in range(n_tri):
            alpha = math.pi * (0.45 + 0.5 * (i + 0.5) / n_tri)
            yield f"talpha:{alpha / math.pi:.4f}pi", superequilateral_triangle(alpha)
        for i in range(n - n_tri):
            aspect = float(rng.uniform(0.25, 1.0))
            yield f"hull:{i}", random_convex_polygon(rng, 12, aspect)
    elif family == "symmetric":
        for i in range(n):
            yield f"trapezoid:{i}", random_symmetric_trapezoid(rng)
    elif family == "thin-triangles":
        for i in range(n):
            w = 0.03 + (0.12 - 0.03) * i / max(1, n - 1)
            alpha = 2.0 * math.atan(1.0 / (2.0 * w))
            yield f"talpha:{alpha / math.pi:.4f}pi", superequilateral_triangle(alpha)
    else:
        raise ValueError(f"unknown family {family!r}")


def estimate_c(k: int, family: str, n: int, h_target: float = 0.02, seed: int = 0) -> CEstimate:
    """Empirical deficit constants over a domain family.

    c_empirical is the smallest a2-normalized deficit (the constant of the
    main quantitative inequality); c_w_normalized is the width-normalized
    analogue comparable against the explicit symmetric-case constant.
    """
    rng = np.random.default_rng(seed)
    bound = kroger_bound(k, 2)
    rows = []
    violations = []
    for domain_id, poly in _family_domains(family, n, rng):
        row = _eigen_row(domain_id, poly, k, h_target, bound)
        rows.append(row)
        if row.deficit <= 0:
            violations.append({"domain": domain_id, "check": "deficit-positive", "deficit": row.deficit})
        if row.deficit_a2 <= 0:
            violations.append({"domain": domain_id, "check": "normalized-deficit-positive"})
    best = min(rows, key=lambda r: r.deficit_a2)
    c_w = min(r.deficit_w for r in rows)
    return CEstimate(best.deficit_a2, best.domain_id, c_w, rows, violations)


def kroger_table(k_max: int, d_max: int, n_elems: int = 2048, check: bool = True):
    """Table of mu*_{k,d} with constructive cross-checks.

    The check solves the weighted problem on a searched maximizing profile:
    the tent for k = 1, golden-section trapezoids for d = 2, golden-section
    peak profiles for d >= 4 (whose optimum is the tent for odd k and the
    asymmetric Bessel-phase peak for even k).  d = 3 has a non-unique
    multi-segment maximizer family for k >= 2 and is checked for k = 1 only.
    """
    rows = []
    for d in range(2, d_max + 1):
        for k in range(1, k_max + 1):
            bound = kroger_bound(k, d)
            mu = rel = None
            if check and (k == 1 or d != 3):
                if k == 1:
                    w = maximizer_profile(1, d)
                elif d == 2:
                    plateau = optimize_trapezoid(k, d, n_elems=min(n_elems, 512)).plateau
                    w = maximizer_profile(k, d, plateau=plateau)
                else:
                    peak = optimize_peak(k, d, n_elems=min(n_elems, 512)).peak
                    w = ProfileWeight(np.array([0.0, peak, 1.0]), np.array([0.0, 1.0, 0.0]), d)
                mu = float(sl_eigs(w, k, n_elems).values[k])
                rel = abs(mu - bound) / bound
            rows.append({"k": k, "d": d, "bound": bound, "mu_check": mu, "rel_err": rel})
    return rows


# ---------------------------------------------------------------------------
# experiment configuration and dispatch

@dataclass
class ExperimentConfig:
    command: str
    k: int = 1
    d: int = 2
    h: float = 0.02
    n_elems: int = 1024
    alpha_min: float = 0.76 * math.pi
    alpha_max: float = 0.975 * math.pi
    alpha_steps: int = 12
    alpha: float | None = None
    n: int = 50
    seed: int = 0
    out: str | None = None
    format: str = "json"
    poly: str | None = None
    builtin: str | None = None
    weight: str | None = None
    family: str = "mixed"
    k_max: int = 5
    d_max: int = 5
    check: bool = True
    plateau: float | None = None
    tent: bool = False
    symmetric: bool = False

    def __post_init__(self):
        if self.command in ("sharpness",):
            if not (math.pi / 3 < self.alpha_min < self.alpha_max < math.pi):
                raise ValueError("alpha range must satisfy pi/3 < alpha_min < alpha_max < pi")
        if self.k < 1:
            raise ValueError("k must be >= 1")


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return "" if x is None else str(x)


def _emit(cfg: ExperimentConfig, payload: dict, csv_rows=None, csv_header=None) -> None:
    payload = {"schema": SCHEMA, "command": cfg.command, **payload}
    if cfg.format == "csv" and csv_rows is not None:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(csv_header)
        for row in csv_rows:
            writer.writerow([_fmt(v) for v in row])
        text = buf.getvalue()
    else:
        text = json.dumps(payload, indent=2, default=float) + "\n"
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_domain(cfg: ExperimentConfig) -> ConvexPolygon:
    if cfg.poly:
        return load_polygon(cfg.poly)
    if cfg.builtin == "unit-square":
        return ConvexPolygon([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    if cfg.builtin == "disk256":
        return regular_polygon(256)
    if cfg.alpha is not None:
        return superequilateral_triangle(cfg.alpha)
    raise ValueError("no domain given: use --poly, --builtin or --alpha")


def _run_mu(cfg: ExperimentConfig):
    poly = _load_domain(cfg)
    info = diameter(poly)
    w = width_orthogonal(poly, info.direction)
    if w / info.length < THIN_ASPECT:
        res = neumann_eigs_thin(poly, cfg.k, cfg.h)
        path = "thin"
    else:
        res = neumann_eigs(poly, cfg.k, cfg.h)
        path = "isotropic"
    payload = {"result": res.to_json(), "path": path, "D": info.length, "w": w}
    rows = [[i, v] for i, v in enumerate(res.values)]
    _emit(cfg, payload, rows, ["index", "mu"])
    return []


def _run_sl(cfg: ExperimentConfig):
    if cfg.weight:
        weight = ProfileWeight.from_json(Path(cfg.weight).read_text())
    elif cfg.tent:
        weight = maximizer_profile(1, cfg.d)
    elif cfg.plateau is not None:
        weight = maximizer_profile(max(cfg.k, 2), cfg.d, plateau=cfg.plateau)
    else:
        raise ValueError("no weight given: use --weight, --tent or --plateau")
    res = sl_eigs(weight, cfg.k, cfg.n_elems)
    _emit(
        cfg,
        {"result": res.to_json(), "weight": weight.to_json()},
        [[i, v] for i, v in enumerate(res.values)],
        ["index", "mu"],
    )
    return []


def _run_kroger(cfg: ExperimentConfig):
    rows = kroger_table(cfg.k_max, cfg.d_max, n_elems=cfg.n_elems, check=cfg.check)
    violations = [
        {"k": r["k"], "d": r["d"], "check": "bound-match", "rel_err": r["rel_err"]}
        for r in rows
        if r["rel_err"] is not None and r["rel_err"] > 1e-3
    ]
    _emit(
        cfg,
        {"rows": rows, "violations": violations},
        [[r["k"], r["d"], r["bound"], r["mu_check"], r["rel_err"]] for r in rows],
        ["k", "d", "bound", "mu_check", "rel_err"],
    )
    return violations


def _run_constant(cfg: ExperimentConfig):
    rep = explicit_constant()
    payload = {"report": rep.to_json(), "tau_optimal": tau_optimality()}
    rows = [["I00", rep.I00], ["psi1", rep.psi1], ["psi3", rep.psi3], ["psi5", rep.psi5],
            ["tau", rep.tau], ["x0", rep.x0], ["M", rep.M], ["constant", rep.constant]]
    _emit(cfg, payload, rows, ["quantity", "value"])
    return []


def _run_sharpness(cfg: ExperimentConfig):
    alphas = np.linspace(cfg.alpha_min, cfg.alpha_max, cfg.alpha_steps)
    res = sharpness_sweep(alphas, h_target=cfg.h)
    j01sq4 = 4.0 * bessel_zero(0, 1) ** 2
    payload = {
        "slope": res.slope,
        "fit_window": list(res.fit_window),
        "rows": [r.to_json() for r in res.rows],
        "violations": res.violations,
    }
    # lower-bound column from the triangle sandwich: sin^2(a/2) = 1/(1 + 4 w^2)
    csv_rows = [
        [r.domain_id, r.w, r.deficit, j01sq4 / (1.0 + 4.0 * r.w**2), j01sq4]
        for r in res.rows
    ]
    _emit(cfg, payload, csv_rows, ["domain", "w", "deficit", "mu_lower", "mu_upper"])
    return res.violations


def _run_verify(cfg: ExperimentConfig):
    rng = np.random.default_rng(cfg.seed)
    checks = []
    violations = []
    if cfg.poly or cfg.builtin or cfg.alpha is not None:
        domains = [("domain", _load_domain(cfg))]
    else:
        domains = []
        if cfg.family in ("talpha", "all"):
            for frac in np.linspace(0.55, 0.93, max(2, cfg.n // 3)):
                domains.append((f"talpha:{frac:.4f}pi", superequilateral_triangle(frac * math.pi)))
        if cfg.family in ("trapezoids", "all"):
            for i in range(cfg.n):
                domains.append((f"trapezoid:{i}", random_symmetric_trapezoid(rng)))
        if cfg.family in ("lens", "all"):
            for s in np.linspace(0.04, 0.4, max(2, cfg.n // 3)):
                domains.append((f"lens:{s:.4f}", lens_polygon(s)))
    for name, poly in domains:
        chk = verify_symmetric_bound(poly, h_fem=cfg.h)
        checks.append({"domain": name, **chk.to_json()})
        if chk.margin < 0:
            violations.append({"domain": name, "check": "symmetric-bound-margin", "margin": chk.margin})
    _emit(
        cfg,
        {"constant": EXPLICIT_CONSTANT, "checks": checks, "violations": violations},
        [[c["domain"], c["D"], c["w"], c["lhs"], c["rhs"], c["margin"]] for c in checks],
        ["domain", "D", "w", "lhs", "rhs", "margin"],
    )
    return violations


def _run_estimate_c(cfg: ExperimentConfig):
    est = estimate_c(cfg.k, cfg.family, cfg.n, h_target=cfg.h, seed=cfg.seed)
    payload = {
        "c_empirical": est.c_empirical,
        "argmin_domain": est.argmin_domain,
        "c_w_normalized": est.c_w_normalized,
        "rows": [r.to_json() for r in est.rows],
        "violations": est.violations,
    }
    _emit(
        cfg,
        payload,
        [[r.domain_id, r.D, r.w, r.a2, r.mu_k, r.deficit, r.deficit_a2, r.deficit_w] for r in est.rows],
        ["domain", "D", "w", "a2", "mu_k", "deficit", "deficit_a2", "deficit_w"],
    )
    return est.violations


_COMMANDS = {
    "mu": _run_mu,
    "sl": _run_sl,
    "kroger": _run_kroger,
    "constant": _run_constant,
    "sharpness": _run_sharpness,
    "verify": _run_verify,
    "estimate-c": _run_estimate_c,
}


def run(cfg: ExperimentConfig) -> int:
    """Execute a campaign; exit 0 iff every asserted inequality held."""
    if cfg.command not in _COMMANDS:
        raise ValueError(f"unknown command {cfg.command!r}")
    violations = _COMMANDS[cfg.command](cfg)
    if violations:
        sys.stderr.write(json.dumps({"schema": SCHEMA, "violations": violations}, default=float) + "\n")
        return 1
    return 0


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="convexspec", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--k", type=int, default=1)
        sp.add_argument("--d", type=int, default=2)
        sp.add_argument("--h", type=float, default=0.02)
        sp.add_argument("--n", type=int, default=50)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", type=str, default=None)
        sp.add_argument("--format", choices=("json", "csv"), default="json")

    sp = sub.add_parser("mu", help="Neumann eigenvalues of a convex polygon")
    common(sp)
    sp.add_argument("--poly", type=str, help="polygon file (txt or JSON)")
    sp.add_argument("--builtin", choices=("unit-square", "disk256"))
    sp.add_argument("--alpha", type=float, help="isosceles triangle aperture (radians)")

    sp = sub.add_parser("sl", help="weighted 1-D eigenvalues")
    common(sp)
    sp.add_argument("--weight", type=str, help="ProfileWeight JSON file")
    sp.add_argument("--tent", action="store_true", help="use the k=1 maximizer tent")
    sp.add_argument("--plateau", type=float, help="symmetric trapezoid plateau fraction")
    sp.add_argument("--n-elems", dest="n_elems", type=int, default=1024)

    sp = sub.add_parser("kroger", help="sharp bound table")
    common(sp)
    sp.add_argument("--k-max", dest="k_max", type=int, default=5)
    sp.add_argument("--d-max", dest="d_max", type=int, default=5)
    sp.add_argument("--n-elems", dest="n_elems", type=int, default=2048)
    sp.add_argument("--no-check", dest="check", action="store_false")

    sp = sub.add_parser("constant", help="explicit-constant pipeline report")
    common(sp)

    sp = sub.add_parser("sharpness", help="triangle sweep and deficit slope")
    common(sp)
    sp.add_argument("--alpha-min", dest="alpha_min", type=float, default=0.76 * math.pi)
    sp.add_argument("--alpha-max", dest="alpha_max", type=float, default=0.975 * math.pi)
    sp.add_argument("--alpha-steps", dest="alpha_steps", type=int, default=12)

    sp = sub.add_parser("verify", help="symmetric-domain explicit bound margins")
    common(sp)
    sp.add_argument("--symmetric", action="store_true", help="kept for clarity; verify is symmetric-only")
    sp.add_argument("--poly", type=str)
    sp.add_argument("--builtin", choices=("unit-square", "disk256"))
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--family", choices=("talpha", "trapezoids", "lens", "all"), default="all")

    sp = sub.add_parser("estimate-c", help="empirical deficit constants")
    common(sp)
    sp.add_argument("--family", choices=("mixed", "symmetric", "thin-triangles"), default="mixed")

    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] == "--config":
        cfg_dict = json.loads(Path(argv[1]).read_text())
        cfg = ExperimentConfig(**cfg_dict)
        return run(cfg)
    ns = _build_parser().parse_args(argv)
    kwargs = {k: v for k, v in vars(ns).items() if v is not None}
    cfg = ExperimentConfig(**kwargs)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
