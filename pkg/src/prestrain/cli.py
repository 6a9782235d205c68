"""Command-line experiment runner.

Human-readable tables go to standard output, machine-readable CSV/JSON to
``--out``, errors to standard error with exit status 1. ``classify`` exits
with 0, 10 or 20 for the Flat, OrderH4 and OrderH2 regimes.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict

import numpy as np

from .config import ExperimentConfig, parse_floats
from .elastic import q2a
from .energy3d import (
    ansatz_kirchhoff,
    energy_Eh,
    exact_flat,
    recovery_deformation,
    recovery_pair,
    scaling_study,
)
from .errors import UnsupportedMetricError
from .fields import Poly2D
from .functional import (
    AdmissiblePair,
    evaluate_I4,
    evaluate_I4_ex1,
    evaluate_I4_ex2,
    minimize_ex1,
)
from .geometry import COMPONENTS, classify_regime, riemann_covariant, write_sampled_csv
from .immersion import (
    catalog_immersion,
    curvature_identity_residual,
    read_immersion_csv,
    sampled_refinement,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(1)


# flag -> config key; values default to None so config files are not overridden
_FLAGS = [
    ("--metric", "metric", str),
    ("--lambda-poly", "lambda_poly", str),
    ("--f-poly", "f_poly", str),
    ("--entries", "entries", str),
    ("--file", "file", str),
    ("--immersion", "immersion_file", str),
    ("--mu", "mu", float),
    ("--lambdaL", "lambdaL", float),
    ("--grid", "grid", int),
    ("--n3", "n3", int),
    ("--tol", "tol", float),
    ("--h", "h", float),
    ("--h-list", "h_list", str),
    ("--family", "family", str),
    ("--gtol", "gtol", float),
    ("--max-iters", "max_iters", int),
    ("--memory", "memory", int),
    ("--v-poly", "v_poly", str),
    ("--w1-poly", "w1_poly", str),
    ("--w2-poly", "w2_poly", str),
    ("--V1-poly", "V1_poly", str),
    ("--V2-poly", "V2_poly", str),
    ("--V3-poly", "V3_poly", str),
    ("--A", "A", str),
    ("--F", "F", str),
]


def _common():
    p = argparse.ArgumentParser(add_help=False)
    for flag, key, typ in _FLAGS:
        p.add_argument(flag, dest=key, type=typ, default=None)
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--out", default=None, help="machine-readable output path")
    p.add_argument("--save-config", default=None, help="write the effective config")
    return p


def build_parser():
    common = _common()
    parser = _Parser(prog="prestrain", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "classify": "Riemann sup-norms and energy-scaling regime",
        "curvature": "Riemann components on the grid",
        "identity-check": "curvature identity residual of the immersion bundle",
        "q2a": "relaxed planar form at one point",
        "i4-eval": "limit energy of a supplied pair",
        "minimize": "minimize the reduced energy for diag(1, 1, lambda)",
        "energy3d": "3D energy of one deformation",
        "scaling": "energy scaling table over h",
        "export-metric": "write the metric as a sampled table",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    return parser


def load_config(ns) -> ExperimentConfig:
    cfg = ExperimentConfig.load(ns.config) if ns.config else ExperimentConfig()
    data = asdict(cfg)
    for _, key, _ in _FLAGS:
        val = getattr(ns, key)
        if val is None:
            continue
        if key == "entries":
            val = [parse_floats(part) for part in val.split(";")]
        data[key] = val
    return ExperimentConfig(**data)


def _fmt(x) -> str:
    return f"{x:.6e}"


def _write(path, text):
    if path:
        with open(path, "w") as fh:
            fh.write(text)


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


# -- commands ------------------------------------------------------------------


def cmd_classify(cfg, out):
    metric = cfg.build_metric()
    rep = classify_regime(metric, cfg.grid, cfg.tol)
    for c in COMPONENTS:
        print(f"{c:>6}  {_fmt(rep.sup_norms[c])}")
    print(f"regime  {rep.regime.value}  (threshold {_fmt(rep.threshold)})")
    _write(
        out,
        _json(
            {
                "sup_norms": rep.sup_norms,
                "regime": rep.regime.value,
                "threshold": rep.threshold,
                "scale": rep.scale,
                "grid": [rep.grid.n1, rep.grid.n2],
            }
        ),
    )
    return rep.regime.exit_code


def cmd_curvature(cfg, out):
    metric = cfg.build_metric()
    grid = metric.default_grid(cfg.grid) if metric.analytic else metric.default_grid()
    X1, X2 = grid.points
    R = riemann_covariant(metric, X1, X2)
    for k, c in enumerate(COMPONENTS):
        print(f"{c:>6}  {_fmt(float(np.max(np.abs(R[..., k]))))}")
    if out:
        lines = ["x1,x2," + ",".join(COMPONENTS)]
        for i in range(grid.n1):
            for j in range(grid.n2):
                vals = [X1[i, j], X2[i, j], *R[i, j]]
                lines.append(",".join(repr(float(v)) for v in vals))
        _write(out, "\n".join(lines) + "\n")
    return 0


def _bundle(cfg, metric):
    if cfg.immersion_file:
        return read_immersion_csv(cfg.immersion_file, metric)
    return catalog_immersion(metric)


def cmd_identity_check(cfg, out):
    metric = cfg.build_metric()
    bundle = _bundle(cfg, metric)
    grid = getattr(bundle, "grid", None) or metric.default_grid(cfg.grid)
    r = curvature_identity_residual(bundle, metric, grid, cfg.tol)
    rec = {"sup": r.sup, "mean": r.mean, "grid": [grid.n1, grid.n2]}
    print(f"sup residual   {_fmt(r.sup)}")
    print(f"mean residual  {_fmt(r.mean)}")
    if metric.analytic and not cfg.immersion_file:
        ref = sampled_refinement(metric, grid)
        rec["sampled"] = {
            "coarse_interior_sup": ref.coarse.interior_sup(ref.margin),
            "fine_interior_sup": ref.fine.interior_sup(ref.margin),
            "ratio": ref.ratio,
            "coarse_mean": ref.coarse.mean,
            "fine_mean": ref.fine.mean,
        }
        print(
            f"sampled mode {grid.n1} -> {2 * grid.n1 - 1}: interior sup "
            f"{_fmt(rec['sampled']['coarse_interior_sup'])} -> "
            f"{_fmt(rec['sampled']['fine_interior_sup'])}, ratio "
            + ("undefined" if ref.ratio is None else f"{ref.ratio:.3f}")
        )
    _write(out, _json(rec))
    return 0


def cmd_q2a(cfg, out):
    A = np.array(cfg.A, dtype=float).reshape(3, 3)
    F = np.array(cfg.F, dtype=float).reshape(2, 2)
    value, c = q2a(cfg.model(), A, F)
    print(f"value  {_fmt(float(value))}")
    print("c      " + "  ".join(_fmt(float(x)) for x in c))
    _write(out, _json({"value": float(value), "c": [float(x) for x in c]}))
    return 0


def cmd_i4_eval(cfg, out):
    metric = cfg.build_metric()
    model = cfg.model()
    grid = cfg.grid2d()
    bundle = catalog_immersion(metric)
    rec = {}
    if metric.kind == "conformal_lambda":
        V = cfg.V_field()
        rec["general"] = evaluate_I4(bundle, metric, model, AdmissiblePair.ex2(grid, V), cfg.tol).as_dict()
        rec["reduced"] = evaluate_I4_ex2(metric.f, model, V, None, grid).as_dict()
    else:
        v = Poly2D(cfg.v_poly)
        w = (Poly2D(cfg.w1_poly), Poly2D(cfg.w2_poly))
        pair = AdmissiblePair.ex1(grid, v, w)
        rec["general"] = evaluate_I4(bundle, metric, model, pair, cfg.tol).as_dict()
        lam = metric.entries[2][2]
        rec["reduced"] = evaluate_I4_ex1(lam, model, v, w, grid).as_dict()
    for name in ("general", "reduced"):
        d = rec[name]
        print(
            f"{name:>8}  stretching {_fmt(d['stretching_term'])}  bending {_fmt(d['bending_term'])}"
            f"  curvature {_fmt(d['curvature_term'])}  total {_fmt(d['total'])}"
        )
    _write(out, _json(rec))
    return 0


def _lambda_of(metric):
    if metric.kind not in ("identity", "diag_lambda"):
        raise UnsupportedMetricError("minimize works on diag(1, 1, lambda) metrics only")
    return metric.entries[2][2]


def cmd_minimize(cfg, out):
    metric = cfg.build_metric()
    grid = cfg.grid2d()
    res = minimize_ex1(_lambda_of(metric), cfg.model(), grid, cfg.options())
    d = res.as_dict()
    for k in ("stretching_term", "bending_term", "curvature_term", "total", "grad_norm"):
        print(f"{k:<16} {_fmt(d[k])}")
    print(f"{'iterations':<16} {res.iterations}  ({res.message})")
    if out:
        X1, X2 = grid.points
        lines = ["x1,x2,v,w1,w2"]
        for i in range(grid.n1):
            for j in range(grid.n2):
                vals = [X1[i, j], X2[i, j], res.v[i, j], res.w[i, j, 0], res.w[i, j, 1]]
                lines.append(",".join(repr(float(x)) for x in vals))
        lines.append(json.dumps(d, sort_keys=True))
        _write(out, "\n".join(lines) + "\n")
    return 0


def _flat_slope(metric):
    """``a`` with ``lambda = (1 + a.x')^2``, or an error."""
    if metric.kind == "identity":
        return (0.0, 0.0)
    if metric.kind == "diag_lambda":
        c = list(metric.entries[2][2].coeffs) + [0.0] * 6
        a1, a2 = c[1] / 2, c[2] / 2
        want = [1.0, 2 * a1, 2 * a2, a1 * a1, 2 * a1 * a2, a2 * a2]
        if np.allclose(c[:6], want, atol=1e-14) and not any(c[6:]):
            return (a1, a2)
    raise UnsupportedMetricError("exact_flat needs lambda = (1 + a.x')^2")


def _family(cfg, metric, model):
    fam = cfg.family
    if fam == "kirchhoff":
        return ansatz_kirchhoff(catalog_immersion(metric))
    if fam == "exact_flat":
        return exact_flat(_flat_slope(metric))
    if fam == "recovery":
        bundle = catalog_immersion(metric)
        V = cfg.V_field()
        w = (Poly2D(cfg.w1_poly), Poly2D(cfg.w2_poly))
        return lambda h: recovery_deformation(bundle, metric, model, V, w, h)
    raise ValueError(f"unknown family {fam!r}; choose kirchhoff, exact_flat or recovery")


def cmd_energy3d(cfg, out):
    metric = cfg.build_metric()
    model = cfg.model()
    fam = _family(cfg, metric, model)
    u = fam(cfg.h) if cfg.family == "recovery" else fam
    E = energy_Eh(metric, model, u, cfg.h, cfg.grid2d(), cfg.n3)
    rec = {"h": cfg.h, "Eh": E, "Eh_over_h4": E / cfg.h**4, "family": cfg.family}
    if cfg.family == "recovery":
        pair = recovery_pair(
            catalog_immersion(metric), cfg.V_field(), (Poly2D(cfg.w1_poly), Poly2D(cfg.w2_poly)), cfg.grid2d()
        )
        rec["I4"] = evaluate_I4(catalog_immersion(metric), metric, model, pair, cfg.tol).total
    for k, v in rec.items():
        print(f"{k:<11} {v if isinstance(v, str) else _fmt(v)}")
    _write(out, _json(rec))
    return 0


def cmd_scaling(cfg, out):
    metric = cfg.build_metric()
    model = cfg.model()
    table = scaling_study(metric, model, _family(cfg, metric, model), cfg.h_list, cfg.grid2d(), cfg.n3)
    print(f"{'h':>12} {'Eh':>14} {'Eh/h^4':>14}")
    for h, E, r in table.rows:
        print(f"{h:>12.6g} {_fmt(E):>14} {_fmt(r):>14}")
    slope = "undefined" if table.fitted_slope is None else f"{table.fitted_slope:.4f}"
    print(f"fitted slope {slope}  regime {table.regime}")
    if out:
        table.write_csv(out)
    return 0


def cmd_export_metric(cfg, out):
    if not out:
        raise ValueError("export-metric needs --out")
    metric = cfg.build_metric()
    write_sampled_csv(metric, cfg.grid2d(), out)
    print(f"wrote {cfg.grid}x{cfg.grid} samples to {out}")
    return 0


COMMANDS = {
    "classify": cmd_classify,
    "curvature": cmd_curvature,
    "identity-check": cmd_identity_check,
    "q2a": cmd_q2a,
    "i4-eval": cmd_i4_eval,
    "minimize": cmd_minimize,
    "energy3d": cmd_energy3d,
    "scaling": cmd_scaling,
    "export-metric": cmd_export_metric,
}


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = load_config(ns)
        if ns.save_config:
            cfg.save(ns.save_config)
        return COMMANDS[ns.command](cfg, ns.out)
    except (ValueError, OSError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
