"""Command-line front end.

    eqcavity <task> --config cfg.json [--out PATH] [--format csv|svg] [--seed N] [--tol X]

Tasks: support, frostman, quadcheck, conformal, fekete, render. A one-line
JSON summary goes to stdout, diagnostics to stderr.

Exit codes: 0 success, 1 a verification check failed, 2 invalid config or
I/O error, 3 unsupported regime or invalid source.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .errors import EqcavityError, UnsupportedRegimeError
from .field import FieldSpec, PointSource
from .regions import Regime

TASKS = ("support", "frostman", "quadcheck", "conformal", "fekete", "render")
COMMON_OPTIONS = {"out", "format"}
TASK_OPTIONS = {
    "support": {"n_boundary", "literal_connected"},
    "frostman": {"n_on", "n_off", "mode", "tol", "margin_tol", "seed", "per_source_level",
                 "literal_connected"},
    "quadcheck": {"kind", "max_degree", "tol", "alpha", "n_boundary"},
    "conformal": {"family", "weight_exponent", "max_degree", "tol", "n_boundary"},
    "fekete": {"N", "seed", "max_iter", "grad_tol", "step0", "max_offsupport_fraction"},
    "render": {"N", "seed", "max_iter", "n_boundary"},
}

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_UNSUPPORTED = 0, 1, 2, 3

SCHEMAS = {
    "boundaries": ("region_id", "theta", "re", "im"),
    "points": ("index", "re", "im"),
    "frostman": ("re", "im", "F", "location"),
    "quadcheck": ("degree", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "abs_residual", "rel_residual"),
}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- config


@dataclass(frozen=True)
class RunConfig:
    field: FieldSpec
    task: str
    options: dict = dc_field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict, task: str | None = None) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(data) - {"field", "task", "options"}
        if unknown:
            raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
        task = task or data.get("task")
        if data.get("task") not in (None, task):
            raise ConfigError(f"config task {data.get('task')!r} does not match {task!r}")
        if task not in TASKS:
            raise ConfigError(f"unknown task {task!r}")
        f = data.get("field")
        if not isinstance(f, dict) or set(f) - {"C", "p", "sources"} or not {"C", "p"} <= set(f):
            raise ConfigError('field must be {"C": .., "p": .., "sources": [...]}')
        sources = []
        for s in f.get("sources", []):
            if not isinstance(s, dict) or set(s) - {"re", "im", "q"} or "q" not in s:
                raise ConfigError('each source must be {"re": .., "im": .., "q": ..}')
            sources.append(PointSource(complex(float(s.get("re", 0.0)), float(s.get("im", 0.0))),
                                       float(s["q"])))
        if isinstance(f["p"], bool) or not isinstance(f["p"], int):
            raise ConfigError("p must be an integer")
        field = FieldSpec(float(f["C"]), f["p"], tuple(sources))
        options = data.get("options", {})
        if not isinstance(options, dict):
            raise ConfigError("options must be an object")
        bad = set(options) - TASK_OPTIONS[task] - COMMON_OPTIONS
        if bad:
            raise ConfigError(f"options not allowed for task {task}: {sorted(bad)}")
        return cls(field, task, dict(options))

    def to_dict(self) -> dict:
        return {
            "field": {
                "C": self.field.strength,
                "p": self.field.halfdegree,
                "sources": [{"re": s.location.real, "im": s.location.imag, "q": s.intensity}
                            for s in self.field.sources],
            },
            "task": self.task,
            "options": dict(self.options),
        }


def load_config(path: str | Path, task: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return RunConfig.from_dict(data, task)


# ---------------------------------------------------------------- writers


@dataclass
class Table:
    schema: str
    rows: list = dc_field(default_factory=list)

    @property
    def header(self):
        return SCHEMAS[self.schema]


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % float(v)


def write_csv(report: Table, path) -> None:
    lines = [",".join(report.header)]
    for row in report.rows:
        if len(row) != len(report.header):
            raise ValueError("row does not match the schema")
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _svg_num(v: float) -> str:
    s = "%.9g" % v
    return "0" if s == "-0" else s


def write_svg(curves, points, path, filled=None) -> None:
    """Closed polylines then points; y is flipped so the picture has the usual orientation.

    ``filled`` flags curves (cavities) that get a 10% opacity fill.
    """
    curves = [np.asarray(c, dtype=complex) for c in curves]
    points = np.asarray(points, dtype=complex).ravel()
    if not curves and points.size == 0:
        raise ValueError("nothing to draw")
    filled = list(filled) if filled is not None else [False] * len(curves)
    allz = np.concatenate(curves + [points]) if curves else points
    x0, x1 = allz.real.min(), allz.real.max()
    y0, y1 = (-allz.imag).min(), (-allz.imag).max()
    w, h = x1 - x0, y1 - y0
    diam = max(w, h) or 1.0
    mx, my = 0.05 * (w or diam), 0.05 * (h or diam)
    vb = (x0 - mx, y0 - my, w + 2 * mx, h + 2 * my)
    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           '<svg xmlns="http://www.w3.org/2000/svg" viewBox="%s">' % " ".join(_svg_num(v) for v in vb)]
    sw = _svg_num(0.005 * diam)
    for c, fill in zip(curves, filled):
        d = "M " + " L ".join(f"{_svg_num(z.real)} {_svg_num(-z.imag)}" for z in c) + " Z"
        style = 'fill="black" fill-opacity="0.1"' if fill else 'fill="none"'
        out.append(f'<path d="{d}" stroke="black" stroke-width="{sw}" {style}/>')
    rad = _svg_num(0.004 * diam)
    for z in points:
        out.append(f'<circle cx="{_svg_num(z.real)}" cy="{_svg_num(-z.imag)}" r="{rad}" fill="black"/>')
    out.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")


# ---------------------------------------------------------------- tasks


@dataclass
class Outcome:
    passed: bool
    summary: dict
    table: Table | None = None
    curves: list = dc_field(default_factory=list)
    filled: list = dc_field(default_factory=list)
    points: np.ndarray = dc_field(default_factory=lambda: np.array([], dtype=complex))


def _support(cfg: RunConfig):
    from .equilibrium import build_support

    kw = {k: bool(cfg.options[k]) for k in ("per_source_level", "literal_connected") if k in cfg.options}
    sup = build_support(cfg.field, **kw)
    if sup.regime is Regime.UNSUPPORTED:
        raise UnsupportedRegimeError("; ".join(sup.notes) or "unsupported regime")
    return sup


def _support_curves(sup, n):
    curves = [sup.base.boundary(n)[0][0]]
    filled = [False]
    for cav in sup.cavities:
        for z, _ in cav.boundary(n):
            curves.append(z)
            filled.append(True)
    return curves, filled


def _boundary_table(curves, n):
    th = 2 * np.pi * np.arange(n) / n
    rows = []
    for rid, c in enumerate(curves):
        rows.extend((rid, t, z.real, z.imag) for t, z in zip(th, c))
    return Table("boundaries", rows)


def task_support(cfg, args):
    n = int(cfg.options.get("n_boundary", 256))
    sup = _support(cfg)
    curves, filled = _support_curves(sup, n)
    summary = {"regime": sup.regime.value, "base_radius": sup.base.radius,
               "cavities": len(sup.cavities), "notes": list(sup.notes)}
    return Outcome(True, summary, _boundary_table(curves, n), curves, filled)


def task_frostman(cfg, args):
    from .equilibrium import frostman_verify

    o = cfg.options
    sup = _support(cfg)
    seed = args.seed if args.seed is not None else int(o.get("seed", 0))
    tol = args.tol if args.tol is not None else float(o.get("tol", 1e-6))
    rep = frostman_verify(cfg.field, sup, int(o.get("n_on", 200)), int(o.get("n_off", 200)),
                          o.get("mode", "closed"), seed)
    ok = rep.passed(tol, float(o.get("margin_tol", 1e-8)))
    summary = {"regime": sup.regime.value, "constant_estimate": rep.constant_estimate,
               "on_support_max_deviation": rep.on_support_max_deviation,
               "exterior_min_margin": rep.exterior_min_margin,
               "cavity_min_margin": rep.cavity_min_margin,
               "samples_on": rep.samples_on, "samples_off": rep.samples_off}
    table = Table("frostman", [(z.real, z.imag, F, loc) for z, F, loc in rep.samples])
    curves, filled = _support_curves(sup, 256)
    pts = np.array([r[0] for r in rep.samples])
    return Outcome(ok, summary, table, curves, filled, pts)


def _quad_rows(rep):
    return [(d, l.real, l.imag, r.real, r.imag, a, e) for d, l, r, a, e in rep.rows()]


def task_quadcheck(cfg, args):
    from .quadcheck import check_area_quadrature, check_inverted_exterior

    o = cfg.options
    tol = args.tol if args.tol is not None else float(o.get("tol", 1e-6))
    max_degree = int(o.get("max_degree", 8))
    sup = _support(cfg)
    kind = o.get("kind", "inverted" if not sup.cavities else "area")
    rows, worst, summary = [], 0.0, {"regime": sup.regime.value, "kind": kind}
    if kind == "area":
        if not sup.cavities:
            raise UnsupportedRegimeError("no cavity to check")
        fitted = []
        for cav in sup.cavities:
            rep = check_area_quadrature(cfg.field, cav, None, max_degree)
            rows += _quad_rows(rep)
            worst = max(worst, rep.max_rel())
            fitted += [c.real for c in rep.fitted_coefficients]
        summary.update(max_rel_residual=worst, fitted_kappa=fitted,
                       kappa=2 * math.pi / (1 + cfg.field.q_total))
    elif kind == "inverted":
        alpha = complex(*o.get("alpha", [0.0, 0.0]))
        rep = check_inverted_exterior(cfg.field, sup, alpha, max_degree,
                                      n=int(o.get("n_boundary", 4096)))
        rows = _quad_rows(rep)
        worst = rep.max_abs()
        summary.update(max_abs_integral=worst)
    else:
        raise ConfigError(f"unknown quadcheck kind {kind!r}")
    curves, filled = _support_curves(sup, 256)
    return Outcome(worst <= tol, summary, Table("quadcheck", rows), curves, filled)


def _cplx(v):
    if isinstance(v, (list, tuple)):
        return complex(float(v[0]), float(v[1]) if len(v) > 1 else 0.0)
    return complex(float(v))


def task_conformal(cfg, args):
    from .conformal import ConformalFamily, FamilyKind, check_univalence, extract_node_and_constant
    from .quadcheck import check_area_quadrature, check_boundary_quadrature

    o = cfg.options
    spec = o.get("family")
    if not isinstance(spec, dict) or set(spec) - {"kind", "p", "scale", "zeta0", "coeffs"}:
        raise ConfigError("option 'family' must be {kind, p, scale, zeta0, coeffs}")
    fam = ConformalFamily(FamilyKind(spec["kind"]), int(spec["p"]), _cplx(spec.get("scale", 1.0)),
                          _cplx(spec.get("zeta0", 0.0)), tuple(_cplx(c) for c in spec.get("coeffs", [])))
    tol = args.tol if args.tol is not None else float(o.get("tol", 1e-7))
    max_degree = int(o.get("max_degree", 8))
    area = fam.kind is FamilyKind.AREA_NODE_OFFORIGIN
    e = int(o.get("weight_exponent", 2 * fam.p if area else -2 * fam.p))
    univalent = check_univalence(fam, 4096)
    summary = {"kind": fam.kind.value, "univalent": univalent}
    region = fam.image()
    n = int(o.get("n_boundary", 256))
    curve = region.boundary(n)[0][0]
    if not univalent:
        return Outcome(False, summary, Table("quadcheck", []), [curve], [False])
    node, const = extract_node_and_constant(fam, e)
    if e >= 0:
        rep = check_area_quadrature(cfg.field, region, [(node, 1.0)], max_degree,
                                    weight=lambda z: np.abs(z) ** e)
    else:
        rep = check_boundary_quadrature(region, fam.p, [node], max_degree, exponent=e)
    worst = rep.max_rel(2)
    summary.update(node=[node.real, node.imag], constant=[const.real, const.imag],
                   weight_exponent=e, max_rel_residual=worst)
    return Outcome(worst <= tol, summary, Table("quadcheck", _quad_rows(rep)), [curve], [False],
                   np.array([node]))


def _fekete_run(cfg, args):
    from .fekete import MinimizeOptions, minimize

    o = cfg.options
    seed = args.seed if args.seed is not None else int(o.get("seed", 0))
    kw = {k: o[k] for k in ("max_iter", "grad_tol", "step0") if k in o}
    return minimize(cfg.field, int(o.get("N", 200)), seed, MinimizeOptions(**kw))


def task_fekete(cfg, args):
    from .fekete import support_stats

    state = _fekete_run(cfg, args)
    sup = _support(cfg)
    stats = support_stats(state, sup)
    limit = float(cfg.options.get("max_offsupport_fraction", 0.02))
    ok = stats["inside_cavity"] == 0 and stats["offsupport_fraction"] <= limit
    summary = {"N": len(state.points), "energy": state.energy, "grad_norm": state.grad_norm,
               "iterations": state.iterations, "converged": state.converged, **stats}
    table = Table("points", [(i, z.real, z.imag) for i, z in enumerate(state.points)])
    curves, filled = _support_curves(sup, 256)
    return Outcome(ok, summary, table, curves, filled, state.points)


def task_render(cfg, args):
    n = int(cfg.options.get("n_boundary", 256))
    sup = _support(cfg)
    state = _fekete_run(cfg, args)
    curves, filled = _support_curves(sup, n)
    summary = {"regime": sup.regime.value, "N": len(state.points)}
    table = Table("points", [(i, z.real, z.imag) for i, z in enumerate(state.points)])
    return Outcome(True, summary, table, curves, filled, state.points)


TASK_FUNCS = {"support": task_support, "frostman": task_frostman, "quadcheck": task_quadcheck,
              "conformal": task_conformal, "fekete": task_fekete, "render": task_render}


# ---------------------------------------------------------------- entry points


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _parser():
    ap = _Parser(prog="eqcavity", description="Equilibrium supports with point-source cavities")
    ap.add_argument("task", choices=TASKS)
    ap.add_argument("--config", required=True)
    ap.add_argument("--out")
    ap.add_argument("--format", choices=("csv", "svg"))
    ap.add_argument("--seed", type=int)
    ap.add_argument("--tol", type=float)
    return ap


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return _json_safe(v.item())
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    return v


def _emit(summary: dict):
    print(json.dumps(_json_safe(summary), sort_keys=True))


def run(argv) -> int:
    task = None
    try:
        args = _parser().parse_args(list(argv))
        task = args.task
        cfg = load_config(args.config, task)
        fmt = args.format or cfg.options.get("format") or ("svg" if task == "render" else "csv")
        if fmt not in ("csv", "svg"):
            raise ConfigError(f"unknown format {fmt!r}")
        out = args.out or cfg.options.get("out") or f"{Path(args.config).stem}_{task}.{fmt}"
        outcome = TASK_FUNCS[task](cfg, args)
        if fmt == "csv":
            write_csv(outcome.table or Table("points"), out)
        else:
            write_svg(outcome.curves, outcome.points, out, outcome.filled)
    except UnsupportedRegimeError as exc:
        print(f"eqcavity: unsupported: {exc}", file=sys.stderr)
        _emit({"task": task, "status": "unsupported", "exit_code": EXIT_UNSUPPORTED, "error": str(exc)})
        return EXIT_UNSUPPORTED
    except (ConfigError, ValueError, KeyError, TypeError, OSError, EqcavityError) as exc:
        print(f"eqcavity: error: {exc}", file=sys.stderr)
        _emit({"task": task, "status": "error", "exit_code": EXIT_CONFIG, "error": str(exc)})
        return EXIT_CONFIG
    code = EXIT_OK if outcome.passed else EXIT_CHECK_FAILED
    _emit({"task": task, "status": "ok" if outcome.passed else "failed", "exit_code": code,
           "output": str(out), **outcome.summary})
    return code


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
