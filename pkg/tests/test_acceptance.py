"""Acceptance criteria 1-10. Each test prints one PASS/FAIL line (also
collected into the terminal summary) and then asserts."""

import json
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from eqcavity.cli import run
from eqcavity.conformal import (
    ConformalFamily,
    FamilyKind,
    check_univalence,
    extract_node_and_constant,
    one_point_xi_zero,
)
from eqcavity.equilibrium import (
    F2_closed,
    build_support,
    cassini_level,
    cassini_threshold,
    equilibrium_constant,
    frostman_verify,
)
from eqcavity.errors import InvalidParameterError
from eqcavity.fekete import energy, energy_gradient, minimize, support_stats
from eqcavity.field import FieldSpec, PointSource
from eqcavity.quadcheck import check_area_quadrature, check_boundary_quadrature, check_inverted_exterior
from eqcavity.quadrature import integrate_area, log_potential_numeric
from eqcavity.regions import Disc, Regime, RootSetClass, classify_root_set

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def report(number, title, ok, detail=""):
    line = f"criterion {number:2d} {title}: {'PASS' if ok else 'FAIL'} {detail}".rstrip()
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def random_single_source(n=20, seed=2024):
    """Valid single-source fields with R ≈ 1, p ∈ {1,2,3}; both regimes occur."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        p = int(rng.integers(1, 4))
        C = rng.uniform(0.5, 2.0) / (2 * p)
        R = (2 * p * C) ** (-1 / (2 * p))
        z0 = R * rng.uniform(0.1, 0.8) * np.exp(2j * np.pi * rng.uniform())
        q = float(np.exp(rng.uniform(np.log(0.005), np.log(0.3))))
        f = FieldSpec(C, p, [PointSource(z0, q)])
        S = build_support(f)
        if S.regime is not Regime.UNSUPPORTED:
            out.append((f, S))
    return out


INSTANCES = random_single_source()


def test_criterion_01_support_radius():
    worst = 0.0
    for C, p, R in [(1 / 4, 2, 1.0), (1 / 2, 1, 1.0), (1 / 50, 2, 1.880302)]:
        r = build_support(FieldSpec(C, p)).base.radius
        worst = max(worst, abs(r - (2 * p * C) ** (-1 / (2 * p))))
        assert r == pytest.approx(R, abs=1e-6)
    report(1, "support radius", worst <= 1e-12, f"max error {worst:.1e}")


def test_criterion_02_mass_balance():
    worst = {"disjoint": 0.0, "connected": 0.0}
    for f, S in INSTANCES:
        (cav,) = S.cavities
        m = integrate_area(f.density, cav, 1e-10).real
        key = "disjoint" if S.regime is Regime.DISJOINT_ROOTS else "connected"
        worst[key] = max(worst[key], abs(m - f.q_total) / f.q_total)
    ok = worst["disjoint"] <= 1e-8 and worst["connected"] <= 1e-5
    kinds = {s.regime.value for _, s in INSTANCES}
    report(2, "mass balance", ok,
           f"disjoint {worst['disjoint']:.1e}, connected {worst['connected']:.1e}, regimes {sorted(kinds)}")


def test_criterion_03_quadrature_identity():
    worst, ratio = 0.0, []
    for f, S in INSTANCES:
        rep = check_area_quadrature(f, S.cavities[0], max_degree=8)
        worst = max(worst, rep.max_rel())
        ratio.append((rep.rhs_alternative[0] / rep.lhs[0]).real)
    doubled_fails = all(abs(r - 2) < 1e-6 for r in ratio)
    report(3, "quadrature identity", worst <= 1e-6 and doubled_fails,
           f"max rel residual {worst:.1e}; 4pi variant ratio {np.mean(ratio):.6f}")


FROSTMAN_CASES = {
    "single": FieldSpec(0.5, 1, [PointSource(0.6, 0.04)]),
    "three sources": FieldSpec(0.25, 2, [PointSource(0.6, 0.01), PointSource(-0.3 + 0.5j, 0.015),
                                          PointSource(0.1 - 0.7j, 0.02)]),
    "annulus": FieldSpec(0.5, 1, [PointSource(0, 0.04)]),
    "cassini": FieldSpec(1 / 50, 2, [PointSource(1, 0.125), PointSource(-1, 0.125)]),
}


def test_criterion_04_frostman():
    ok, parts = True, []
    for name, f in FROSTMAN_CASES.items():
        S = build_support(f)
        num = frostman_verify(f, S, 100, 100, "numeric")
        closed = frostman_verify(f, S, 100, 100, "closed")
        CV = (1 + f.q_total) * equilibrium_constant(f.strength, f.halfdegree)
        good = (num.on_support_max_deviation <= 1e-6 * (1 + abs(CV))
                and num.exterior_min_margin >= -1e-8 and num.cavity_min_margin >= -1e-8
                and abs(closed.constant_estimate - CV) <= 1e-12 * (1 + abs(CV))
                and abs(closed.constant_estimate - num.constant_estimate) <= 1e-6)
        ok &= good
        parts.append(f"{name} dev {num.on_support_max_deviation:.1e}")
    report(4, "Frostman", ok, "; ".join(parts))


@pytest.mark.parametrize("f", [FieldSpec(0.5, 1, [PointSource(0.6, 0.04)]),
                               FieldSpec(0.25, 2, [PointSource(0.5 + 0.3j, 0.02)])],
                         ids=["p1", "p2"])
def test_criterion_05_F2_closed_form(f):
    (cav,) = build_support(f).cavities
    m, r, c, node = f.q_total, cav.level, cav.center_w, cav.node
    rng = np.random.default_rng(5)
    n = 1000
    w = c + r * np.sqrt(rng.uniform(1e-4, 1 - 1e-6, n)) * np.exp(2j * np.pi * rng.uniform(size=n))
    z = cav.branch_root(w)
    assert np.all(cav.contains(z))
    closed = F2_closed(m, r, c, z ** f.halfdegree, True)
    numeric = np.array([m * np.log(1 / abs(x - node)) - log_potential_numeric(f, cav, x) for x in z])
    err = np.max(np.abs(closed - numeric))
    report(5, f"F2 closed form (p={f.halfdegree})", err <= 1e-7 and closed.min() > 0,
           f"max error {err:.1e}, min F2 {closed.min():.2e}")


def test_criterion_06_null_quadrature():
    worst = 0.0
    for p in (1, 2, 3):
        f = FieldSpec(0.25, p)
        S = build_support(f)
        for a in (0.0, 0.3 * S.base.radius):
            worst = max(worst, check_inverted_exterior(f, S, a, max_degree=8).max_abs())
    circle = max(check_boundary_quadrature(Disc(0, rho), p, nodes=[], max_degree=8).max_abs()
                 for p in (1, 2, 3) for rho in (0.5, 1.0, 1.9))
    report(6, "null/boundary quadrature", worst <= 1e-8 and circle <= 1e-10,
           f"inverted {worst:.1e}, circle {circle:.1e}")


def _draw_family(kind, rng):
    while True:
        try:
            p = int(rng.integers(1, 4))
            phase = np.exp(2j * np.pi * rng.uniform())
            if kind is FamilyKind.AREA_NODE_OFFORIGIN:
                z0 = 0.7 * np.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
                fam = ConformalFamily(kind, p, rng.uniform(0.5, 2) * phase, z0)
            elif kind is FamilyKind.BOUNDARY_XI_NONZERO:
                a = rng.uniform(0.5, 2) * phase
                b = a * rng.uniform(0, 0.8) * np.exp(2j * np.pi * rng.uniform())
                z0 = 0.6 * np.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
                fam = ConformalFamily(kind, p, a, z0, (b,))
            else:
                r1, r2 = (rng.uniform(1.3, 3) * np.exp(2j * np.pi * rng.uniform()) for _ in range(2))
                fam = one_point_xi_zero(p, rng.uniform(0.5, 2) * phase, r1, r2)
        except InvalidParameterError:
            continue
        if check_univalence(fam):
            return fam


def test_criterion_07_conformal_closure():
    rng = np.random.default_rng(7)
    worst = 0.0
    for kind in FamilyKind:
        for _ in range(10):
            fam = _draw_family(kind, rng)
            if kind is FamilyKind.AREA_NODE_OFFORIGIN:
                node, _ = extract_node_and_constant(fam, 2 * fam.p)
                rep = check_area_quadrature(FieldSpec(0.25, 2), fam.image(), nodes=[(node, 1.0)],
                                            weight=lambda z, e=2 * fam.p: np.abs(z) ** e)
            else:
                node, _ = extract_node_and_constant(fam, -2 * fam.p)
                rep = check_boundary_quadrature(fam.image(), fam.p, nodes=[node])
            worst = max(worst, rep.max_rel(min_degree=2))
    disc = 0.0
    for p in (0, 1, 2, 3):
        for rho in (0.5, 1.0, 1.7):
            node, c = extract_node_and_constant(ConformalFamily(FamilyKind.AREA_NODE_OFFORIGIN, p, rho), 2 * p)
            exact = np.pi * rho ** (2 * p + 2) / (p + 1)
            disc = max(disc, abs(c - exact) / exact, abs(node))
    report(7, "conformal closure", worst <= 1e-7 and disc <= 1e-10,
           f"max rel residual {worst:.1e}, disc degeneration {disc:.1e}")


def test_criterion_08_cassini_transition():
    C, p = 1 / 50, 2

    def components(q):
        cls = classify_root_set(1.0, cassini_level(q, C, p), p)
        return p if cls is RootSetClass.DISJOINT_BRANCHES else 1

    lo, hi = 1e-4, 1.0
    assert components(lo) == p and components(hi) == 1
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if components(mid) == p else (lo, mid)
    q_star = cassini_threshold(C, p)
    err = abs(0.5 * (lo + hi) - q_star) / q_star
    ok = err <= 0.01 and abs(q_star - 0.0434783) < 1e-7
    report(8, "Cassini transition", ok, f"bisection {0.5 * (lo + hi):.7f} vs q* {q_star:.7f}")


def test_criterion_09_fekete():
    plain = FieldSpec(0.5, 1)
    s2 = minimize(plain, 2, seed=0)
    d = abs(s2.points[0] - s2.points[1]) / 2
    ok_pair = abs(d - 1 / np.sqrt(2)) <= 1e-3

    f = FieldSpec(0.5, 1, [PointSource(0.6, 0.04)])
    run1 = minimize(f, 200, seed=1)
    stats = support_stats(run1, build_support(f))
    ok_run = stats["inside_cavity"] == 0 and stats["offsupport_fraction"] <= 0.02

    rng = np.random.default_rng(9)
    x = 0.8 * (rng.uniform(-1, 1, 10) + 1j * rng.uniform(-1, 1, 10))
    g = energy_gradient(x, f)
    h, fd_err = 1e-6, 0.0
    for i in range(len(x)):
        for k, e in enumerate((1.0, 1j)):
            xp, xm = x.copy(), x.copy()
            xp[i] += h * e
            xm[i] -= h * e
            fd = (energy(xp, f) - energy(xm, f)) / (2 * h)
            fd_err = max(fd_err, abs(fd - g[i, k]) / max(1.0, abs(g[i, k])))

    run2 = minimize(f, 200, seed=1)
    same = np.array_equal(run1.points, run2.points) and run1.energy == run2.energy
    report(9, "Fekete", ok_pair and ok_run and fd_err <= 1e-6 and same,
           f"d={d:.6f}, inside_cavity={stats['inside_cavity']}, "
           f"offsupport={stats['offsupport_fraction']:.3f}, fd {fd_err:.1e}, rerun identical={same}")


CLI_MATRIX = [
    ("support", "cavity.json", 0), ("support", "through_origin.json", 0),
    ("frostman", "through_origin_literal_lemniscate.json", 1), ("conformal", "conformal_nonunivalent.json", 1),
    ("quadcheck", "cavity.json", 0), ("conformal", "conformal_area.json", 0),
    ("support", "invalid_strength.json", 2), ("support", "unknown_option.json", 2),
    ("support", "badsource.json", 3),
]


def test_criterion_10_cli(tmp_path, capsys):
    codes_ok, identical = True, True
    for task, cfg, expected in CLI_MATRIX:
        outs = []
        for rep in range(2):
            out = tmp_path / f"{task}_{Path(cfg).stem}_{rep}"
            code = run([task, "--config", str(CONFIGS / cfg), "--out", str(out)])
            summary = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
            codes_ok &= code == expected == summary["exit_code"]
            outs.append(out.read_bytes() if out.exists() else None)
        identical &= outs[0] == outs[1]
    report(10, "CLI", codes_ok and identical, f"exit codes ok={codes_ok}, byte-identical={identical}")
