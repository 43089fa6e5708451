"""Numerical verification of quadrature identities.

* weighted area:   ∫_Ω ΔQ h dA = κ Σ qⱼ h(zⱼ), κ = 2π/(1+q), on cavities;
* boundary:        ∮_∂Ω h(z) |z|^(-2p) dz = Σ cⱼ h(zⱼ)  (or = 0, null case);
* inverted exterior: ∮ h(t) t⁻¹ ∂Q(t⁻¹ + α) dt over ∂(S_V^c)* with t = 1/(z - α).

Test functions are monomials. When coefficients are unknown they are fitted
from the lowest degrees (one per node) and the remaining degrees are pure
checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import (
    AlphaOutsideError,
    InvalidParameterError,
    OriginOnBoundaryError,
    SingularFitError,
    UnsupportedRegimeError,
)
from .field import FieldSpec, wirtinger_dQ
from .quadrature import integrate_area
from .regions import Regime, SupportDescription, boundary_points, reverse_curve

MAX_DEGREE = 12
FIT_COND_LIMIT = 1e12

KAPPA_NOTE = ("area identity constant 2π/(1+q) follows from the h=1 mass balance; "
              "a 4π/(1+q) constant is reported alongside for comparison")


@dataclass(frozen=True)
class QuadratureReport:
    degrees: list
    lhs: list
    rhs: list
    abs_residual: list
    rel_residual: list
    fitted_coefficients: list
    nodes: list = dc_field(default_factory=list)
    rhs_alternative: list = dc_field(default_factory=list)
    notes: tuple = ()

    def __post_init__(self):
        n = len(self.degrees)
        if not all(len(x) == n for x in (self.lhs, self.rhs, self.abs_residual, self.rel_residual)):
            raise InvalidParameterError("report lists must share one length")

    def max_rel(self, min_degree: int = 0) -> float:
        vals = [r for d, r in zip(self.degrees, self.rel_residual) if d >= min_degree]
        return max(vals) if vals else 0.0

    def max_abs(self, min_degree: int = 0) -> float:
        vals = [r for d, r in zip(self.degrees, self.abs_residual) if d >= min_degree]
        return max(vals) if vals else 0.0

    def rows(self):
        """(degree, lhs, rhs, abs_residual, rel_residual) tuples."""
        return list(zip(self.degrees, self.lhs, self.rhs, self.abs_residual, self.rel_residual))


def _check_degree(max_degree):
    if int(max_degree) != max_degree or not 0 <= max_degree <= MAX_DEGREE:
        raise InvalidParameterError(f"max_degree must be an integer in [0, {MAX_DEGREE}]")


def _fit(nodes: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Coefficients c with Σ cⱼ nodesⱼ^k = values_k for k = 0..m-1."""
    m = len(nodes)
    V = nodes[None, :] ** np.arange(m)[:, None]
    if m > 1 and (np.min(np.abs(nodes[:, None] - nodes[None, :]) + np.eye(m)) == 0
                  or np.linalg.cond(V) > FIT_COND_LIMIT):
        raise SingularFitError("quadrature nodes are degenerate")
    return np.linalg.solve(V, values[:m])


def _report(degrees, lhs, rhs, scale, coeffs, nodes=(), alt=(), notes=()):
    lhs = np.asarray(lhs, dtype=complex)
    rhs = np.asarray(rhs, dtype=complex)
    ab = np.abs(lhs - rhs)
    den = np.maximum.reduce([np.abs(lhs), np.abs(rhs), np.asarray(scale, dtype=float)])
    rel = np.where(den > 0, ab / np.where(den > 0, den, 1.0), 0.0)
    return QuadratureReport(
        degrees=[int(d) for d in degrees],
        lhs=[complex(v) for v in lhs],
        rhs=[complex(v) for v in rhs],
        abs_residual=[float(v) for v in ab],
        rel_residual=[float(v) for v in rel],
        fitted_coefficients=[complex(c) for c in coeffs],
        nodes=[complex(z) for z in nodes],
        rhs_alternative=[complex(v) for v in alt],
        notes=tuple(notes),
    )


# ---------------------------------------------------------------- area identity


def check_area_quadrature(field: FieldSpec, cavity, nodes=None, max_degree: int = 8,
                          *, center: complex = 0j, weight=None,
                          rel_tol: float = 1e-12) -> QuadratureReport:
    """Weighted-area identity on a cavity with test functions h = (z - center)^k.

    ``nodes`` are (location, intensity) pairs; by default every source of the
    field inside the cavity. With the default weight ΔQ the right side is
    κ Σ qⱼ h(zⱼ), κ = 2π/(1+q), and ``fitted_coefficients`` holds the κ
    implied by degree 0. With a custom ``weight`` callable the per-node
    coefficients are unknown: they are fitted from the lowest degrees.
    """
    _check_degree(max_degree)
    if nodes is None:
        nodes = [(s.location, s.intensity) for s in field.sources if cavity.contains(s.location)]
    if not nodes:
        raise InvalidParameterError("no quadrature nodes inside the cavity")
    z = np.array([complex(n[0]) for n in nodes])
    qn = np.array([float(n[1]) for n in nodes])
    w = field.laplacian if weight is None else weight
    degrees = list(range(max_degree + 1))
    lhs, scale = [], []
    for k in degrees:
        lhs.append(integrate_area(lambda u: w(u) * (u - center) ** k, cavity, rel_tol).value)
        # the residual scale only needs a few digits
        scale.append(integrate_area(lambda u: np.abs(w(u)) * np.abs(u - center) ** k,
                                    cavity, max(rel_tol, 1e-6)).real)
    h = (z[None, :] - center) ** np.array(degrees)[:, None]
    if weight is None:
        kappa = 2 * np.pi / (1 + field.q_total)
        rhs = kappa * (h @ qn)
        alt = 2 * rhs
        kfit = lhs[0] / qn.sum()
        notes = [KAPPA_NOTE, f"degree-0 match: {_which_kappa(lhs[0], rhs[0], alt[0])}"]
        return _report(degrees, lhs, rhs, scale, [kfit], z, alt, notes)
    c = _fit(z - center, np.asarray(lhs))
    return _report(degrees, lhs, h @ c, scale, c, z)


def _which_kappa(lhs, rhs2, rhs4):
    e2 = abs(lhs - rhs2) / abs(lhs)
    e4 = abs(lhs - rhs4) / abs(lhs)
    if min(e2, e4) > 1e-6:
        return "neither"
    return "2pi/(1+q)" if e2 <= e4 else "4pi/(1+q)"


# ---------------------------------------------------------------- boundary identity


def _contour_moments(curves, weight_of_z, max_degree, center=0j):
    """∮ (z - center)^k weight(z) dz and ∮ |z - center|^k |weight| |dz| over sampled curves."""
    vals = np.zeros(max_degree + 1, dtype=complex)
    scale = np.zeros(max_degree + 1)
    for z, dz in curves:
        n = len(z)
        wz = weight_of_z(z)
        for k in range(max_degree + 1):
            hk = (z - center) ** k
            vals[k] += np.sum(hk * wz * dz) * (2 * np.pi / n)
            scale[k] += np.sum(np.abs(hk * wz * dz)) * (2 * np.pi / n)
    return vals, scale


def check_boundary_quadrature(domain, p: int, nodes=None, max_degree: int = 8, *,
                              exponent: float | None = None, n: int = 4096) -> QuadratureReport:
    """Boundary identity ∮ z^k |z|^e dz (e = -2p by default) on ∂domain.

    ``nodes=[]`` checks the null identity; ``nodes=None`` fits a single node
    by the moment quotient; a list of nodes fits one coefficient per node
    from the lowest degrees.
    """
    _check_degree(max_degree)
    e = -2.0 * p if exponent is None else float(exponent)
    curves = boundary_points(domain, n)
    allz = np.concatenate([c[0] for c in curves])
    diam = np.ptp(allz.real) + np.ptp(allz.imag)
    if np.min(np.abs(allz)) <= 1e-12 * diam:
        raise OriginOnBoundaryError("the origin lies on the boundary")
    vals, scale = _contour_moments(curves, lambda z: np.abs(z) ** e, max_degree)
    degrees = list(range(max_degree + 1))
    if nodes is not None and len(nodes) == 0:
        return _report(degrees, vals, np.zeros_like(vals), scale, [], [], notes=["null identity"])
    if nodes is None:
        if abs(vals[0]) <= 1e-12 * scale[0]:
            raise SingularFitError("zero total measure; no single node")
        znodes = np.array([vals[1] / vals[0]])
    else:
        znodes = np.array([complex(x) for x in nodes])
    c = _fit(znodes, vals)
    rhs = (znodes[None, :] ** np.array(degrees)[:, None]) @ c
    return _report(degrees, vals, rhs, scale, c, znodes)


# ---------------------------------------------------------------- inverted exterior


def check_inverted_exterior(field: FieldSpec, support, alpha: complex, max_degree: int = 8, *,
                            n: int = 4096) -> QuadratureReport:
    """Identity for ∂(S_V^c)* with t = 1/(z - α) and measure t⁻¹ ∂Q(t⁻¹ + α) dt.

    ``support`` is a SupportDescription (it must be simply connected) or any
    simply connected region with a boundary, standing in for S_V.
    """
    _check_degree(max_degree)
    alpha = complex(alpha)
    if isinstance(support, SupportDescription):
        if support.regime is Regime.UNSUPPORTED:
            raise UnsupportedRegimeError("support regime is UNSUPPORTED")
        if support.cavities:
            raise UnsupportedRegimeError("S_V with cavities is not simply connected")
        outer = support.base
    else:
        outer = support
    if not support.contains(alpha):
        raise AlphaOutsideError(f"alpha={alpha} is not inside S_V")
    for s in field.sources:
        if support.contains(s.location):
            raise InvalidParameterError("sources must lie outside S_V")
    curves = boundary_points(outer, n)
    if len(curves) != 1:
        raise UnsupportedRegimeError("S_V boundary must be a single curve")
    z, dz = curves[0]
    t = 1.0 / (z - alpha)
    dt = -dz * t * t
    # z runs counter-clockwise, so t runs clockwise; reverse for the positive orientation
    t, dt = reverse_curve(t, dt)
    zt = 1.0 / t + alpha
    w = wirtinger_dQ(field, zt) / t
    vals, scale = _contour_moments([(t, dt)], lambda _t: w, max_degree)
    degrees = list(range(max_degree + 1))
    if not field.sources:
        return _report(degrees, vals, np.zeros_like(vals), scale, [], [], notes=["null identity"])
    nodes = 1.0 / (field.locations - alpha)
    c = _fit(nodes, vals)
    rhs = (nodes[None, :] ** np.array(degrees)[:, None]) @ c
    return _report(degrees, vals, rhs, scale, c, nodes)
