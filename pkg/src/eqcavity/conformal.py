"""Riemann maps of the unit disc onto one-point quadrature domains.

Three families are supported:

* ``AREA_NODE_OFFORIGIN``  φ(t) = C t / (1 - t ζ̄₀)^(1/(p+1)), one-point
  domains for the area measure |z|^(2p) dA with node φ(ζ₀);
* ``BOUNDARY_XI_NONZERO``  φ(t) = t ((a + b t)/(1 - t ζ̄₀))^(1/p);
* ``BOUNDARY_XI_ZERO``     φ(t) = t ((a + b t + c t²)/(1 - t ζ̄₀))^(1/p);
  the boundary families relate to the measure |z|^(-2p) dz.

For AREA_NODE_OFFORIGIN, ``p`` is the exponent of the *measure* |z|^(2p);
the map exponent 1/(p+1) is derived from it (so a cavity whose density is
∝ |z|^(2p-2) uses a family with p-1). The boundary families take the map
exponent p directly, matching the measure |z|^(-2p) dz.

Maps are evaluated in factored form, a^(1/p) · t · Π(1 - t/ρᵢ)^(1/p) ·
(1 - t ζ̄₀)^(-1/p): every factor has positive real part on the closed disc
for valid parameters, so principal powers give one continuous branch.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .regions import ConformalImage, points_in_polygon


class FamilyKind(enum.Enum):
    AREA_NODE_OFFORIGIN = "area_node_offorigin"
    BOUNDARY_XI_NONZERO = "boundary_xi_nonzero"
    BOUNDARY_XI_ZERO = "boundary_xi_zero"


@dataclass(frozen=True)
class ConformalFamily:
    kind: FamilyKind
    p: int
    scale: complex
    zeta0: complex = 0j
    coeffs: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", FamilyKind(self.kind))
        object.__setattr__(self, "scale", complex(self.scale))
        object.__setattr__(self, "zeta0", complex(self.zeta0))
        object.__setattr__(self, "coeffs", tuple(complex(c) for c in self.coeffs))
        if int(self.p) != self.p:
            raise InvalidParameterError("p must be an integer")
        object.__setattr__(self, "p", int(self.p))
        if not abs(self.zeta0) < 1:
            raise InvalidParameterError("|zeta0| must be < 1")
        if self.scale == 0:
            raise InvalidParameterError("scale must be nonzero")
        if self.kind is FamilyKind.AREA_NODE_OFFORIGIN:
            if self.p < 0:
                raise InvalidParameterError("measure exponent p must be >= 0")
            if self.coeffs:
                raise InvalidParameterError("AREA_NODE_OFFORIGIN takes no extra coefficients")
            return
        if self.p < 1:
            raise InvalidParameterError("p must be >= 1 for boundary families")
        if self.kind is FamilyKind.BOUNDARY_XI_NONZERO:
            if len(self.coeffs) != 1:
                raise InvalidParameterError("BOUNDARY_XI_NONZERO needs coeffs=(b,)")
            b = self.coeffs[0]
            if not abs(b) < abs(self.scale):
                raise InvalidParameterError("need |a/b| > 1")
        else:
            if len(self.coeffs) != 2:
                raise InvalidParameterError("BOUNDARY_XI_ZERO needs coeffs=(b, c)")
            if self.coeffs[1] == 0:
                raise InvalidParameterError("quadratic coefficient c must be nonzero")
            if not np.all(np.abs(self.numerator_roots) > 1):
                raise InvalidParameterError("numerator roots must have modulus > 1")

    @property
    def map_exponent(self) -> float:
        if self.kind is FamilyKind.AREA_NODE_OFFORIGIN:
            return 1.0 / (self.p + 1)
        return 1.0 / self.p

    @property
    def numerator_roots(self) -> np.ndarray:
        """Roots of a + b t (+ c t²); empty for the area family."""
        if self.kind is FamilyKind.AREA_NODE_OFFORIGIN:
            return np.array([], dtype=complex)
        a = self.scale
        if self.kind is FamilyKind.BOUNDARY_XI_NONZERO:
            b = self.coeffs[0]
            return np.array([], dtype=complex) if b == 0 else np.array([-a / b])
        b, c = self.coeffs
        return np.roots([c, b, a]).astype(complex)

    def evaluate(self, t):
        """φ(t) and φ'(t) for |t| ≤ 1 (vectorised)."""
        t = np.asarray(t, dtype=complex)
        beta = self.map_exponent
        zb = np.conj(self.zeta0)
        den = 1.0 - t * zb
        if self.kind is FamilyKind.AREA_NODE_OFFORIGIN:
            lead = self.scale
        else:
            lead = self.scale ** beta
        g = den ** (-beta)
        logd = beta * zb / den
        for rho in self.numerator_roots:
            fac = 1.0 - t / rho
            g = g * fac ** beta
            logd = logd - beta / (rho * fac)
        value = lead * t * g
        deriv = lead * g * (1.0 + t * logd)
        return value, deriv

    def image(self, n_polygon: int = 4096) -> ConformalImage:
        return ConformalImage(self, n_polygon)

    def predicted_area_node(self) -> complex:
        """φ(ζ₀): node of the |z|^(2p) dA identity (area family)."""
        return complex(self.evaluate(self.zeta0)[0])

    def predicted_boundary_nodes(self) -> list[complex]:
        """Nodes of the |z|^(-2p) dz identity: φ at the reflections 1/ρ̄ of the numerator
        roots, except a reflection cancelled by the pole factor 1 - t ζ̄₀."""
        nodes = []
        for rho in self.numerator_roots:
            refl = 1.0 / np.conj(rho)
            if abs(refl - self.zeta0) > 1e-12:
                nodes.append(complex(self.evaluate(refl)[0]))
        return nodes


def eval_map(family: ConformalFamily, t):
    return family.evaluate(t)


def one_point_xi_zero(p: int, a: complex, rho1: complex, rho2: complex) -> ConformalFamily:
    """BOUNDARY_XI_ZERO instance with numerator a(1 - t/ρ₁)(1 - t/ρ₂) and ζ₀ = 1/ρ̄₁.

    The pole cancels the first numerator factor, which is the configuration
    that leaves a single node φ(1/ρ̄₂).
    """
    a = complex(a)
    b = -a * (1.0 / rho1 + 1.0 / rho2)
    c = a / (rho1 * rho2)
    return ConformalFamily(FamilyKind.BOUNDARY_XI_ZERO, p, a, 1.0 / np.conj(rho1), (b, c))


# ---------------------------------------------------------------- univalence


def check_univalence(family: ConformalFamily, n: int = 4096) -> bool:
    """Numerical univalence test on n boundary samples.

    Passes iff φ' has no zeros in the disc (zero winding of φ'(e^{iθ})),
    the boundary polygon winds once around φ(0), no two non-adjacent samples
    nearly coincide, and the polygon is simple.
    """
    if n < 1024:
        raise InvalidParameterError("n must be >= 1024")
    e = np.exp(2j * np.pi * np.arange(n) / n)
    z, dz = family.evaluate(e)
    if not (np.all(np.isfinite(z)) and np.all(np.isfinite(dz))):
        return False
    if np.any(dz == 0):
        return False
    wind_d = _winding(dz, 0j)
    if wind_d != 0:
        return False
    z0 = complex(family.evaluate(0j)[0])
    if _winding(z, z0) != 1:
        return False
    diam = np.max(np.abs(z - z.mean())) * 2
    if _near_coincidence(z, 1e-9 * diam):
        return False
    return _polygon_is_simple(z)


def _winding(curve: np.ndarray, point: complex) -> int:
    ang = np.unwrap(np.angle(np.append(curve, curve[0]) - point))
    return int(round((ang[-1] - ang[0]) / (2 * np.pi)))


def _near_coincidence(z: np.ndarray, tol: float) -> bool:
    from scipy.spatial import cKDTree

    pts = np.column_stack([z.real, z.imag])
    pairs = cKDTree(pts).query_pairs(tol, output_type="ndarray")
    n = len(z)
    if len(pairs) == 0:
        return False
    gap = np.abs(pairs[:, 0] - pairs[:, 1])
    return bool(np.any(np.minimum(gap, n - gap) > 1))


def _polygon_is_simple(z: np.ndarray) -> bool:
    """No two non-adjacent edges of the closed polygon intersect."""
    n = len(z)
    a = z
    b = np.roll(z, -1)
    lo_x, hi_x = np.minimum(a.real, b.real), np.maximum(a.real, b.real)
    lo_y, hi_y = np.minimum(a.imag, b.imag), np.maximum(a.imag, b.imag)
    idx = np.arange(n)
    chunk = 256
    for s in range(0, n, chunk):
        i = idx[s:s + chunk, None]
        j = idx[None, :]
        boxes = ((lo_x[i] <= hi_x[j]) & (lo_x[j] <= hi_x[i]) &
                 (lo_y[i] <= hi_y[j]) & (lo_y[j] <= hi_y[i]))
        gap = np.abs(i - j)
        boxes &= np.minimum(gap, n - gap) > 1
        ii, jj = np.nonzero(boxes)
        if ii.size == 0:
            continue
        ii = ii + s
        p1, p2, p3, p4 = a[ii], b[ii], a[jj], b[jj]
        d1 = _cross(p3, p4, p1)
        d2 = _cross(p3, p4, p2)
        d3 = _cross(p1, p2, p3)
        d4 = _cross(p1, p2, p4)
        if np.any((d1 * d2 <= 0) & (d3 * d4 <= 0)):
            return False
    return True


def _cross(o, a, b):
    return ((a - o).real * (b - o).imag - (a - o).imag * (b - o).real)


# ---------------------------------------------------------------- quadrature data


def extract_node_and_constant(family: ConformalFamily, weight_exponent: int, rel_tol: float = 1e-12):
    """Recover (node, constant) of a one-point identity on the image domain.

    weight_exponent e ≥ 0: area measure |z|^e dA, with c = ∫ |z|^e dA and
    node = ∫ z |z|^e dA / c (pulled back to the disc with Jacobian |φ'|²).
    e < 0: boundary measure |z|^e dz, with the same moment quotient of
    contour integrals ∮ z^k |z|^e dz.
    """
    from .quadrature import integrate_area, integrate_boundary

    region = family.image()
    e = weight_exponent
    if e >= 0:
        c = integrate_area(lambda z: np.abs(z) ** e, region, rel_tol).value
        m1 = integrate_area(lambda z: z * np.abs(z) ** e, region, rel_tol).value
    else:
        n = 4096
        c = integrate_boundary(lambda z: np.abs(z) ** float(e), region, n).value
        m1 = integrate_boundary(lambda z: z * np.abs(z) ** float(e), region, n).value
    return complex(m1 / c), complex(c)


def image_contains(family: ConformalFamily, z, n: int = 4096):
    e = np.exp(2j * np.pi * np.arange(n) / n)
    poly, _ = family.evaluate(e)
    return points_in_polygon(poly, z)
