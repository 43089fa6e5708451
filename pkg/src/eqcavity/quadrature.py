"""Area, contour and logarithmic-potential integration over regions.

Smooth regions are integrated through a *chart*: a parameter disc together
with one or more maps onto the region (identity for discs, the p-th root for
power-lemniscate branches, all p roots for whole lemniscates in the w = z^p
plane, a conformal map for images of the unit disc, Newton-inverted ψ for
mapped discs). The parameter disc is covered by a polar product rule,
Gauss-Legendre in the radius and the trapezoid rule in the angle, so smooth
integrands converge spectrally.

Logarithmic kernels are singular at the evaluation point. When that point
lies inside the region the polar rule is re-centred at its preimage and
the radial variable is graded (s ∝ x²), which turns the s·ln s behaviour
into a smooth integrand.

Integrands are vectorised callables taking a complex ndarray. Sums are
numpy pairwise reductions over a fixed node order, so results do not depend
on how the evaluation was chunked across threads (EQCAVITY_THREADS).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DegenerateRegionError, IntegrationError, InvalidParameterError
from .regions import (
    Annulus,
    ConformalImage,
    Disc,
    MappedDisc,
    PowerLemniscate,
    RootSetClass,
    SupportDescription,
    boundary_points,
    bounding_box,
    distance_to_boundary,
)

AREA_LEVELS = ((32, 128), (64, 256), (96, 512), (128, 1024), (160, 2048))
POTENTIAL_LEVELS = ((32, 128), (64, 256), (96, 512), (128, 1024), (128, 2048), (160, 4096), (192, 8192))
QUADTREE_DEPTH = 12
SUBTRACTION_RADIUS = 1e-3


@dataclass(frozen=True)
class IntegrationResult:
    value: complex
    error_estimate: float
    evaluations: int

    @property
    def real(self) -> float:
        return float(np.real(self.value))


# ---------------------------------------------------------------- plumbing


def _threads() -> int:
    try:
        n = int(os.environ.get("EQCAVITY_THREADS", "1"))
    except ValueError:
        return 1
    return max(1, n)


def evaluate(f, z: np.ndarray) -> np.ndarray:
    """Apply a vectorised integrand, optionally chunked over EQCAVITY_THREADS threads."""
    z = np.asarray(z, dtype=complex)
    n = _threads()
    if n == 1 or z.size < 8192:
        return np.broadcast_to(np.asarray(f(z)), z.shape)
    flat = z.ravel()
    chunks = np.array_split(flat, n)
    with ThreadPoolExecutor(max_workers=n) as pool:
        parts = list(pool.map(lambda c: np.broadcast_to(np.asarray(f(c)), c.shape), chunks))
    return np.concatenate(parts).reshape(z.shape)


@lru_cache(maxsize=None)
def gauss01(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1.0) / 2.0, w / 2.0


def _polar_rule(center: complex, radius: float, ns: int, nt: int, inner: float = 0.0):
    """Nodes (ns, nt) ordered outward along rays from ``center`` and area weights."""
    x, w = gauss01(ns)
    s = inner + (radius - inner) * x
    th = 2.0 * np.pi * np.arange(nt) / nt
    t = center + s[:, None] * np.exp(1j * th)[None, :]
    wt = ((radius - inner) * w * s)[:, None] * np.full(nt, 2.0 * np.pi / nt)[None, :]
    return t, wt


def _offcenter_rule(center: complex, radius: float, origin: complex, ns: int, nt: int):
    """Polar rule on D_radius(center) centred at an interior point ``origin``.

    The radial variable is s = s_max(θ) x², which absorbs an s ln s factor.
    """
    x, w = gauss01(ns)
    th = 2.0 * np.pi * np.arange(nt) / nt
    e = np.exp(1j * th)
    d = origin - center
    b = (np.conj(d) * e).real
    smax = -b + np.sqrt(b * b + radius * radius - abs(d) ** 2)
    s = smax[None, :] * (x * x)[:, None]
    t = origin + s * e[None, :]
    wt = 2.0 * smax[None, :] ** 2 * (w * x ** 3)[:, None] * (2.0 * np.pi / nt)
    return t, wt


def _star_rule(lem: PowerLemniscate, ns: int, nt: int):
    x, w = gauss01(ns)
    th = 2.0 * np.pi * np.arange(nt) / nt
    smax = lem.star_radius(th)
    s = smax[None, :] * x[:, None]
    z = s * np.exp(1j * th)[None, :]
    wt = smax[None, :] ** 2 * (w * x)[:, None] * (2.0 * np.pi / nt)
    return z, wt


# ---------------------------------------------------------------- charts


class _Chart:
    """Parameter disc plus sheet maps; push() returns [(z, jacobian), ...]."""

    def __init__(self, center, radius):
        self.center = complex(center)
        self.radius = float(radius)

    def push(self, t, origin, origin_z):
        raise NotImplementedError

    def preimage(self, z):
        """Parameter point mapped to z, or None if z is not in the region."""
        raise NotImplementedError

    def seed(self):
        return None


class _DiscChart(_Chart):
    def __init__(self, disc: Disc):
        super().__init__(disc.center, disc.radius)
        self.disc = disc

    def push(self, t, origin, origin_z):
        return [(t, np.ones(t.shape))]

    def preimage(self, z):
        return complex(z) if self.disc.contains(z) else None


class _BranchChart(_Chart):
    def __init__(self, lem: PowerLemniscate):
        super().__init__(lem.center_w, lem.level)
        self.lem = lem

    def push(self, t, origin, origin_z):
        p = self.lem.power
        z = self.lem.branch_root(t)
        return [(z, 1.0 / (p * p * np.abs(z) ** (2 * p - 2)))]

    def preimage(self, z):
        return complex(z) ** self.lem.power if self.lem.contains(z) else None


class _SheetsChart(_Chart):
    """Whole lemniscate pulled back to the w = z^p plane: p sheets."""

    def __init__(self, lem: PowerLemniscate):
        super().__init__(lem.center_w, lem.level)
        self.lem = lem

    def push(self, t, origin, origin_z):
        p = self.lem.power
        root = t ** (1.0 / p)
        out = []
        for k in range(p):
            z = root * np.exp(2j * np.pi * k / p)
            out.append((z, 1.0 / (p * p * np.abs(z) ** (2 * p - 2))))
        return out

    def preimage(self, z):
        return complex(z) ** self.lem.power if self.lem.contains(z) else None


class _ConformalChart(_Chart):
    def __init__(self, region: ConformalImage):
        super().__init__(0.0, 1.0)
        self.region = region

    def push(self, t, origin, origin_z):
        z, dz = self.region.evaluate(t)
        return [(z, np.abs(dz) ** 2)]

    def preimage(self, z):
        if not self.region.contains(z):
            return None
        t = self.region.preimage(z)
        return t if abs(t) < 1 else None


class _MappedChart(_Chart):
    def __init__(self, region: MappedDisc):
        super().__init__(region.center_w, region.radius)
        self.region = region

    def push(self, t, origin, origin_z):
        if origin_z is None:
            origin_z = self.region.seed
        z = self.region.psi_rays(origin, origin_z, t)
        return [(z, 1.0 / np.abs(self.region.local.dphi_p(z)) ** 2)]

    def preimage(self, z):
        if not self.region.contains(z):
            return None
        return complex(self.region.local.phi_p(complex(z)))


def _chart(region, *, weighted: bool):
    """Chart for a region, or None if the region has no chart.

    ``weighted`` integrands carry the equilibrium density, whose zero at the
    origin cancels the p-sheet Jacobian singularity, so connected lemniscates
    can then use the w-plane chart.
    """
    if isinstance(region, Disc):
        return _DiscChart(region)
    if isinstance(region, PowerLemniscate):
        if region.is_branch:
            return _BranchChart(region)
        cls = region.classification
        if cls is RootSetClass.TOUCHES_ORIGIN:
            raise DegenerateRegionError("lemniscate touching the origin")
        if cls is RootSetClass.DISJOINT_BRANCHES or weighted or region.power == 1:
            return _SheetsChart(region)
        return None
    if isinstance(region, ConformalImage):
        return _ConformalChart(region)
    if isinstance(region, MappedDisc):
        return _MappedChart(region)
    return None


def _chart_sum(chart: _Chart, g, ns, nt, singular_at=None, singular_z=None):
    """Σ over sheets of g(z) * J * w, plus Σ |g| J w, and node count."""
    if singular_at is None:
        t, wt = _polar_rule(chart.center, chart.radius, ns, nt)
        origin, origin_z = chart.center, None
    else:
        t, wt = _offcenter_rule(chart.center, chart.radius, singular_at, ns, nt)
        origin, origin_z = singular_at, singular_z
    total = 0j
    absolute = 0.0
    count = 0
    for z, jac in chart.push(t, origin, origin_z):
        vals = evaluate(g, z) * jac * wt
        total += np.sum(vals)
        absolute += np.sum(np.abs(vals))
        count += z.size
    return total, absolute, count


def _adaptive(compute, levels, rel_tol, what):
    """Run ``compute(ns, nt)`` over increasing levels until successive values agree."""
    prev = None
    evals = 0
    best = None
    for ns, nt in levels:
        value, scale, n = compute(ns, nt)
        evals += n
        if prev is not None:
            err = abs(value - prev)
            best = (value, err)
            if err <= rel_tol * max(abs(value), scale):
                return IntegrationResult(complex(value), float(err), evals)
        prev = value
    raise IntegrationError(f"{what}: tolerance {rel_tol:g} not met", best[0], best[1])


# ---------------------------------------------------------------- area integrals


def integrate_area(f, region, rel_tol: float = 1e-10) -> IntegrationResult:
    """∫_region f dA with an error estimate from successive rule refinements."""
    if rel_tol < 1e-12:
        raise InvalidParameterError("rel_tol must be >= 1e-12")
    if isinstance(region, SupportDescription):
        parts = [integrate_area(f, region.base, rel_tol)]
        parts += [integrate_area(f, c, rel_tol) for c in region.cavities]
        value = parts[0].value - sum(p.value for p in parts[1:])
        return IntegrationResult(value, sum(p.error_estimate for p in parts),
                                 sum(p.evaluations for p in parts))
    if isinstance(region, Annulus):
        def compute(ns, nt):
            t, wt = _polar_rule(region.center, region.outer, ns, nt, inner=region.inner)
            vals = evaluate(f, t) * wt
            return np.sum(vals), np.sum(np.abs(vals)), t.size
        return _adaptive(compute, AREA_LEVELS, rel_tol, "annulus")
    chart = _chart(region, weighted=False)
    if chart is not None:
        def compute(ns, nt):
            return _chart_sum(chart, f, ns, nt)
        return _adaptive(compute, AREA_LEVELS, rel_tol, type(region).__name__)
    if isinstance(region, PowerLemniscate):
        def compute(ns, nt):
            z, wt = _star_rule(region, ns, nt)
            vals = evaluate(f, z) * wt
            return np.sum(vals), np.sum(np.abs(vals)), z.size
        return _adaptive(compute, AREA_LEVELS, rel_tol, "star lemniscate")
    return integrate_quadtree(f, region, rel_tol=rel_tol)


def integrate_quadtree(f, region, rel_tol: float = 1e-4, max_depth: int = QUADTREE_DEPTH,
                       exclude: tuple[complex, float] | None = None) -> IntegrationResult:
    """Fallback for regions known only through contains() and a boundary.

    Interior cells get a 4x4 Gauss rule; cells straddling the boundary are
    split down to ``max_depth`` and then integrated with node masking. The
    error estimate is the change between depths max_depth-1 and max_depth.
    ``exclude`` removes a small disc (centre, radius) from the region.
    """
    x0, x1, y0, y1 = bounding_box(region)
    size = max(x1 - x0, y1 - y0) * 1.001
    cx, cy = (x0 + x1) / 2, (y0 + y1) / 2
    corner = complex(cx - size / 2, cy - size / 2)

    def member(z):
        m = np.asarray(region.contains(z))
        if exclude is not None:
            m = m & (np.abs(z - exclude[0]) > exclude[1])
        return m

    def dist(z):
        d = np.asarray(distance_to_boundary(region, z))
        if exclude is not None:
            d = np.minimum(d, np.abs(np.abs(z - exclude[0]) - exclude[1]))
        return d

    gx, gw = gauss01(4)
    offs = (gx[:, None] + 1j * gx[None, :]).ravel()
    wts = (gw[:, None] * gw[None, :]).ravel()

    def run(depth):
        cells = np.array([corner])
        h = size
        total, evals = 0j, 0
        for level in range(depth + 1):
            centers = cells + h * (0.5 + 0.5j)
            clear = dist(centers) > h * np.sqrt(0.5)
            inside = member(centers)
            full = cells[clear & inside]
            if full.size:
                z = full[:, None] + h * offs[None, :]
                total += np.sum(evaluate(f, z) * wts[None, :]) * h * h
                evals += z.size
            amb = cells[~clear]
            if level == depth:
                if amb.size:
                    z = amb[:, None] + h * offs[None, :]
                    vals = np.where(member(z), evaluate(f, z), 0.0)
                    total += np.sum(vals * wts[None, :]) * h * h
                    evals += z.size
                break
            h = h / 2
            cells = (amb[:, None] + h * np.array([0, 1, 1j, 1 + 1j])[None, :]).ravel()
        return total, evals

    fine, n1 = run(max_depth)
    coarse, n2 = run(max_depth - 1)
    return IntegrationResult(complex(fine), float(abs(fine - coarse)), n1 + n2)


# ---------------------------------------------------------------- contour integrals


def integrate_boundary(f, region, n: int = 1024) -> IntegrationResult:
    """∮ f(z) dz over the positively oriented boundary by the trapezoid rule.

    The error estimate compares against the n/2-point rule on every other sample.
    """
    if n < 64 or n & (n - 1):
        raise InvalidParameterError("n must be a power of two >= 64")
    curves = boundary_points(region, n)
    total, half = 0j, 0j
    for z, dz in curves:
        vals = evaluate(f, z) * dz
        total += np.sum(vals) * (2.0 * np.pi / n)
        half += np.sum(vals[::2]) * (4.0 * np.pi / n)
    return IntegrationResult(complex(total), float(abs(total - half)), n * len(curves))


# ---------------------------------------------------------------- potentials


def log_potential_numeric(field, region, z: complex, rel_tol: float = 1e-10) -> float:
    """∫_region ln(1/|w - z|) ρ(w) dA_w with ρ = field.density (the (1+q)ΔQ/2π density)."""
    return log_potential_result(field, region, z, rel_tol).real


def log_potential_result(field, region, z: complex, rel_tol: float = 1e-10) -> IntegrationResult:
    if rel_tol < 1e-10:
        raise InvalidParameterError("rel_tol must be >= 1e-10")
    z = complex(z)
    if isinstance(region, SupportDescription):
        parts = [log_potential_result(field, region.base, z, rel_tol)]
        parts += [log_potential_result(field, c, z, rel_tol) for c in region.cavities]
        value = parts[0].value - sum(p.value for p in parts[1:])
        return IntegrationResult(value, sum(p.error_estimate for p in parts),
                                 sum(p.evaluations for p in parts))
    if isinstance(region, Annulus):
        outer = log_potential_result(field, Disc(region.center, region.outer), z, rel_tol)
        inner = log_potential_result(field, Disc(region.center, region.inner), z, rel_tol)
        return IntegrationResult(outer.value - inner.value,
                                 outer.error_estimate + inner.error_estimate,
                                 outer.evaluations + inner.evaluations)

    def kernel(w):
        with np.errstate(divide="ignore"):
            return field.density(w) * -np.log(np.abs(w - z))

    chart = _chart(region, weighted=True)
    if chart is None:
        return _quadtree_potential(field, region, z, rel_tol)
    t_star = chart.preimage(z)
    if t_star is not None and abs(t_star - chart.center) >= chart.radius * (1 - 1e-14):
        t_star = None

    def compute(ns, nt):
        if t_star is None:
            return _chart_sum(chart, kernel, ns, nt)
        return _chart_sum(chart, kernel, ns, nt, singular_at=t_star, singular_z=z)

    return _adaptive(compute, POTENTIAL_LEVELS, rel_tol, "log potential")


def _quadtree_potential(field, region, z, rel_tol):
    # small-disc singularity subtraction; lower accuracy path
    x0, x1, y0, y1 = bounding_box(region)
    delta = SUBTRACTION_RADIUS * np.hypot(x1 - x0, y1 - y0)

    def kernel(w):
        with np.errstate(divide="ignore"):
            return field.density(w) * -np.log(np.abs(w - z))

    res = integrate_quadtree(kernel, region, exclude=(z, delta))
    inner = 0.0
    if region.contains(z) and distance_to_boundary(region, z) > delta:
        inner = float(field.density(z)) * np.pi * delta ** 2 * (np.log(1.0 / delta) + 0.5)
    return IntegrationResult(res.value + inner, res.error_estimate, res.evaluations)
