"""Regions: discs, annuli, power lemniscates {|z^p - c| < r} and their
branch components, conformal images, sampled curves and supports with
cavities.

Every region type exposes ``contains(z)`` (vectorised, strict interior) and
``boundary(n)`` returning a list of ``(points, velocity)`` pairs sampled at
θ_k = 2πk/n, positively oriented with respect to the region.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field as dc_field
from functools import cached_property

import numpy as np

from .errors import (
    ClosedFormUnavailableError,
    DegenerateRegionError,
    InvalidParameterError,
    NewtonDivergenceError,
)

TOUCH_RTOL = 1e-14
CONTAINMENT_TOL = 1e-12


class RootSetClass(enum.Enum):
    DISJOINT_BRANCHES = "disjoint_branches"
    TOUCHES_ORIGIN = "touches_origin"
    CONNECTED_CONTAINS_ORIGIN = "connected_contains_origin"


class Regime(enum.Enum):
    NO_SOURCES = "no_sources"
    DISJOINT_ROOTS = "disjoint_roots"
    CONNECTED_LEMNISCATE = "connected_lemniscate"
    ANNULUS = "annulus"
    CONFORMAL_CAVITY = "conformal_cavity"
    UNSUPPORTED = "unsupported"


def classify_root_set(center_w: complex, level: float, power: int) -> RootSetClass:
    """Topology of {z : |z^p - c| < r}: p disjoint branches, touching at 0, or one
    connected set around 0."""
    if level <= 0:
        raise InvalidParameterError("level must be positive")
    a = abs(center_w)
    if abs(level - a) <= TOUCH_RTOL * a:
        return RootSetClass.TOUCHES_ORIGIN
    if level < a:
        return RootSetClass.DISJOINT_BRANCHES
    return RootSetClass.CONNECTED_CONTAINS_ORIGIN


def _theta(n: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(n) / n


def _as_complex(z) -> np.ndarray:
    return np.asarray(z, dtype=complex)


def _scalarise(a: np.ndarray):
    return a[()] if a.ndim == 0 else a


def points_in_polygon(poly: np.ndarray, z) -> np.ndarray:
    """Even-odd crossing test of points against a closed polygon (vertices in order)."""
    z = _as_complex(z)
    flat = z.ravel()
    x0, y0 = poly.real, poly.imag
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    inside = np.zeros(flat.shape, dtype=bool)
    chunk = max(1, 4_000_000 // max(len(poly), 1))
    for start in range(0, flat.size, chunk):
        px = flat.real[start:start + chunk, None]
        py = flat.imag[start:start + chunk, None]
        straddle = (y0 > py) != (y1 > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xcross = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
        hits = straddle & (px < xcross)
        inside[start:start + chunk] = (hits.sum(axis=1) % 2) == 1
    return inside.reshape(z.shape)


def reverse_curve(z: np.ndarray, dz: np.ndarray):
    """Same curve traversed backwards, still sampled at θ_k = 2πk/n."""
    idx = (-np.arange(len(z))) % len(z)
    return z[idx], -dz[idx]


def spectral_derivative(z: np.ndarray) -> np.ndarray:
    """d/dθ of periodic samples on the uniform grid θ_k = 2πk/n."""
    n = len(z)
    k = np.fft.fftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        k[n // 2] = 0.0
    return np.fft.ifft(1j * k * np.fft.fft(z))


def _fourier_resample(z: np.ndarray, n: int) -> np.ndarray:
    m = len(z)
    if n == m:
        return z.copy()
    c = np.fft.fft(z) / m
    k = np.rint(np.fft.fftfreq(m, d=1.0 / m)).astype(int)
    keep = np.abs(k) < min(m, n) / 2
    out = np.zeros(n, dtype=complex)
    out[k[keep] % n] = c[keep]
    return np.fft.ifft(out) * n


# ---------------------------------------------------------------- basic shapes


@dataclass(frozen=True)
class Disc:
    center: complex
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        if not self.radius > 0:
            raise InvalidParameterError("disc radius must be positive")

    def contains(self, z):
        return _scalarise(np.abs(_as_complex(z) - self.center) < self.radius)

    def boundary(self, n: int):
        e = np.exp(1j * _theta(n))
        return [(self.center + self.radius * e, 1j * self.radius * e)]

    def distance_to_boundary(self, z):
        return np.abs(np.abs(_as_complex(z) - self.center) - self.radius)


@dataclass(frozen=True)
class Annulus:
    center: complex
    inner: float
    outer: float

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        if not 0 < self.inner < self.outer:
            raise InvalidParameterError("annulus needs 0 < inner < outer")

    def contains(self, z):
        d = np.abs(_as_complex(z) - self.center)
        return _scalarise((d > self.inner) & (d < self.outer))

    def boundary(self, n: int):
        (outer,) = Disc(self.center, self.outer).boundary(n)
        (inner,) = Disc(self.center, self.inner).boundary(n)
        return [outer, reverse_curve(*inner)]

    def distance_to_boundary(self, z):
        d = np.abs(_as_complex(z) - self.center)
        return np.minimum(np.abs(d - self.inner), np.abs(d - self.outer))


@dataclass(frozen=True)
class PowerLemniscate:
    """{z : |z^p - c| < r}, or the single branch component through ``representative``.

    A branch is only meaningful when r < |c|; it is the image of the disc
    D_r(c) under the continuous p-th root through the representative point.
    """

    power: int
    center_w: complex
    level: float
    representative: complex | None = None

    def __post_init__(self):
        object.__setattr__(self, "center_w", complex(self.center_w))
        if int(self.power) != self.power or self.power < 1:
            raise InvalidParameterError("power must be a positive integer")
        if not self.level > 0:
            raise InvalidParameterError("level must be positive")
        if self.representative is not None:
            rep = complex(self.representative)
            object.__setattr__(self, "representative", rep)
            if self.classification is not RootSetClass.DISJOINT_BRANCHES:
                raise InvalidParameterError(
                    "a branch component requires level < |center_w| (disjoint branches)")
            if not abs(rep ** self.power - self.center_w) < self.level:
                raise InvalidParameterError("representative point is not inside the lemniscate")

    @property
    def is_branch(self) -> bool:
        return self.representative is not None

    @property
    def classification(self) -> RootSetClass:
        return classify_root_set(self.center_w, self.level, self.power)

    def branch_root(self, w):
        """Continuous p-th root on D_r(c) through the representative point."""
        rep = self.representative
        w = _as_complex(w)
        wrep = rep ** self.power
        # D_r(c) sits inside an open half-plane through 0, so w/wrep never crosses (-inf, 0]
        return _scalarise(rep * (w / wrep) ** (1.0 / self.power))

    @property
    def node(self) -> complex:
        """The point of the branch mapped to the disc centre (the source location)."""
        return complex(self.branch_root(self.center_w))

    def branches(self) -> list["PowerLemniscate"]:
        if self.classification is not RootSetClass.DISJOINT_BRANCHES:
            raise DegenerateRegionError("branches exist only for disjoint root sets")
        p = self.power
        root = abs(self.center_w) ** (1.0 / p) * np.exp(1j * np.angle(self.center_w) / p)
        return [PowerLemniscate(p, self.center_w, self.level, root * np.exp(2j * np.pi * k / p))
                for k in range(p)]

    def contains(self, z):
        z = _as_complex(z)
        p = self.power
        w = z ** p
        inside = np.abs(w - self.center_w) < self.level
        if not self.is_branch or p == 1:
            return _scalarise(inside)
        br = np.where(inside, self.branch_root(np.where(inside, w, self.center_w)), 0)
        same = np.abs(z - br) < np.abs(z) * np.sin(np.pi / p)
        return _scalarise(inside & same)

    def boundary(self, n: int):
        cls = self.classification
        if cls is RootSetClass.TOUCHES_ORIGIN:
            raise DegenerateRegionError("lemniscate touching the origin has a corner at 0")
        p, c, r = self.power, self.center_w, self.level
        th = _theta(n)
        if self.is_branch:
            e = np.exp(1j * th)
            z = self.branch_root(c + r * e)
            dz = 1j * r * e / (p * z ** (p - 1))
            return [(z, dz)]
        if cls is RootSetClass.DISJOINT_BRANCHES:
            out = []
            for b in self.branches():
                out.extend(b.boundary(n))
            return out
        # star-shaped about 0: along z = s e^{iθ}, u = s^p solves u^2 - 2bu + |c|^2 - r^2 = 0
        e_p = np.exp(1j * p * th)
        b = (np.conj(c) * e_p).real
        db = -p * (np.conj(c) * e_p).imag
        disc = np.sqrt(b * b + r * r - abs(c) ** 2)
        u = b + disc
        du = db + b * db / disc
        s = u ** (1.0 / p)
        ds = s * du / (p * u)
        e = np.exp(1j * th)
        return [(s * e, (ds + 1j * s) * e)]

    def star_radius(self, theta):
        """s_max(θ) for the connected (star-shaped) regime."""
        p, c, r = self.power, self.center_w, self.level
        b = (np.conj(c) * np.exp(1j * p * np.asarray(theta))).real
        return (b + np.sqrt(b * b + r * r - abs(c) ** 2)) ** (1.0 / p)

    def distance_to_boundary(self, z, n: int = 4096):
        return _sampled_distance(self, z, n)


@dataclass(frozen=True, eq=False)
class SampledCurve:
    """Region bounded by a smooth closed curve given by uniform samples z(θ_k),
    positively oriented. Velocities come from spectral differentiation."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex)
        if pts.ndim != 1 or len(pts) < 8:
            raise InvalidParameterError("need at least 8 boundary samples")
        object.__setattr__(self, "points", pts)

    @cached_property
    def velocity(self) -> np.ndarray:
        return spectral_derivative(self.points)

    def contains(self, z):
        return _scalarise(points_in_polygon(self.points, z))

    def boundary(self, n: int):
        if n == len(self.points):
            return [(self.points, self.velocity)]
        z = _fourier_resample(self.points, n)
        return [(z, spectral_derivative(z))]

    def distance_to_boundary(self, z):
        return _polyline_distance(self.points, z)


@dataclass(frozen=True, eq=False)
class ConformalImage:
    """Image of the unit disc under ``family.evaluate`` (returns value, derivative)."""

    family: object
    n_polygon: int = 4096

    def evaluate(self, t):
        return self.family.evaluate(t)

    @cached_property
    def _polygon(self) -> np.ndarray:
        z, _ = self.evaluate(np.exp(1j * _theta(self.n_polygon)))
        return z

    def contains(self, z):
        return _scalarise(points_in_polygon(self._polygon, z))

    def boundary(self, n: int):
        e = np.exp(1j * _theta(n))
        z, dz = self.evaluate(e)
        return [(z, dz * 1j * e)]

    def preimage(self, z: complex) -> complex:
        """Newton inversion of the map, seeded from the nearest point on a polar grid."""
        s = np.linspace(0.05, 0.95, 19)
        th = _theta(64)
        grid = (s[:, None] * np.exp(1j * th[None, :])).ravel()
        grid = np.concatenate([[0j], grid])
        vals, _ = self.evaluate(grid)
        t = grid[np.argmin(np.abs(vals - z))]
        for _ in range(60):
            f, df = self.evaluate(t)
            step = (f - z) / df
            t = t - step
            if abs(step) < 1e-15:
                break
        return complex(t)

    def distance_to_boundary(self, z):
        return _polyline_distance(self._polygon, z)


def newton_paths(fun, dfun, z_start, targets, *, tol=1e-13, maxit=40):
    """Track solutions of fun(z) = w along columns of ``targets``.

    ``targets`` has shape (m, k): column j is a path of m target values whose
    first entry is close to fun(z_start[j]). Returns the (m, k) solutions.
    Raises NewtonDivergenceError if a step fails to converge; the error lists
    the columns that did converge.
    """
    targets = np.atleast_2d(np.asarray(targets, dtype=complex))
    z = np.broadcast_to(np.asarray(z_start, dtype=complex), targets.shape[1:]).copy()
    out = np.empty_like(targets)
    ok = np.ones(targets.shape[1], dtype=bool)
    for i, w in enumerate(targets):
        for _ in range(maxit):
            step = (fun(z) - w) / dfun(z)
            z = z - step
            if np.all(np.abs(step) <= tol * (1.0 + np.abs(z))):
                break
        resid = np.abs(fun(z) - w)
        bad = ~(resid <= 1e-11 * (1.0 + np.abs(w))) | ~np.isfinite(z)
        if np.any(bad):
            ok &= ~bad
            raise NewtonDivergenceError("Newton continuation of the local inverse diverged",
                                        valid_theta=np.nonzero(ok)[0])
        out[i] = z
    return out


@dataclass(frozen=True, eq=False)
class MappedDisc:
    """ψ(D_r(w0)) where ψ is the local inverse of ``local.phi_p`` with ψ(w0) = z0.

    ``local`` must provide ``phi_p(z)`` and ``dphi_p(z)``.
    """

    local: object
    center_w: complex
    radius: float
    seed: complex
    n_polygon: int = 2048

    def psi_rays(self, origin_w, origin_z, rays: np.ndarray) -> np.ndarray:
        """Invert along rays; rays[i, j] are points on ray j ordered outward from origin_w."""
        steps = np.vstack([np.full((1, rays.shape[1]), origin_w), rays])
        sol = newton_paths(self.local.phi_p, self.local.dphi_p,
                           np.full(rays.shape[1], origin_z), steps)
        return sol[1:]

    def _boundary_raw(self, n: int):
        th = _theta(n)
        m = 24
        frac = (np.arange(1, m + 1) / m)[:, None]
        rays = self.center_w + frac * self.radius * np.exp(1j * th)[None, :]
        try:
            z = self.psi_rays(self.center_w, self.seed, rays)[-1]
        except NewtonDivergenceError as exc:
            raise NewtonDivergenceError(str(exc), valid_theta=th[list(exc.valid_theta)]) from None
        dz = 1j * self.radius * np.exp(1j * th) / self.local.dphi_p(z)
        return z, dz

    @cached_property
    def _polygon(self) -> np.ndarray:
        return self._boundary_raw(self.n_polygon)[0]

    def contains(self, z):
        return _scalarise(points_in_polygon(self._polygon, z))

    def boundary(self, n: int):
        return [self._boundary_raw(n)]

    def distance_to_boundary(self, z):
        return _polyline_distance(self._polygon, z)


def _polyline_distance(poly: np.ndarray, z) -> np.ndarray:
    z = _as_complex(z)
    flat = z.ravel()
    a = poly
    d = np.roll(poly, -1) - a
    dd = np.abs(d) ** 2
    out = np.empty(flat.shape)
    chunk = max(1, 2_000_000 // len(poly))
    for start in range(0, flat.size, chunk):
        pz = flat[start:start + chunk, None]
        t = np.clip(((pz - a) * np.conj(d)).real / dd, 0.0, 1.0)
        out[start:start + chunk] = np.abs(pz - (a + t * d)).min(axis=1)
    return out.reshape(z.shape)


def _sampled_distance(region, z, n: int) -> np.ndarray:
    curves = region.boundary(n)
    return np.min([_polyline_distance(c[0], z) for c in curves], axis=0)


# ---------------------------------------------------------------- supports


@dataclass(frozen=True, eq=False)
class SupportDescription:
    """S_V = base \\ (union of cavities), tagged with a regime.

    For the annulus regime the hole is stored as a Disc centred at the origin.
    """

    base: Disc
    cavities: tuple = ()
    regime: Regime = Regime.NO_SOURCES
    notes: tuple[str, ...] = dc_field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "cavities", tuple(self.cavities))
        if self.regime is Regime.UNSUPPORTED:
            return
        for cav in self.cavities:
            for z, _ in cav.boundary(512):
                if np.max(np.abs(z - self.base.center)) >= self.base.radius - CONTAINMENT_TOL:
                    raise InvalidParameterError("cavity is not compactly contained in the base disc")
        if self.regime is Regime.DISJOINT_ROOTS:
            for i, a in enumerate(self.cavities):
                for b in self.cavities[i + 1:]:
                    if not regions_disjoint(a, b):
                        raise InvalidParameterError("cavities overlap")

    @property
    def annulus(self) -> Annulus:
        if self.regime is not Regime.ANNULUS:
            raise InvalidParameterError("support is not an annulus")
        return Annulus(self.base.center, self.cavities[0].radius, self.base.radius)

    def contains(self, z):
        inside = np.asarray(self.base.contains(z))
        for cav in self.cavities:
            inside = inside & ~np.asarray(cav.contains(z))
        return _scalarise(inside)

    def boundary(self, n: int):
        curves = list(self.base.boundary(n))
        for cav in self.cavities:
            curves.extend(reverse_curve(z, dz) for z, dz in cav.boundary(n))
        return curves

    def distance_to_boundary(self, z):
        d = self.base.distance_to_boundary(z)
        for cav in self.cavities:
            d = np.minimum(d, distance_to_boundary(cav, z))
        return d


def regions_disjoint(a, b, n: int = 1024) -> bool:
    """Closures disjoint: boundaries do not meet and neither region holds a point of the other."""
    za = np.concatenate([z for z, _ in a.boundary(n)])
    zb = np.concatenate([z for z, _ in b.boundary(n)])
    if np.min(np.abs(za[:, None] - zb[None, :])) <= 0:
        return False
    return not (np.any(contains(a, zb)) or np.any(contains(b, za)))


# ---------------------------------------------------------------- public API


def contains(region, z):
    return region.contains(z)


def boundary_points(region, n: int):
    """Sampled boundary as a list of (points, velocity) pairs.

    Cavity curves of a SupportDescription are negatively oriented.
    """
    if n < 8:
        raise InvalidParameterError("need n >= 8")
    if getattr(region, "regime", None) is Regime.UNSUPPORTED:
        raise DegenerateRegionError("unsupported support has no boundary description")
    return region.boundary(n)


def distance_to_boundary(region, z):
    return region.distance_to_boundary(z)


def cavity_mass_closed(field, region) -> float:
    """μ_V mass (density (1+q)ΔQ/2π) of a power-lemniscate cavity or origin-centred hole."""
    C, q = field.strength, field.q_total
    if isinstance(region, PowerLemniscate):
        per_branch = 2.0 * C * (1.0 + q) * region.level ** 2
        return per_branch if region.is_branch else region.power * per_branch
    if isinstance(region, Disc) and region.center == 0:
        p = field.halfdegree
        return (1.0 + q) * 2 * p * C * region.radius ** (2 * p)
    if isinstance(region, MappedDisc):
        return 2.0 * C * (1.0 + q) * region.radius ** 2
    fam = getattr(region, "family", None)
    if (isinstance(region, ConformalImage) and fam.kind.value == "area_node_offorigin"
            and fam.p + 1 == field.halfdegree):
        # φ^p = A^p t^p / (1 - t ζ̄₀) has area (with multiplicity) π A^(2p) Σ (p+k) x^k
        p, x = field.halfdegree, abs(fam.zeta0) ** 2
        return 2.0 * C * (1.0 + q) * abs(fam.scale) ** (2 * p) * (p * (1 - x) + x) / (1 - x) ** 2
    raise ClosedFormUnavailableError(f"no closed-form mass for {type(region).__name__}")


def bounding_box(region, n: int = 1024):
    pts = np.concatenate([z for z, _ in region.boundary(n)])
    return pts.real.min(), pts.real.max(), pts.imag.min(), pts.imag.max()
