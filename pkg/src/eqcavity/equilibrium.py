"""Equilibrium supports for Q = C|z|^(2p) with point sources, their closed-form
potentials, and numerical Frostman verification.

Conventions: the field V = (1+q)Q + Σ qⱼ ln 1/|z - zⱼ| has equilibrium
density (1+q)ΔQ/(2π) on S_V = S_Q \\ Ω, and the weighted potential
F = U^{μ_V} + V is constant (C_V = (1+q)C_Q) on S_V and ≥ C_V elsewhere.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field as dc_field

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import brentq
from scipy.stats import qmc

from .conformal import ConformalFamily, FamilyKind
from .errors import (
    ClosedFormUnavailableError,
    InvalidParameterError,
    InvalidSourceError,
    UnsupportedRegimeError,
)
from .field import FieldSpec, PointSource, eval_Q
from .quadrature import log_potential_numeric
from .regions import (
    ConformalImage,
    Disc,
    MappedDisc,
    PowerLemniscate,
    Regime,
    RootSetClass,
    SupportDescription,
    cavity_mass_closed,
    classify_root_set,
    regions_disjoint,
)

SAMPLE_BAND = 1e-3
ROOT_OF_UNITY_TOL = 1e-12


class FrostmanMode(enum.Enum):
    CLOSED = "closed"
    NUMERIC = "numeric"


@dataclass(frozen=True)
class FrostmanReport:
    constant_estimate: float
    on_support_max_deviation: float
    exterior_min_margin: float
    cavity_min_margin: float
    samples_on: int
    samples_off: int
    # (z, F(z), location) rows; location is "support", "exterior" or "cavity"
    samples: tuple = dc_field(default=(), repr=False, compare=False)

    def passed(self, tol: float = 1e-6, margin_tol: float = 1e-8) -> bool:
        return (self.on_support_max_deviation <= tol * (1.0 + abs(self.constant_estimate))
                and self.exterior_min_margin >= -margin_tol
                and self.cavity_min_margin >= -margin_tol)


# ---------------------------------------------------------------- local structure


@dataclass(frozen=True)
class LocalStructure:
    """Q(z) = C|φ(z)|^(2p) near a source; ``phi`` holds ascending polynomial coefficients."""

    phi: tuple
    strength: float
    halfdegree: int
    source: PointSource

    def __post_init__(self):
        object.__setattr__(self, "phi", tuple(complex(c) for c in self.phi))
        if not self.strength > 0:
            raise InvalidParameterError("strength must be positive")
        if int(self.halfdegree) != self.halfdegree or self.halfdegree < 1:
            raise InvalidParameterError("halfdegree must be a positive integer")
        z0 = self.source.location
        if self.phi_poly(z0) == 0:
            raise InvalidParameterError("φ(z0) must be nonzero")
        if self.dphi_p(z0) == 0:
            raise InvalidParameterError("(φ^p)'(z0) must be nonzero")

    @property
    def phi_poly(self) -> Polynomial:
        return Polynomial(self.phi)

    @property
    def q_total(self) -> float:
        return self.source.intensity

    @property
    def level(self) -> float:
        return cavity_level(self.source.intensity, self.strength)

    def phi_p(self, z):
        return self.phi_poly(z) ** self.halfdegree

    def dphi_p(self, z):
        p = self.halfdegree
        P = self.phi_poly
        return p * P(z) ** (p - 1) * P.deriv()(z)

    def laplacian(self, z):
        return 4.0 * self.strength * np.abs(self.dphi_p(z)) ** 2

    def density(self, z):
        return (1.0 + self.q_total) * self.laplacian(z) / (2.0 * np.pi)


# ---------------------------------------------------------------- base support


def support_base(C: float, p: int) -> Disc:
    if not C > 0 or int(p) != p or p < 1:
        raise InvalidParameterError("need C > 0 and integer p >= 1")
    return Disc(0.0, (2.0 * p * C) ** (-1.0 / (2 * p)))


def equilibrium_constant(C: float, p: int) -> float:
    """C_Q = 1/(2p) - ln R."""
    return 1.0 / (2 * p) - np.log(support_base(C, p).radius)


def radial_potential(C: float, p: int, z):
    """Closed-form logarithmic potential of μ_Q."""
    R = support_base(C, p).radius
    s = np.abs(np.asarray(z, dtype=complex))
    with np.errstate(divide="ignore"):
        inside = 1.0 / (2 * p) - np.log(R) - C * s ** (2 * p)
        outside = -np.log(np.where(s > R, s, R))
    out = np.where(s <= R, inside, outside)
    return out[()] if out.ndim == 0 else out


def cavity_level(q: float, C: float, q_total: float | None = None) -> float:
    """r = sqrt(q / (2C(1+q_total))); q_total defaults to q."""
    if q_total is None:
        q_total = q
    return float(np.sqrt(q / (2.0 * C * (1.0 + q_total))))


def annulus_hole_radius(q: float, C: float, p: int) -> float:
    return float((q / (2.0 * p * C * (1.0 + q))) ** (1.0 / (2 * p)))


def cassini_level(q: float, C: float, p: int) -> float:
    return float(np.sqrt(q / (2.0 * C * (1.0 + p * q))))


def cassini_threshold(C: float, p: int) -> float:
    """q* = 2C/(1 - 2pC), where the Cassini cavity components meet at the origin."""
    return 2.0 * C / (1.0 - 2.0 * p * C)


def _is_cassini(field: FieldSpec) -> bool:
    p = field.halfdegree
    if p < 2 or len(field.sources) != p:
        return False
    q = field.intensities
    if not np.all(q == q[0]):
        return False
    roots = np.exp(2j * np.pi * np.arange(p) / p)
    locs = field.locations
    return all(np.min(np.abs(locs - w)) <= ROOT_OF_UNITY_TOL for w in roots)


def build_support(field: FieldSpec, *, per_source_level: bool = False,
                  literal_connected: bool = False) -> SupportDescription:
    """Support S_V for Q = C|z|^(2p) plus the given sources.

    Multi-source cavity levels use the total intensity, rⱼ = sqrt(qⱼ/(2C(1+q))),
    which is what makes the cavity masses sum to q. ``per_source_level=True``
    uses sqrt(qⱼ/(2C(1+qⱼ))) instead; it exists only as a comparison.

    A single source whose cavity contains the origin gives, for p = 1, the
    disc D_r(z₀). For p ≥ 2 the set {|z^p - z₀^p| < r} would carry mass pq,
    so the conformal cavity of ``through_origin_cavity`` is used instead;
    ``literal_connected=True`` returns the lemniscate anyway (as a negative
    control, it fails the Frostman check).
    """
    C, p = field.strength, field.halfdegree
    base = support_base(C, p)
    R = base.radius
    for s in field.sources:
        if not abs(s.location) < R:
            raise InvalidSourceError(f"source {s.location} is not inside the base disc of radius {R}")
    srcs = field.sources
    unsupported = lambda why: SupportDescription(base, (), Regime.UNSUPPORTED, (why,))
    Rp = R ** p

    if not srcs:
        return SupportDescription(base, (), Regime.NO_SOURCES)

    if len(srcs) == 1 and srcs[0].location == 0:
        rho = annulus_hole_radius(srcs[0].intensity, C, p)
        return SupportDescription(base, (Disc(0.0, rho),), Regime.ANNULUS)

    if _is_cassini(field):
        T = cassini_level(srcs[0].intensity, C, p)
        if not 1.0 + T < Rp:
            return unsupported("Cassini cavity not compactly contained in the base disc")
        lem = PowerLemniscate(p, 1.0, T)
        cls = lem.classification
        if cls is RootSetClass.DISJOINT_BRANCHES:
            return SupportDescription(base, tuple(lem.branches()), Regime.DISJOINT_ROOTS,
                                      ("cassini",))
        if cls is RootSetClass.CONNECTED_CONTAINS_ORIGIN:
            return SupportDescription(base, (lem,), Regime.CONNECTED_LEMNISCATE, ("cassini",))
        return unsupported("Cassini cavity touches the origin")

    if any(s.location == 0 for s in srcs):
        return unsupported("source at the origin together with other sources")

    q = field.q_total
    if len(srcs) == 1:
        z0, qj = srcs[0].location, srcs[0].intensity
        r = cavity_level(qj, C, q)
        c = z0 ** p
        cls = classify_root_set(c, r, p)
        if not abs(c) + r < Rp:
            return unsupported("cavity not compactly contained in the base disc")
        if cls is RootSetClass.DISJOINT_BRANCHES:
            return SupportDescription(base, (PowerLemniscate(p, c, r, z0),), Regime.DISJOINT_ROOTS)
        if cls is RootSetClass.CONNECTED_CONTAINS_ORIGIN:
            if p == 1 or literal_connected:
                notes = () if p == 1 else (f"lemniscate carries mass {p}q, not q",)
                return SupportDescription(base, (PowerLemniscate(p, c, r),),
                                          Regime.CONNECTED_LEMNISCATE, notes)
            try:
                return through_origin_cavity(field)
            except UnsupportedRegimeError as exc:
                return unsupported(str(exc))
        return unsupported("cavity touches the origin")

    cavities = []
    for s in srcs:
        r = cavity_level(s.intensity, C, s.intensity if per_source_level else q)
        c = s.location ** p
        if not (r < abs(c) and abs(c) + r < Rp):
            return unsupported("a cavity is not a compactly contained root of a disc")
        cavities.append(PowerLemniscate(p, c, r, s.location))
    for i, a in enumerate(cavities):
        for b in cavities[i + 1:]:
            if not regions_disjoint(a, b):
                return unsupported("cavities overlap")
    return SupportDescription(base, tuple(cavities), Regime.DISJOINT_ROOTS)


def support_mass(field: FieldSpec, support: SupportDescription) -> float:
    """Closed-form μ_V mass of S_V: base mass (1+q) minus the cavity masses."""
    total = 1.0 + field.q_total
    for cav in support.cavities:
        total -= cavity_mass_closed(field, cav)
    return total


# ---------------------------------------------------------------- through-origin cavity


def through_origin_family(field: FieldSpec) -> ConformalFamily:
    """Map t ↦ A t/(1 - t ζ̄₀)^(1/p) whose image has μ_V-mass q and a one-point
    identity for |z|^(2p-2) dA at the source.

    With x = |ζ₀|² the two conditions reduce to (p - (p-1)x)/x^p = r²/|z₀|^(2p),
    solvable iff r > |z₀|^p (the connected regime).
    """
    if len(field.sources) != 1 or field.sources[0].location == 0:
        raise UnsupportedRegimeError("needs a single source away from the origin")
    p, C = field.halfdegree, field.strength
    z0, q = field.sources[0].location, field.sources[0].intensity
    r = cavity_level(q, C)
    ratio = r * r / abs(z0) ** (2 * p)
    if not ratio > 1:
        raise UnsupportedRegimeError("cavity does not contain the origin (r <= |z0|^p)")
    g = lambda x: (p - (p - 1) * x) / x ** p - ratio
    x = brentq(g, 1e-300 ** (1.0 / p), 1.0, xtol=1e-16, rtol=4 * np.finfo(float).eps)
    zeta0 = np.sqrt(x) * np.exp(1j * np.angle(z0))
    A = abs(z0) * (1.0 - x) ** (1.0 / p) / np.sqrt(x)
    return ConformalFamily(FamilyKind.AREA_NODE_OFFORIGIN, p - 1, A, zeta0)


def through_origin_cavity(field: FieldSpec) -> SupportDescription:
    fam = through_origin_family(field)
    base = support_base(field.strength, field.halfdegree)
    cav = fam.image()
    ext = np.max(np.abs(cav.boundary(1024)[0][0]))
    if not ext < base.radius:
        raise UnsupportedRegimeError(
            f"conformal cavity reaches |z| = {ext:.6g}, outside the base radius {base.radius:.6g}")
    return SupportDescription(base, (cav,), Regime.CONFORMAL_CAVITY,
                              ("through-origin conformal cavity",))


# ---------------------------------------------------------------- closed-form potentials


def F2_closed(q, r, w0, wz, inside):
    """Cavity correction F₂ = q ln(r/|wz - w0|) + (q/2)(|wz - w0|²/r² - 1) inside, 0 outside."""
    d = np.abs(np.asarray(wz, dtype=complex) - w0)
    with np.errstate(divide="ignore"):
        val = q * np.log(r / d) + 0.5 * q * (d * d / (r * r) - 1.0)
    out = np.where(np.asarray(inside), val, 0.0)
    return out[()] if out.ndim == 0 else out


def uniform_disc_potential(center: complex, radius: float, a):
    """∫_{D_radius(center)} ln 1/|u - a| dA_u (unit density)."""
    d = np.abs(np.asarray(a, dtype=complex) - center)
    with np.errstate(divide="ignore"):
        outside = np.pi * radius ** 2 * -np.log(np.where(d > 0, d, 1.0))
    inside = np.pi * radius ** 2 * (np.log(1.0 / radius) + 0.5) - 0.5 * np.pi * d * d
    out = np.where(d < radius, inside, outside)
    return out[()] if out.ndim == 0 else out


def cavity_potential_closed(field, cavity, z):
    """Logarithmic potential of (1+q)ΔQ/(2π) dA restricted to a cavity."""
    z = np.asarray(z, dtype=complex)
    C, p, q = field.strength, field.halfdegree, field.q_total
    with np.errstate(divide="ignore"):
        if isinstance(cavity, PowerLemniscate) and cavity.is_branch:
            m = cavity_mass_closed(field, cavity)
            inside = np.asarray(cavity.contains(z))
            return m * -np.log(np.abs(z - cavity.node)) - F2_closed(
                m, cavity.level, cavity.center_w, z ** p, inside)
        if isinstance(cavity, PowerLemniscate):
            return (1.0 + q) * (2.0 * C / np.pi) * uniform_disc_potential(
                cavity.center_w, cavity.level, z ** p)
        if isinstance(cavity, Disc) and cavity.center == 0:
            rho = cavity.radius
            s = np.abs(z)
            m = (1.0 + q) * 2 * p * C * rho ** (2 * p)
            inner = (1.0 + q) * (C * (rho ** (2 * p) - s ** (2 * p))
                                 + 2 * p * C * rho ** (2 * p) * np.log(1.0 / rho))
            out = np.where(s <= rho, inner, m * -np.log(np.where(s > 0, s, 1.0)))
            return out[()] if out.ndim == 0 else out
        if isinstance(cavity, MappedDisc):
            local = cavity.local
            m = 2.0 * local.strength * (1.0 + local.q_total) * cavity.radius ** 2
            inside = np.asarray(cavity.contains(z))
            return m * -np.log(np.abs(z - cavity.seed)) - F2_closed(
                m, cavity.radius, cavity.center_w, local.phi_p(z), inside)
    raise ClosedFormUnavailableError(f"no closed-form potential for {type(cavity).__name__}")


def _source_term(field: FieldSpec, z):
    out = np.zeros(z.shape)
    with np.errstate(divide="ignore"):
        for s in field.sources:
            out = out - s.intensity * np.log(np.abs(z - s.location))
    return out


def weighted_potential(field: FieldSpec, support: SupportDescription, z, mode="closed",
                       rel_tol: float = 1e-10):
    """F(z) = U^{μ_V}(z) + V(z)."""
    mode = FrostmanMode(mode)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    C, p, q = field.strength, field.halfdegree, field.q_total
    if mode is FrostmanMode.CLOSED:
        base = radial_potential(C, p, z)
    else:
        base = np.array([log_potential_numeric(field, support.base, w, rel_tol) for w in z]) / (1 + q)
    F = (1.0 + q) * (base + eval_Q(field, z)) + _source_term(field, z)
    for cav in support.cavities:
        closed = mode is FrostmanMode.CLOSED and not isinstance(cav, ConformalImage)
        if closed:
            F = F - cavity_potential_closed(field, cav, z)
        else:
            F = F - np.array([log_potential_numeric(field, cav, w, rel_tol) for w in z])
    return F


# ---------------------------------------------------------------- sampling


def _halton(n: int, seed: int, skip: int = 0) -> np.ndarray:
    eng = qmc.Halton(d=2, scramble=True, seed=seed)
    if skip:
        eng.fast_forward(skip)
    return eng.random(n)


def _disc_samples(center, r_in, r_out, n, seed):
    u = _halton(n, seed)
    s = np.sqrt(r_in ** 2 + u[:, 0] * (r_out ** 2 - r_in ** 2))
    return center + s * np.exp(2j * np.pi * u[:, 1])


def _accepting(draw, accept, n, max_rounds=64):
    """Draw batches until n accepted samples are collected (deterministic)."""
    got = []
    total = 0
    batch = max(4 * n, 64)
    for k in range(max_rounds):
        cand = draw(batch, k)
        keep = cand[accept(cand)]
        got.append(keep)
        total += keep.size
        if total >= n:
            break
    out = np.concatenate(got)[:n] if got else np.array([], dtype=complex)
    return out


def _cavity_extent(cav):
    z = np.concatenate([c for c, _ in cav.boundary(256)])
    ctr = z.mean()
    return ctr, float(np.max(np.abs(z - ctr)))


def sample_support(support: SupportDescription, n: int, seed: int = 0) -> np.ndarray:
    """Quasi-uniform points of S_V away from its boundary; a quarter of them on
    rings around the cavities, where the Frostman equality is most delicate."""
    R = support.base.radius
    band = SAMPLE_BAND * R

    def ok(z):
        return np.asarray(support.contains(z)) & (support.distance_to_boundary(z) > band)

    n_ring = n // 4 if support.cavities else 0
    pts = [_accepting(lambda m, k: _disc_samples(0j, 0.0, R, m, seed + 7919 * k), ok, n - n_ring)]
    if n_ring:
        per = [n_ring // len(support.cavities)] * len(support.cavities)
        per[0] += n_ring - sum(per)
        for j, (cav, m) in enumerate(zip(support.cavities, per)):
            if m == 0:
                continue
            ctr, ext = _cavity_extent(cav)
            pts.append(_accepting(
                lambda mm, k: _disc_samples(ctr, 0.0, 2 * ext, mm, seed + 104729 * (j + 1) + k),
                ok, m))
    return np.concatenate(pts)


def sample_off_support(support: SupportDescription, n: int, seed: int = 0):
    """(exterior points, cavity points); half of n in the cavities when there are any."""
    R = support.base.radius
    band = SAMPLE_BAND * R
    n_cav = n // 2 if support.cavities else 0
    ext = _disc_samples(0j, R * (1 + SAMPLE_BAND), 2 * R, n - n_cav, seed + 31)
    cav_pts = []
    if n_cav:
        per = [n_cav // len(support.cavities)] * len(support.cavities)
        per[0] += n_cav - sum(per)
        for j, (cav, m) in enumerate(zip(support.cavities, per)):
            if m == 0:
                continue
            ctr, extent = _cavity_extent(cav)

            def ok(z, cav=cav):
                return np.asarray(cav.contains(z)) & (np.asarray(cav.distance_to_boundary(z)) > band)

            cav_pts.append(_accepting(
                lambda mm, k: _disc_samples(ctr, 0.0, extent, mm, seed + 613 * (j + 1) + k), ok, m))
    cavz = np.concatenate(cav_pts) if cav_pts else np.array([], dtype=complex)
    return ext, cavz


# ---------------------------------------------------------------- Frostman checks


def frostman_verify(field: FieldSpec, support: SupportDescription, n_on: int = 200,
                    n_off: int = 200, mode="closed", seed: int = 0,
                    rel_tol: float = 1e-10) -> FrostmanReport:
    """Sample F on and off S_V and report the Frostman constant and margins."""
    if support.regime is Regime.UNSUPPORTED:
        raise UnsupportedRegimeError("support regime is UNSUPPORTED")
    on = sample_support(support, n_on, seed)
    ext, cav = sample_off_support(support, n_off, seed)
    src = field.locations
    if src.size and cav.size:
        cav = cav[np.min(np.abs(cav[:, None] - src[None, :]), axis=1) > 0]
    F_on = weighted_potential(field, support, on, mode, rel_tol)
    F_ext = weighted_potential(field, support, ext, mode, rel_tol)
    F_cav = weighted_potential(field, support, cav, mode, rel_tol) if cav.size else np.array([])
    cv = float(np.median(F_on))
    rows = ([(z, f, "support") for z, f in zip(on, F_on)]
            + [(z, f, "exterior") for z, f in zip(ext, F_ext)]
            + [(z, f, "cavity") for z, f in zip(cav, F_cav)])
    return FrostmanReport(
        constant_estimate=cv,
        on_support_max_deviation=float(np.max(np.abs(F_on - cv))),
        exterior_min_margin=float(np.min(F_ext - cv)) if F_ext.size else float("inf"),
        cavity_min_margin=float(np.min(F_cav - cv)) if F_cav.size else float("inf"),
        samples_on=int(on.size),
        samples_off=int(ext.size + cav.size),
        samples=tuple(rows),
    )


def frostman_constant(field: FieldSpec) -> float:
    """C_V = (1+q) C_Q."""
    return (1.0 + field.q_total) * equilibrium_constant(field.strength, field.halfdegree)


def cavity_general(local: LocalStructure, base: Disc | None = None, n_check: int = 512) -> MappedDisc:
    """Cavity ψ(D_r(φ^p(z₀))) for Q = C|φ|^(2p) near the source.

    The boundary is produced once here so that Newton failures surface now.
    """
    z0 = local.source.location
    cav = MappedDisc(local, complex(local.phi_p(z0)), local.level, z0)
    z, _ = cav.boundary(n_check)[0]
    if base is not None and not np.max(np.abs(z - base.center)) < base.radius:
        raise UnsupportedRegimeError("cavity is not compactly contained in the base")
    return cav


def frostman_verify_local(local: LocalStructure, cavity: MappedDisc, n_on: int = 64,
                          n_off: int = 64, seed: int = 0, rel_tol: float = 1e-10) -> FrostmanReport:
    """Local Frostman check around a general cavity.

    Only the cavity part F₂ = q ln 1/|z - z₀| - U^Ω(z) is computable without
    knowing S_Q for a general φ. On a ring outside Ω it must vanish (the
    deviation), inside Ω it must be positive (the cavity margin). The
    constant estimate is the median of F₂ on the ring.
    """
    q, z0 = local.source.intensity, local.source.location
    ctr, ext = _cavity_extent(cavity)
    band = SAMPLE_BAND * ext

    def ring_ok(z):
        return ~np.asarray(cavity.contains(z)) & (cavity.distance_to_boundary(z) > band)

    def cav_ok(z):
        return np.asarray(cavity.contains(z)) & (cavity.distance_to_boundary(z) > band) & (z != z0)

    ring = _accepting(lambda m, k: _disc_samples(ctr, 0.0, 2 * ext, m, seed + k), ring_ok, n_on)
    inner = _accepting(lambda m, k: _disc_samples(ctr, 0.0, ext, m, seed + 977 + k), cav_ok, n_off)

    def F2num(z):
        with np.errstate(divide="ignore"):
            src = -q * np.log(np.abs(z - z0))
        return np.array([s - log_potential_numeric(local, cavity, w, rel_tol) for s, w in zip(src, z)])

    F_ring = F2num(ring)
    F_in = F2num(inner)
    cv = float(np.median(F_ring))
    rows = ([(z, f, "support") for z, f in zip(ring, F_ring)]
            + [(z, f, "cavity") for z, f in zip(inner, F_in)])
    return FrostmanReport(cv, float(np.max(np.abs(F_ring - cv))), float("inf"),
                          float(np.min(F_in - cv)), int(ring.size), int(inner.size), tuple(rows))
