"""External field V(z) = (1+q) C|z|^(2p) + sum_j q_j ln 1/|z - z_j|.

All evaluators accept scalars or numpy arrays of complex points and
broadcast. Sources are compared to evaluation points by exact equality.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import InvalidParameterError, SourceSingularityError


@dataclass(frozen=True)
class PointSource:
    location: complex
    intensity: float

    def __post_init__(self):
        object.__setattr__(self, "location", complex(self.location))
        object.__setattr__(self, "intensity", float(self.intensity))
        if not self.intensity > 0:
            raise InvalidParameterError(f"source intensity must be positive, got {self.intensity}")


@dataclass(frozen=True)
class FieldSpec:
    """Parameters of the external field.

    ``strength`` is C, ``halfdegree`` is p, so Q(z) = C|z|^(2p).
    """

    strength: float
    halfdegree: int
    sources: tuple[PointSource, ...] = dc_field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "strength", float(self.strength))
        object.__setattr__(self, "sources", tuple(self.sources))
        if not self.strength > 0:
            raise InvalidParameterError(f"strength C must be positive, got {self.strength}")
        if int(self.halfdegree) != self.halfdegree or self.halfdegree < 1:
            raise InvalidParameterError(f"halfdegree p must be an integer >= 1, got {self.halfdegree}")
        object.__setattr__(self, "halfdegree", int(self.halfdegree))
        locs = [s.location for s in self.sources]
        if len(set(locs)) != len(locs):
            raise InvalidParameterError("source locations must be pairwise distinct")

    @property
    def q_total(self) -> float:
        return float(sum(s.intensity for s in self.sources))

    @property
    def locations(self) -> np.ndarray:
        return np.array([s.location for s in self.sources], dtype=complex)

    @property
    def intensities(self) -> np.ndarray:
        return np.array([s.intensity for s in self.sources], dtype=float)

    def with_sources(self, sources) -> "FieldSpec":
        return FieldSpec(self.strength, self.halfdegree, tuple(sources))

    # duck-typed hooks used by the quadrature and equilibrium modules
    def laplacian(self, z):
        return laplacian_Q(self, z)

    def density(self, z):
        """Equilibrium density (1+q) ΔQ / (2π), without the support restriction."""
        return (1.0 + self.q_total) * laplacian_Q(self, z) / (2.0 * np.pi)


def eval_Q(field: FieldSpec, z):
    return field.strength * np.abs(z) ** (2 * field.halfdegree)


def eval_V(field: FieldSpec, z):
    """Return V(z); +inf exactly at source locations."""
    z = np.asarray(z, dtype=complex)
    out = (1.0 + field.q_total) * eval_Q(field, z)
    with np.errstate(divide="ignore"):
        for s in field.sources:
            out = out - s.intensity * np.log(np.abs(z - s.location))
    return out[()] if out.ndim == 0 else out


def laplacian_Q(field: FieldSpec, z):
    p = field.halfdegree
    r = np.abs(z)
    if p == 1:
        return 4.0 * field.strength * np.ones_like(r, dtype=float)[()]
    return 4.0 * p * p * field.strength * r ** (2 * p - 2)


def wirtinger_dQ(field: FieldSpec, z):
    """Holomorphic derivative ∂Q = C p z^(p-1) conj(z)^p."""
    p = field.halfdegree
    z = np.asarray(z, dtype=complex)
    out = field.strength * p * z ** (p - 1) * np.conj(z) ** p
    return out[()] if out.ndim == 0 else out


def grad_V(field: FieldSpec, z):
    """Real gradient of V as (..., 2) array [dV/dx, dV/dy].

    Raises SourceSingularityError if any point coincides with a source.
    """
    z = np.asarray(z, dtype=complex)
    g = _grad_V_complex(field, z)
    return np.stack([g.real, g.imag], axis=-1)


def _grad_V_complex(field: FieldSpec, z: np.ndarray) -> np.ndarray:
    # gradient packed as dV/dx + i dV/dy
    p, C = field.halfdegree, field.strength
    g = (1.0 + field.q_total) * 2 * p * C * np.abs(z) ** (2 * p - 2) * z
    for s in field.sources:
        d = z - s.location
        if np.any(d == 0):
            raise SourceSingularityError(f"gradient requested at source {s.location}")
        g = g - s.intensity * d / (np.abs(d) ** 2)
    return g


def density_muV(field: FieldSpec, support, z):
    """Density of μ_V w.r.t. area: (1+q)ΔQ/(2π) on S_V, zero elsewhere."""
    from .regions import contains

    inside = contains(support, z)
    return np.where(inside, field.density(z), 0.0)[()]
