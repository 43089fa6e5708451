"""Weighted Fekete points: minimisers of
E(x) = Σ_{i<j} ln 1/|xᵢ - xⱼ| + (N-1) Σᵢ V(xᵢ).

Their empirical measures approximate μ_V, so the discrete configurations
can be compared against the analytic supports.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import CoincidentPointsError, InvalidParameterError, SourceSingularityError
from .field import FieldSpec, _grad_V_complex, eval_V
from .regions import distance_to_boundary

GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))
SUPPORT_BAND = 1e-2


@dataclass(frozen=True)
class FeketeState:
    points: np.ndarray
    energy: float
    grad_norm: float
    iterations: int
    seed: int
    converged: bool = False
    energy_history: tuple = dc_field(default=(), repr=False, compare=False)


@dataclass(frozen=True)
class MinimizeOptions:
    max_iter: int = 3000
    grad_tol: float = 1e-6
    step0: float | None = None  # default 0.1 / N²


def _as_points(points) -> np.ndarray:
    return np.asarray(points, dtype=complex).ravel()


def _check_sources(x: np.ndarray, field: FieldSpec):
    for s in field.sources:
        if np.any(x == s.location):
            raise SourceSingularityError(f"a point coincides with the source at {s.location}")


def _pair_diffs(x: np.ndarray) -> np.ndarray:
    return x[:, None] - x[None, :]


def _energy(x: np.ndarray, field: FieldSpec) -> float:
    """Energy without validation; inf for coincident points or points at sources."""
    n = len(x)
    if n < 2:
        return 0.0
    iu = np.triu_indices(n, 1)
    d = np.abs(_pair_diffs(x)[iu])
    with np.errstate(divide="ignore"):
        inter = -np.sum(np.log(d))
        ext = (n - 1) * np.sum(eval_V(field, x))
    return float(inter + ext)


def energy(points, field: FieldSpec) -> float:
    x = _as_points(points)
    if len(np.unique(x)) != len(x):
        raise CoincidentPointsError("points must be pairwise distinct")
    _check_sources(x, field)
    return _energy(x, field)


def _gradient_complex(x: np.ndarray, field: FieldSpec) -> np.ndarray:
    n = len(x)
    diff = _pair_diffs(x)
    d2 = np.abs(diff) ** 2
    np.fill_diagonal(d2, 1.0)
    inter = -np.sum(diff / d2, axis=1)
    return inter + (n - 1) * _grad_V_complex(field, x)


def energy_gradient(points, field: FieldSpec) -> np.ndarray:
    """(N, 2) array of [∂E/∂xᵢ, ∂E/∂yᵢ]."""
    x = _as_points(points)
    if len(np.unique(x)) != len(x):
        raise CoincidentPointsError("points must be pairwise distinct")
    g = _gradient_complex(x, field)
    return np.stack([g.real, g.imag], axis=-1)


def initial_points(field: FieldSpec, N: int, seed: int) -> np.ndarray:
    """Sunflower spiral filling the base disc, jittered by 1e-3·R seeded noise;
    points landing within 1e-3·R of a source are re-drawn."""
    from .equilibrium import support_base

    R = support_base(field.strength, field.halfdegree).radius
    k = np.arange(N)
    x = R * np.sqrt((k + 0.5) / N) * np.exp(1j * GOLDEN_ANGLE * k)
    rng = np.random.default_rng(seed)
    noise = rng.normal(size=(N, 2)) @ np.array([1.0, 1j]) * 1e-3 * R
    x = x + noise
    src = field.locations
    for _ in range(100):
        if src.size == 0:
            break
        bad = np.min(np.abs(x[:, None] - src[None, :]), axis=1) < 1e-3 * R
        if not bad.any():
            break
        x[bad] = x[bad] + (rng.normal(size=(bad.sum(), 2)) @ np.array([1.0, 1j])) * 1e-2 * R
    return x


def minimize(field: FieldSpec, N: int, seed: int = 0, opts: MinimizeOptions | dict | None = None,
             initial=None) -> FeketeState:
    """Gradient descent with backtracking: halve the step until the energy
    decreases, grow it by 1.1 after each accepted step."""
    if N < 2:
        raise InvalidParameterError("N must be >= 2")
    if opts is None:
        opts = MinimizeOptions()
    elif isinstance(opts, dict):
        opts = MinimizeOptions(**opts)
    x = initial_points(field, N, seed) if initial is None else _as_points(initial).copy()
    if len(x) != N:
        raise InvalidParameterError("initial configuration has the wrong size")
    step = opts.step0 if opts.step0 is not None else 0.1 / N ** 2
    E = _energy(x, field)
    g = _gradient_complex(x, field)
    gn = float(np.linalg.norm(g))
    history = [E]
    it = 0
    converged = gn <= opts.grad_tol
    while not converged and it < opts.max_iter:
        it += 1
        accepted = False
        for _ in range(60):
            trial = x - step * g
            Et = _energy(trial, field)
            if Et < E:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        x, E = trial, Et
        history.append(E)
        step *= 1.1
        g = _gradient_complex(x, field)
        gn = float(np.linalg.norm(g))
        converged = gn <= opts.grad_tol
    return FeketeState(x, E, gn, it, seed, converged, tuple(history))


def support_stats(state: FeketeState, support) -> dict:
    """Points violating the analytic support; points within 1e-2·R of a boundary count as on-support."""
    x = _as_points(state.points)
    R = support.base.radius
    band = SUPPORT_BAND * R
    inside_cav = 0
    for cav in support.cavities:
        inc = np.asarray(cav.contains(x)) & (np.asarray(distance_to_boundary(cav, x)) > band)
        inside_cav += int(np.sum(inc))
    off = ~np.asarray(support.contains(x)) & (np.asarray(support.distance_to_boundary(x)) > band)
    return {
        "inside_cavity": inside_cav,
        "max_radius": float(np.max(np.abs(x))) if x.size else 0.0,
        "offsupport_fraction": float(np.mean(off)) if x.size else 0.0,
    }
