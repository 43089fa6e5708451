"""Equilibrium measures for C|z|^(2p) fields with point sources: cavity
supports, closed-form potentials, quadrature-identity checks, conformal map
families and weighted Fekete points."""

from .errors import *  # noqa: F401,F403
from .field import FieldSpec, PointSource, eval_Q, eval_V, grad_V, laplacian_Q, wirtinger_dQ, density_muV
from .regions import (
    Annulus,
    ConformalImage,
    Disc,
    MappedDisc,
    PowerLemniscate,
    Regime,
    RootSetClass,
    SampledCurve,
    SupportDescription,
    boundary_points,
    classify_root_set,
    contains,
    distance_to_boundary,
)
from .quadrature import IntegrationResult, integrate_area, integrate_boundary, log_potential_numeric
from .conformal import ConformalFamily, FamilyKind, check_univalence, eval_map, extract_node_and_constant
from .equilibrium import (
    FrostmanMode,
    FrostmanReport,
    LocalStructure,
    F2_closed,
    build_support,
    cavity_general,
    frostman_verify,
    frostman_verify_local,
    radial_potential,
    support_base,
    through_origin_cavity,
)
from .quadcheck import (
    QuadratureReport,
    check_area_quadrature,
    check_boundary_quadrature,
    check_inverted_exterior,
)
from .fekete import FeketeState, energy, energy_gradient, minimize, support_stats

__version__ = "0.1.0"
