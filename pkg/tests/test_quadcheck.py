import numpy as np
import pytest

from eqcavity.conformal import FamilyKind, ConformalFamily
from eqcavity.equilibrium import build_support, support_base
from eqcavity.errors import (
    AlphaOutsideError,
    InvalidParameterError,
    OriginOnBoundaryError,
    SingularFitError,
    UnsupportedRegimeError,
)
from eqcavity.field import FieldSpec, PointSource
from eqcavity.quadcheck import check_area_quadrature, check_boundary_quadrature, check_inverted_exterior
from eqcavity.regions import Disc, SampledCurve

SINGLE = FieldSpec(0.5, 1, [PointSource(0.6, 0.04)])
CASSINI = FieldSpec(1 / 50, 2, [PointSource(1, 0.125), PointSource(-1, 0.125)])


def test_area_identity_single_source():
    cav = build_support(SINGLE).cavities[0]
    rep = check_area_quadrature(SINGLE, cav, max_degree=8)
    assert rep.lhs[0].real == pytest.approx(0.241661, abs=1e-6)
    assert rep.lhs[0].real == pytest.approx(2 * np.pi * 0.04 / 1.04, rel=1e-12)
    assert rep.max_rel() <= 1e-10
    assert rep.fitted_coefficients[0].real == pytest.approx(2 * np.pi / 1.04, rel=1e-12)
    assert "2pi/(1+q)" in rep.notes[1]
    # the doubled constant is off by exactly a factor of two
    assert np.allclose(np.array(rep.rhs_alternative), 2 * np.array(rep.rhs))


def test_area_identity_centred_test_functions():
    cav = build_support(SINGLE).cavities[0]
    rep = check_area_quadrature(SINGLE, cav, max_degree=4, center=0.6)
    for k in range(1, 5):
        assert abs(rep.lhs[k]) <= 1e-12
        assert rep.rhs[k] == 0


@pytest.mark.parametrize("field", [
    FieldSpec(0.25, 2, [PointSource(0.5 + 0.3j, 0.02)]),
    FieldSpec(0.02, 3, [PointSource(1.2, 0.03)]),
    FieldSpec(0.25, 2, [PointSource(0.6, 0.01), PointSource(-0.3 + 0.5j, 0.015)]),
])
def test_area_identity_branch_cavities(field):
    S = build_support(field)
    for cav in S.cavities:
        rep = check_area_quadrature(field, cav, max_degree=10)
        assert rep.max_rel() <= 1e-8


def test_area_identity_cassini_weighted_fit():
    S = build_support(CASSINI)
    (L,) = S.cavities
    rep = check_area_quadrature(CASSINI, L, nodes=[(1, 0.125), (-1, 0.125)], max_degree=8,
                                weight=lambda z: np.abs(z) ** 2)
    T = L.level
    assert T == pytest.approx(1.581139, abs=1e-6)
    for c in rep.fitted_coefficients:
        assert c.real == pytest.approx(np.pi * T ** 2 / 4, rel=1e-9)
    assert rep.max_rel(min_degree=2) <= 1e-8


def test_area_identity_cassini_example_value():
    # the identity quoted for T = 1.5: per-node coefficient π T²/4
    assert np.pi * 1.5 ** 2 / 4 == pytest.approx(1.767146, abs=1e-6)


def test_area_identity_cassini_default_weight():
    (L,) = build_support(CASSINI).cavities
    rep = check_area_quadrature(CASSINI, L, max_degree=8)
    assert rep.max_rel() <= 1e-8


def test_area_identity_degree_robustness():
    cav = build_support(SINGLE).cavities[0]
    rep = check_area_quadrature(SINGLE, cav, max_degree=12)
    assert rep.max_rel(min_degree=9) <= 1e-8


def test_area_identity_bit_reproducible():
    cav = build_support(SINGLE).cavities[0]
    a = check_area_quadrature(SINGLE, cav, max_degree=5)
    b = check_area_quadrature(SINGLE, cav, max_degree=5)
    assert a == b


def test_area_identity_validation():
    cav = build_support(SINGLE).cavities[0]
    with pytest.raises(InvalidParameterError):
        check_area_quadrature(SINGLE, cav, max_degree=13)
    with pytest.raises(InvalidParameterError):
        check_area_quadrature(SINGLE, cav, nodes=[])
    with pytest.raises(SingularFitError):
        check_area_quadrature(SINGLE, cav, nodes=[(0.6, 0.02), (0.6, 0.02)], weight=lambda z: 1 + 0 * z)


# ---------------------------------------------------------------- boundary identity


def test_boundary_null_on_centred_disc():
    for p in (1, 2, 3):
        rep = check_boundary_quadrature(Disc(0, 0.7), p, nodes=[], max_degree=8)
        assert rep.max_abs() <= 1e-12


def test_boundary_origin_on_boundary():
    with pytest.raises(OriginOnBoundaryError):
        check_boundary_quadrature(Disc(0.5, 0.5), 1, nodes=[])


def test_boundary_one_node_family():
    fam = ConformalFamily(FamilyKind.BOUNDARY_XI_NONZERO, 2, 1.0, 0.0, (0.4,))
    dom = fam.image()
    rep = check_boundary_quadrature(dom, 2, max_degree=8)
    assert rep.max_rel() <= 1e-10
    (node,) = fam.predicted_boundary_nodes()
    assert rep.nodes[0] == pytest.approx(node, abs=1e-10)


def test_boundary_perturbed_domain_fails():
    fam = ConformalFamily(FamilyKind.BOUNDARY_XI_NONZERO, 2, 1.0, 0.0, (0.4,))
    z, _ = fam.evaluate(np.exp(2j * np.pi * np.arange(4096) / 4096))
    z = np.where(z.imag > 0, 1.01 * z, z)
    rep = check_boundary_quadrature(SampledCurve(z), 2, max_degree=8)
    assert rep.max_rel() > 1e-3


def test_boundary_singular_fit():
    with pytest.raises(SingularFitError):
        check_boundary_quadrature(Disc(0, 0.7), 1, nodes=None)


# ---------------------------------------------------------------- inverted exterior


@pytest.mark.parametrize("p", [1, 2, 3])
@pytest.mark.parametrize("alpha_frac", [0.0, 0.3])
def test_inverted_exterior_null_without_sources(p, alpha_frac):
    f = FieldSpec(0.25, p)
    S = build_support(f)
    rep = check_inverted_exterior(f, S, alpha_frac * S.base.radius, max_degree=8)
    assert rep.max_abs() <= 1e-8


def test_inverted_exterior_sources_outside():
    # mechanics with synthetic exterior sources: the residual after fitting one
    # coefficient per node is reported, whatever the domain
    f = FieldSpec(0.25, 2, [PointSource(1.5, 0.1)])
    rep = check_inverted_exterior(f, Disc(0, 1.0), 0.2, max_degree=6)
    assert rep.nodes[0] == pytest.approx(1 / 1.3)
    assert len(rep.fitted_coefficients) == 1
    assert rep.abs_residual[0] <= 1e-12


def test_inverted_exterior_errors():
    f = FieldSpec(0.25, 2)
    S = build_support(f)
    with pytest.raises(AlphaOutsideError):
        check_inverted_exterior(f, S, 1.5)
    with pytest.raises(UnsupportedRegimeError):
        check_inverted_exterior(SINGLE, build_support(SINGLE), 0.0)
    bad = FieldSpec(0.5, 1, [PointSource(0.9, 0.5)])
    with pytest.raises(UnsupportedRegimeError):
        check_inverted_exterior(bad, build_support(bad), 0.0)
