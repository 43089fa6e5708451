"""The through-origin single-source example {C=1/4, p=2, z0=1/√5, q=0.1995}.

Three readings are checked: the literal connected lemniscate (which fails
the Frostman test), the conformal cavity (which passes) and the tenfold
smaller strength, whose cavity is a disjoint root of a disc.
"""

import numpy as np
import pytest

from eqcavity.equilibrium import build_support, frostman_verify, support_mass, through_origin_family
from eqcavity.field import FieldSpec, PointSource
from eqcavity.quadrature import integrate_area
from eqcavity.regions import Regime

Z0 = 1 / np.sqrt(5)


def field(q):
    return FieldSpec(0.25, 2, [PointSource(Z0, q)])


def test_literal_connected_lemniscate_fails():
    f = field(0.1995)
    S = build_support(f, literal_connected=True)
    assert S.regime is Regime.CONNECTED_LEMNISCATE
    rep = frostman_verify(f, S, 100, 100, "numeric")
    assert not rep.passed()
    assert rep.on_support_max_deviation > 0.1
    assert rep.cavity_min_margin < 0


def test_conformal_cavity_passes():
    f = field(0.1995)
    S = build_support(f)
    assert S.regime is Regime.CONFORMAL_CAVITY
    fam = through_origin_family(f)
    assert abs(fam.zeta0) == pytest.approx(0.65875, abs=1e-5)
    assert abs(fam.scale) == pytest.approx(0.51076, abs=1e-5)
    (cav,) = S.cavities
    assert cav.contains(0) and cav.contains(Z0)
    assert np.max(np.abs(cav.boundary(1024)[0][0])) < 1
    assert integrate_area(f.density, cav, 1e-10).real == pytest.approx(0.1995, rel=1e-8)
    assert support_mass(f, S) == pytest.approx(1.0, abs=1e-12)
    rep = frostman_verify(f, S, 100, 100, "numeric")
    assert rep.passed()


def test_small_strength_is_root_of_disc():
    f = field(0.01995)
    S = build_support(f)
    assert S.regime is Regime.DISJOINT_ROOTS
    assert not S.cavities[0].contains(0)
    assert frostman_verify(f, S, 100, 100, "numeric").passed()
