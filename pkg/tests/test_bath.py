import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from defosc.bath import BathError, BathSpec, bath_from_config, build_coefficients, thermal_occupation
from defosc.deformation import DeformationProfile, build_spectrum

IDENTITY = DeformationProfile.identity()


def test_thermal_occupation_examples():
    assert thermal_occupation(math.log(2), 1.0) == pytest.approx(1.0, rel=1e-15)
    assert thermal_occupation(1.0, 1.0) == pytest.approx(1 / (math.e - 1), rel=1e-15)
    assert thermal_occupation(1.0, 1.0) == pytest.approx(0.5819767, abs=1e-7)
    with pytest.raises(BathError, match="non-positive mode frequency"):
        thermal_occupation(1.0, 0.0)
    with pytest.raises(BathError, match="non-positive mode frequency"):
        thermal_occupation(1.0, -0.5)


def test_thermal_occupation_large_argument_underflows():
    assert thermal_occupation(1e4, 1.0) == 0.0
    assert thermal_occupation(800.0, 1.0) == pytest.approx(math.exp(-800.0), rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(
    beta=st.floats(0.01, 50.0),
    w1=st.floats(1e-6, 20.0),
    w2=st.floats(1e-6, 20.0),
)
def test_thermal_occupation_decreasing(beta, w1, w2):
    lo, hi = sorted((w1, w2))
    if hi - lo < 1e-9 * hi:
        return
    n_lo, n_hi = thermal_occupation(beta, lo), thermal_occupation(beta, hi)
    assert n_hi <= n_lo
    if n_lo > 1e-300:
        assert n_hi < n_lo


def test_thermal_tables_identity():
    tb = build_coefficients(BathSpec.thermal(0.1, math.log(2)), build_spectrum(IDENTITY, 2))
    np.testing.assert_allclose(tb.N, [1.0, 1.0, 1.0], rtol=1e-15)
    np.testing.assert_array_equal(tb.M, [0, 0, 0])


def test_thermal_tables_q_deformed_first_level():
    sp = build_spectrum(DeformationProfile.q_deformed(0.1), 5)
    tb = build_coefficients(BathSpec.thermal(0.1, 1.0), sp)
    expected = 1.0 / (math.exp(math.cosh(0.1)) - 1.0)
    assert tb.N[0] == pytest.approx(expected, rel=1e-13)
    assert tb.N[0] == pytest.approx(0.5773943, abs=1e-7)


@pytest.mark.parametrize("profile", [IDENTITY, DeformationProfile.q_deformed(0.3), DeformationProfile.power(2.0)],
                         ids=lambda p: p.name)
@pytest.mark.parametrize("beta", [0.3, 1.0, 4.0])
def test_detailed_balance_ratio(profile, beta):
    sp = build_spectrum(profile, 30)
    tb = build_coefficients(BathSpec.thermal(0.1, beta), sp)
    ratio = tb.N / (1.0 + tb.N)
    np.testing.assert_allclose(ratio, np.exp(-beta * sp.Omega), rtol=1e-12, atol=1e-300)


def test_squeezed_zero_equals_zero_temperature():
    sp = build_spectrum(DeformationProfile.q_deformed(0.2), 10)
    sq = build_coefficients(BathSpec.squeezed(0.1, 0.0, 0.7), sp)
    cold = build_coefficients(BathSpec.thermal(0.1, 1e4), sp)
    np.testing.assert_array_equal(sq.N, np.zeros(11))
    np.testing.assert_array_equal(sq.M, np.zeros(11))
    np.testing.assert_array_equal(sq.N, cold.N)
    np.testing.assert_array_equal(sq.M, cold.M)


def test_squeezed_tables_saturate_bound():
    r, theta = 0.4, 1.1
    tb = build_coefficients(BathSpec.squeezed(0.1, r, theta), build_spectrum(IDENTITY, 6))
    np.testing.assert_allclose(tb.N, math.sinh(r) ** 2)
    np.testing.assert_allclose(tb.M, -np.exp(1j * theta) * math.sinh(r) * math.cosh(r))
    assert np.all(np.abs(tb.M) ** 2 <= tb.N * (tb.N + 1) + 1e-12)


def test_custom_tables_and_bound():
    sp = build_spectrum(IDENTITY, 3)
    ok = build_coefficients(BathSpec.custom(0.1, [0.5] * 4, [0.5j] * 4), sp)
    np.testing.assert_array_equal(ok.M, [0.5j] * 4)
    with pytest.raises(BathError, match="unphysical bath correlations"):
        build_coefficients(BathSpec.custom(0.1, [0.1] * 4, [1.0] * 4), sp)
    with pytest.raises(BathError):
        build_coefficients(BathSpec.custom(0.1, [0.1] * 3, [0.0] * 3), sp)
    with pytest.raises(BathError):
        build_coefficients(BathSpec.custom(0.1, [-0.1] * 4, [0.0] * 4), sp)


def test_harmonious_thermal_rejected():
    sp = build_spectrum(DeformationProfile.harmonious(), 5)
    with pytest.raises(BathError, match="non-positive mode frequency"):
        build_coefficients(BathSpec.thermal(0.1, 1.0), sp)


def test_invalid_specs():
    with pytest.raises(BathError):
        BathSpec.thermal(0.0, 1.0)
    with pytest.raises(BathError):
        BathSpec.thermal(0.1, -1.0)
    with pytest.raises(BathError):
        BathSpec.squeezed(0.1, -0.1)


def test_bath_from_config():
    b = bath_from_config({"kind": "custom", "gamma": 0.1, "N": [0.1, 0.2], "M_re": [0.0, 0.1], "M_im": [0.05, 0.0]})
    assert b.M_table == (0.05j, 0.1 + 0j)
    assert bath_from_config({"kind": "thermal", "gamma": 0.2, "beta": 2.0}) == BathSpec.thermal(0.2, 2.0)
