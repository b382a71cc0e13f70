import math

import numpy as np
import pytest

from defosc.deformation import (
    DeformationError,
    DeformationProfile,
    build_spectrum,
    commutator_gap,
    energy,
    f2,
    omega,
    profile_from_config,
)

IDENTITY = DeformationProfile.identity()
HARMONIOUS = DeformationProfile.harmonious()
ALL_PROFILES = [
    IDENTITY,
    DeformationProfile.q_deformed(0.01),
    DeformationProfile.q_deformed(0.1),
    DeformationProfile.q_deformed(0.5),
    DeformationProfile.power(2.0),
    DeformationProfile.power(0.5),
    HARMONIOUS,
]


def test_f2_examples():
    assert f2(IDENTITY, 7) == 1.0
    assert f2(HARMONIOUS, 4) == 0.25
    q = DeformationProfile.q_deformed(0.1)
    assert f2(q, 2) == pytest.approx(math.sinh(0.2) / (2 * math.sinh(0.1)), rel=1e-15)
    assert f2(q, 2) == pytest.approx(1.0050041680558, rel=1e-12)
    assert f2(q, 0) == 1.0


@pytest.mark.parametrize("lam", [1e-3, 0.05, 0.1])
@pytest.mark.parametrize("n", [1, 2, 5, 10])
def test_q_f2_matches_series(lam, n):
    series = 1 + lam**2 * (n**2 - 1) / 6 + lam**4 * (3 * n**4 - 10 * n**2 + 7) / 360
    # next series term is O((n lam)**6)
    assert f2(DeformationProfile.q_deformed(lam), n) == pytest.approx(series, rel=1e-12 + (n * lam) ** 6 / 100)


def test_q_zero_is_exactly_identity():
    q0 = DeformationProfile.q_deformed(0.0)
    for n in range(30):
        assert f2(q0, n) == 1.0
        assert energy(q0, n) == energy(IDENTITY, n)
        assert omega(q0, n) == 1.0


def test_energy_examples():
    assert energy(IDENTITY, 3) == 3.5
    assert energy(HARMONIOUS, 0) == 0.5
    assert energy(HARMONIOUS, 5) == 1.0


def test_omega_examples():
    for n in range(20):
        assert omega(IDENTITY, n) == 1.0
    assert omega(DeformationProfile.q_deformed(0.1), 0) == pytest.approx(1.0050042, abs=1e-7)
    assert omega(HARMONIOUS, 0) == 0.5
    assert omega(HARMONIOUS, 3) == 0.0


def test_commutator_gap_examples():
    assert commutator_gap(IDENTITY, 9) == 1.0
    assert commutator_gap(HARMONIOUS, 3) == 0.0
    assert commutator_gap(DeformationProfile.q_deformed(0.1), 0) == 1.0
    assert all(commutator_gap(IDENTITY, n) == 1.0 for n in range(101))


def test_build_spectrum_examples():
    sp = build_spectrum(IDENTITY, 2)
    np.testing.assert_array_equal(sp.E, [0.5, 1.5, 2.5])
    np.testing.assert_array_equal(sp.Omega, [1.0, 1.0, 1.0])
    sp = build_spectrum(HARMONIOUS, 3)
    np.testing.assert_array_equal(sp.E, [0.5, 1.0, 1.0, 1.0])
    np.testing.assert_array_equal(sp.Omega, [0.5, 0.0, 0.0, 0.0])
    sp = build_spectrum(DeformationProfile.q_deformed(0.1), 2)
    np.testing.assert_allclose(sp.Omega, np.cosh([0.1, 0.2, 0.3]), rtol=1e-13)


def test_spectrum_is_immutable():
    sp = build_spectrum(IDENTITY, 4)
    with pytest.raises(ValueError):
        sp.E[0] = 3.0


@pytest.mark.parametrize("profile", ALL_PROFILES, ids=lambda p: p.name)
def test_energy_differences_are_transition_frequencies(profile):
    for n in range(101):
        diff = energy(profile, n + 1) - energy(profile, n)
        assert diff == pytest.approx(omega(profile, n), rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("lam", [0.01, 0.1, 0.5])
def test_q_omega_closed_form(lam):
    q = DeformationProfile.q_deformed(lam)
    for n in range(51):
        assert abs(omega(q, n) - math.cosh((n + 1) * lam)) <= 1e-12 * math.cosh((n + 1) * lam)


def test_q_energy_deviation_vanishes_quadratically():
    def dev(lam):
        q = DeformationProfile.q_deformed(lam)
        return max(abs(energy(q, n) - (n + 0.5)) for n in range(31))

    C = dev(1e-3) / 1e-3**2
    for lam in (5e-4, 2e-4):
        assert dev(lam) == pytest.approx(C * lam**2, rel=1e-2)


def test_tabulated_profile_and_errors():
    tab = DeformationProfile.tabulated([1.0, 1.0, 0.5, 2.0, 1.5])
    assert f2(tab, 3) == 2.0
    with pytest.raises(DeformationError, match="deformation table exhausted"):
        f2(tab, 5)
    with pytest.raises(DeformationError, match="deformation table exhausted"):
        build_spectrum(tab, 3)
    build_spectrum(tab, 2)
    bad = DeformationProfile.tabulated([1.0, 1.0, -0.5, 1.0, 1.0])
    with pytest.raises(DeformationError, match="non-Hermitian deformation"):
        f2(bad, 2)


def test_power_family_limits():
    p0 = DeformationProfile.power(0.0)
    p1 = DeformationProfile.power(1.0)
    for n in range(1, 20):
        assert f2(p0, n) == pytest.approx(f2(HARMONIOUS, n), rel=1e-15)
        assert f2(p1, n) == 1.0


def test_positive_on_excited_levels():
    for profile in ALL_PROFILES:
        assert all(f2(profile, n) > 0 for n in range(1, 60))


def test_profile_from_config():
    assert profile_from_config({"kind": "q", "lambda": 0.2}) == DeformationProfile.q_deformed(0.2)
    assert profile_from_config({"kind": "power", "p": 2}).p == 2.0
    with pytest.raises(DeformationError):
        profile_from_config({"kind": "nope"})
