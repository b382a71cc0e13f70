import numpy as np
import pytest

from defosc.bath import BathSpec, build_coefficients
from defosc.deformation import DeformationProfile, build_spectrum
from defosc.liouvillian import build_stencil

PROFILES = {
    "identity": DeformationProfile.identity(),
    "q0.3": DeformationProfile.q_deformed(0.3),
    "power2": DeformationProfile.power(2.0),
}
BATHS = {
    "thermal": BathSpec.thermal(0.2, 1.0),
    "squeezed": BathSpec.squeezed(0.2, 0.4, 1.1),
}


def make_model(profile, bath, n_trunc):
    spectrum = build_spectrum(profile, n_trunc)
    tables = build_coefficients(bath, spectrum)
    return spectrum, tables, build_stencil(tables)


def random_hermitian(rng, d, unit_trace=True):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    h = 0.5 * (a + a.conj().T)
    if unit_trace:
        h = h - np.eye(d) * (np.trace(h).real - 1.0) / d
    return h


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


def random_density(rng, d):
    """Hilbert-Schmidt random density matrix (Hermitian, positive, unit trace)."""
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    r = g @ g.conj().T
    return r / np.trace(r).real


ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"criterion {key:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
