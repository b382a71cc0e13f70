"""Density matrices, initial states, observables and positivity diagnostics."""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, fields

import numpy as np

from .deformation import DeformationProfile, SpectrumTable, energy, f2
from .jacobi import hermitian_eigvalsh

__all__ = [
    "StateError",
    "DensityMatrix",
    "ObservableRecord",
    "fock_state",
    "f_coherent_state",
    "thermal_steady_state",
    "min_eigenvalue",
    "hermitian_deviation",
    "observables",
    "state_to_dict",
    "state_from_dict",
    "N_POPULATION_COLUMNS",
]

HERM_TOL = 1e-10
TRACE_TOL = 1e-9
GUARD_LEVELS = 2
N_POPULATION_COLUMNS = 10
COHERENT_NORM_TOL = 1e-6


class StateError(ValueError):
    """Invalid density matrix or initial-state request."""


def hermitian_deviation(a: np.ndarray) -> float:
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Complex ``(n_trunc+1) x (n_trunc+1)`` matrix with unit trace.

    Positivity is deliberately not enforced: the master equation is not of
    Lindblad form and may drive states out of the positive cone.
    """

    elements: np.ndarray

    @property
    def n_trunc(self) -> int:
        return self.elements.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.elements.shape[0]

    @property
    def populations(self) -> np.ndarray:
        return self.elements.diagonal().real.copy()

    @classmethod
    def from_array(cls, a, repair: bool = True) -> DensityMatrix:
        """Validate ``a`` (square, Hermitian, unit trace) and wrap a copy.

        Deviations from Hermiticity up to ``1e-10`` are repaired by
        symmetrisation when ``repair`` is true.
        """
        a = np.array(a, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 2:
            raise StateError(f"density matrix must be square with at least 2 levels, got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise StateError("density matrix has non-finite entries")
        dev = hermitian_deviation(a)
        if dev > HERM_TOL:
            raise StateError(f"density matrix is not Hermitian (deviation {dev:.3g})")
        if repair:
            a = 0.5 * (a + a.conj().T)
        tr = np.trace(a)
        if abs(tr - 1.0) > TRACE_TOL:
            raise StateError(f"density matrix trace {tr.real:.12g} differs from 1")
        a.flags.writeable = False
        return cls(a)

    def copy(self) -> np.ndarray:
        return self.elements.copy()


def fock_state(n: int, n_trunc: int) -> DensityMatrix:
    """``|n><n|`` in the basis ``0..n_trunc``."""
    if not 0 <= n <= n_trunc:
        raise StateError(f"Fock level {n} outside basis 0..{n_trunc}")
    a = np.zeros((n_trunc + 1, n_trunc + 1), dtype=complex)
    a[n, n] = 1.0
    return DensityMatrix.from_array(a)


def _coherent_log_weights(alpha: complex, profile: DeformationProfile, n_max: int):
    """``log|c_n|^2`` for ``c_n = alpha**n / (sqrt(n!) prod_{k<=n} f(k))``."""
    log_a2 = 2.0 * math.log(abs(alpha))
    out = np.empty(n_max + 1)
    acc = 0.0
    out[0] = 0.0
    for n in range(1, n_max + 1):
        acc += log_a2 - math.log(n) - math.log(f2(profile, n))
        out[n] = acc
    return out


def f_coherent_state(alpha: complex, profile: DeformationProfile, n_trunc: int) -> DensityMatrix:
    """Truncated eigenstate of the deformed annihilator ``A = a f(n)``.

    An extension beyond the master equation itself, provided as an initial
    state.

    Amplitudes ``c_n`` follow ``c_n = alpha c_{n-1} / (sqrt(n) f(n))``. The
    state is renormalised on ``0..n_trunc``; the discarded weight must be at
    most ``1e-6`` of the untruncated norm whenever that norm can be
    evaluated (the profile may not be evaluable far past the cutoff).
    """
    alpha = complex(alpha)
    dim = n_trunc + 1
    if alpha == 0:
        return fock_state(0, n_trunc)
    logw = _coherent_log_weights(alpha, profile, n_trunc)
    if not np.all(np.isfinite(logw)):
        raise StateError("coherent amplitude outside truncation: non-finite weights")
    shift = logw.max()
    kept = np.exp(logw - shift).sum()

    # extend the series past the cutoff to bound the discarded weight
    tail = 0.0
    acc = logw[-1]
    log_a2 = 2.0 * math.log(abs(alpha))
    n = n_trunc
    try:
        while True:
            n += 1
            acc += log_a2 - math.log(n) - math.log(f2(profile, n))
            term = math.exp(acc - shift)
            tail += term
            if not math.isfinite(tail):
                raise OverflowError
            if term <= 1e-18 * (kept + tail):
                break
            if n > n_trunc + 20000:
                raise StateError(
                    f"coherent amplitude outside truncation: series does not converge "
                    f"for |alpha|={abs(alpha):g} with {profile.name}"
                )
    except OverflowError:
        raise StateError("coherent amplitude outside truncation: series diverges") from None
    except ValueError as exc:
        if isinstance(exc, StateError):
            raise
        tail = 0.0  # profile not evaluable beyond the cutoff: skip the check
    if tail > COHERENT_NORM_TOL * (kept + tail):
        raise StateError(
            f"coherent amplitude outside truncation: discarded weight "
            f"{tail / (kept + tail):.3g} of the norm with n_trunc={n_trunc}"
        )

    phase = np.exp(1j * math.atan2(alpha.imag, alpha.real) * np.arange(dim))
    c = np.exp(0.5 * (logw - shift)) * phase
    c /= np.linalg.norm(c)
    rho = np.outer(c, c.conj())
    rho /= np.trace(rho).real
    return DensityMatrix.from_array(rho)


def thermal_steady_state(profile: DeformationProfile, beta: float, n_trunc: int,
                         guard_threshold: float = 1e-8) -> DensityMatrix:
    """Diagonal state with populations ``exp(-beta E_n) / Z`` on ``0..n_trunc``.

    Warns when the top two levels carry more than ``guard_threshold`` of
    the population, i.e. when the state is dominated by the truncation.
    """
    if not beta > 0.0:
        raise StateError(f"beta must be > 0, got {beta!r}")
    E = np.array([energy(profile, n) for n in range(n_trunc + 1)])
    w = np.exp(-beta * (E - E.min()))
    Z = w.sum()
    if not (Z > 0.0 and math.isfinite(Z)):
        raise StateError("thermal weights underflow or overflow on the whole basis")
    p = w / Z
    if p[-GUARD_LEVELS:].sum() > guard_threshold:
        warnings.warn(
            f"truncation-dominated steady state: top {GUARD_LEVELS} levels hold "
            f"{p[-GUARD_LEVELS:].sum():.3g} of the population ({profile.name}, beta={beta:g})",
            RuntimeWarning,
            stacklevel=2,
        )
    return DensityMatrix.from_array(np.diag(p).astype(complex))


def min_eigenvalue(rho) -> float:
    """Smallest eigenvalue of the (symmetrised) density matrix."""
    a = np.asarray(getattr(rho, "elements", rho), dtype=complex)
    a = 0.5 * (a + a.conj().T)
    return float(hermitian_eigvalsh(a)[0])


@dataclass(frozen=True)
class ObservableRecord:
    t: float
    trace: float
    herm_dev: float
    min_eig: float
    mean_n: float
    mean_energy: float
    mean_AdagA: float
    purity: float
    guard_pop: float
    populations: tuple = ()

    def as_row(self) -> list:
        row = [getattr(self, f.name) for f in fields(self) if f.name != "populations"]
        pops = list(self.populations[:N_POPULATION_COLUMNS])
        pops += [0.0] * (N_POPULATION_COLUMNS - len(pops))
        return row + pops

    @staticmethod
    def columns() -> list:
        names = [f.name for f in fields(ObservableRecord) if f.name != "populations"]
        return names + [f"p{k}" for k in range(N_POPULATION_COLUMNS)]


def observables(rho, spectrum: SpectrumTable, t: float, with_min_eig: bool = True) -> ObservableRecord:
    """Diagnostics of one state.

    ``herm_dev`` is measured before symmetrisation; every other quantity
    uses the symmetrised matrix. ``min_eig`` is NaN when not requested.
    """
    a = np.asarray(getattr(rho, "elements", rho))
    if a.shape != (spectrum.dim, spectrum.dim):
        raise StateError(f"state shape {a.shape} does not match spectrum dimension {spectrum.dim}")
    herm_dev = hermitian_deviation(a)
    h = 0.5 * (a + a.conj().T)
    p = h.diagonal().real
    levels = np.arange(spectrum.dim)
    return ObservableRecord(
        t=float(t),
        trace=float(p.sum()),
        herm_dev=herm_dev,
        min_eig=min_eigenvalue(h) if with_min_eig else math.nan,
        mean_n=float(levels @ p),
        mean_energy=float(spectrum.E @ p),
        mean_AdagA=float(spectrum.nf2 @ p),
        purity=float(np.sum(np.abs(h) ** 2)),
        guard_pop=float(p[-GUARD_LEVELS:].sum()),
        populations=tuple(float(x) for x in p[:N_POPULATION_COLUMNS]),
    )


def state_to_dict(rho) -> dict:
    a = np.asarray(getattr(rho, "elements", rho))
    return {"n_trunc": a.shape[0] - 1, "re": a.real.tolist(), "im": a.imag.tolist()}


def state_from_dict(d: dict, validate: bool = True):
    """Inverse of :func:`state_to_dict`."""
    a = np.array(d["re"], dtype=float) + 1j * np.array(d["im"], dtype=float)
    if a.shape != (d["n_trunc"] + 1, d["n_trunc"] + 1):
        raise StateError(f"state dump shape {a.shape} does not match n_trunc={d['n_trunc']}")
    return DensityMatrix.from_array(a) if validate else a


def save_state(rho, path) -> None:
    with open(path, "w") as fh:
        json.dump(state_to_dict(rho), fh)


def load_state(path) -> DensityMatrix:
    with open(path) as fh:
        return state_from_dict(json.load(fh))
