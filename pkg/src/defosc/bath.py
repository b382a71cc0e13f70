"""Markovian reservoir: damping rate, occupation N(Omega) and squeezing M(Omega).

The bath response is taken flat, chi(Omega) = 2 * gamma, so the reservoir is
fully described by ``gamma`` and the two correlation functions sampled at the
level-dependent frequencies of the deformed oscillator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .deformation import SpectrumTable

__all__ = [
    "BathError",
    "BathSpec",
    "CoefficientTables",
    "OMEGA_MIN",
    "thermal_occupation",
    "build_coefficients",
    "bath_from_config",
]

OMEGA_MIN = 1e-9
BOUND_SLACK = 1e-12


class BathError(ValueError):
    """Invalid bath parameters or bath correlations."""


@dataclass(frozen=True)
class BathSpec:
    """Reservoir description.

    ``kind`` is ``thermal`` (needs ``beta``), ``squeezed`` (flat squeezed
    vacuum with ``r`` and ``theta``) or ``custom`` (per-level ``N_table`` and
    complex ``M_table``, indexed like the spectrum).
    """

    gamma: float
    kind: str = "thermal"
    beta: float | None = None
    r: float = 0.0
    theta: float = 0.0
    N_table: tuple = field(default_factory=tuple)
    M_table: tuple = field(default_factory=tuple)
    omega_min: float = OMEGA_MIN

    def __post_init__(self):
        if not (self.gamma > 0.0 and math.isfinite(self.gamma)):
            raise BathError(f"gamma must be positive and finite, got {self.gamma!r}")
        if self.kind not in ("thermal", "squeezed", "custom"):
            raise BathError(f"unknown bath kind {self.kind!r}")
        if self.kind == "thermal" and not (self.beta is not None and self.beta > 0.0):
            raise BathError("thermal bath requires beta > 0")
        if self.kind == "squeezed":
            if not (self.r >= 0.0 and math.isfinite(self.r)):
                raise BathError("squeezing parameter r must be >= 0")
            if self.beta is not None and not self.beta > 0.0:
                raise BathError("beta must be > 0")
        if self.kind == "custom":
            object.__setattr__(self, "N_table", tuple(float(v) for v in self.N_table))
            object.__setattr__(self, "M_table", tuple(complex(v) for v in self.M_table))
            if len(self.N_table) != len(self.M_table):
                raise BathError("custom bath needs N and M tables of equal length")

    @classmethod
    def thermal(cls, gamma: float, beta: float) -> BathSpec:
        return cls(gamma=float(gamma), kind="thermal", beta=float(beta))

    @classmethod
    def squeezed(cls, gamma: float, r: float, theta: float = 0.0, beta: float | None = None) -> BathSpec:
        return cls(gamma=float(gamma), kind="squeezed", r=float(r), theta=float(theta), beta=beta)

    @classmethod
    def custom(cls, gamma: float, N, M) -> BathSpec:
        return cls(gamma=float(gamma), kind="custom", N_table=tuple(N), M_table=tuple(M))


def thermal_occupation(beta: float, omega_val: float, omega_min: float = OMEGA_MIN) -> float:
    """Bose occupation ``1 / (exp(beta * omega) - 1)``.

    Written as ``exp(-x) / -expm1(-x)`` so that large ``beta * omega``
    underflows cleanly to 0 instead of overflowing.
    """
    if not beta > 0.0:
        raise BathError(f"beta must be > 0, got {beta!r}")
    if not omega_val > omega_min:
        raise BathError(
            f"non-positive mode frequency: thermal occupation undefined "
            f"(Omega = {omega_val!r})"
        )
    x = beta * omega_val
    return math.exp(-x) / -math.expm1(-x)


@dataclass(frozen=True)
class CoefficientTables:
    """Per-level arrays feeding the master-equation stencil.

    ``N[n]`` and ``M[n]`` are the bath correlations at ``Omega[n]``.
    """

    gamma: float
    E: np.ndarray
    Omega: np.ndarray
    N: np.ndarray
    M: np.ndarray
    n_trunc: int
    beta: float | None = None

    @property
    def dim(self) -> int:
        return self.n_trunc + 1

    @property
    def is_thermal_type(self) -> bool:
        return not np.any(self.M)


def _check_frequencies(spectrum: SpectrumTable, omega_min: float) -> None:
    bad = np.nonzero(~(spectrum.Omega > omega_min))[0]
    if bad.size:
        n = int(bad[0])
        raise BathError(
            f"non-positive mode frequency: thermal occupation undefined "
            f"(Omega({n}) = {spectrum.Omega[n]!r} for {spectrum.profile_name})"
        )


def build_coefficients(bath: BathSpec, spectrum: SpectrumTable) -> CoefficientTables:
    """Evaluate N and M at every transition frequency of ``spectrum``."""
    dim = spectrum.dim
    if bath.kind == "thermal":
        _check_frequencies(spectrum, bath.omega_min)
        N = np.array([thermal_occupation(bath.beta, w, bath.omega_min) for w in spectrum.Omega])
        M = np.zeros(dim, dtype=complex)
    elif bath.kind == "squeezed":
        _check_frequencies(spectrum, bath.omega_min)
        sh, ch = math.sinh(bath.r), math.cosh(bath.r)
        N = np.full(dim, sh * sh)
        M = np.full(dim, -complex(math.cos(bath.theta), math.sin(bath.theta)) * sh * ch)
    else:
        if len(bath.N_table) < dim:
            raise BathError(
                f"custom bath tables hold {len(bath.N_table)} levels, need {dim}"
            )
        N = np.array(bath.N_table[:dim], dtype=float)
        M = np.array(bath.M_table[:dim], dtype=complex)
        if not (np.all(np.isfinite(N)) and np.all(N >= 0.0)):
            raise BathError("custom occupations must be finite and >= 0")
        if not np.all(np.isfinite(M)):
            raise BathError("custom squeezing correlations must be finite")

    excess = np.abs(M) ** 2 - N * (N + 1.0)
    if np.any(excess > BOUND_SLACK):
        n = int(np.argmax(excess))
        raise BathError(
            f"unphysical bath correlations: |M|^2 > N(N+1) at level {n} "
            f"(|M|^2={abs(M[n])**2:.6g}, N(N+1)={N[n] * (N[n] + 1):.6g})"
        )
    for arr in (N, M):
        arr.flags.writeable = False
    return CoefficientTables(
        gamma=bath.gamma,
        E=spectrum.E,
        Omega=spectrum.Omega,
        N=N,
        M=M,
        n_trunc=spectrum.n_trunc,
        beta=bath.beta if bath.kind == "thermal" else None,
    )


def bath_from_config(cfg: dict) -> BathSpec:
    """Build a bath from its JSON form."""
    kind = cfg.get("kind")
    if kind == "thermal":
        return BathSpec.thermal(cfg["gamma"], cfg["beta"])
    if kind == "squeezed":
        return BathSpec.squeezed(cfg["gamma"], cfg.get("r", 0.0), cfg.get("theta", 0.0), cfg.get("beta"))
    if kind == "custom":
        m_re = cfg.get("M_re", [0.0] * len(cfg["N"]))
        m_im = cfg.get("M_im", [0.0] * len(m_re))
        if len(m_re) != len(m_im):
            raise BathError("M_re and M_im must have equal length")
        return BathSpec.custom(cfg["gamma"], cfg["N"], [complex(a, b) for a, b in zip(m_re, m_im)])
    raise BathError(f"unknown bath kind {kind!r}")
