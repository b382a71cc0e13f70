"""Deformation functions and the deformed oscillator spectrum.

A deformation is specified through ``f2(n) = f(n)**2`` on Fock levels. Every
quantity downstream (energies, transition frequencies, commutator) is a
combination of ``n * f2(n)``, which is the only form that is finite for the
harmonious deformation at ``n = 0``.

Units: hbar = 1 and the bare oscillator frequency is 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "DeformationError",
    "DeformationProfile",
    "SpectrumTable",
    "f2",
    "nf2",
    "energy",
    "omega",
    "commutator_gap",
    "build_spectrum",
    "profile_from_config",
]

KINDS = ("identity", "q_deformed", "harmonious", "power", "tabulated")


class DeformationError(ValueError):
    """Raised when a deformation cannot be evaluated at a requested level."""


@dataclass(frozen=True)
class DeformationProfile:
    """Number-diagonal deformation ``f(n)``, stored through ``f(n)**2``.

    Parameters
    ----------
    kind : str
        One of ``identity``, ``q_deformed``, ``harmonious``, ``power``,
        ``tabulated``.
    lam : float
        q-deformation parameter (``q = exp(lam)``); ``lam = 0`` is the
        undeformed oscillator.
    p : float
        Exponent of the power family ``f2(n) = n**(p - 1)``. ``p = 0`` is the
        harmonious case and ``p = 1`` the identity.
    values : tuple of float
        Tabulated ``f2(0), f2(1), ...``.
    """

    kind: str = "identity"
    lam: float = 0.0
    p: float = 1.0
    values: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DeformationError(f"unknown deformation kind {self.kind!r}")
        if self.kind == "q_deformed" and not (self.lam >= 0.0 and math.isfinite(self.lam)):
            raise DeformationError("q deformation requires lambda >= 0")
        if self.kind == "power" and not math.isfinite(self.p):
            raise DeformationError("power deformation requires a finite exponent")
        if self.kind == "tabulated":
            object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @classmethod
    def identity(cls) -> DeformationProfile:
        return cls("identity")

    @classmethod
    def q_deformed(cls, lam: float) -> DeformationProfile:
        return cls("q_deformed", lam=float(lam))

    @classmethod
    def harmonious(cls) -> DeformationProfile:
        return cls("harmonious")

    @classmethod
    def power(cls, p: float) -> DeformationProfile:
        return cls("power", p=float(p))

    @classmethod
    def tabulated(cls, values: Sequence[float]) -> DeformationProfile:
        return cls("tabulated", values=tuple(values))

    @property
    def name(self) -> str:
        if self.kind == "q_deformed":
            return f"q_deformed(lambda={self.lam:g})"
        if self.kind == "power":
            return f"power(p={self.p:g})"
        if self.kind == "tabulated":
            return f"tabulated(len={len(self.values)})"
        return self.kind

    def f2(self, n: int) -> float:
        return f2(self, n)

    def nf2(self, n: int) -> float:
        return nf2(self, n)


def _raw_f2(profile: DeformationProfile, n: int) -> float:
    kind = profile.kind
    if kind == "identity":
        return 1.0
    if kind == "q_deformed":
        lam = profile.lam
        if lam == 0.0 or n == 0:
            return 1.0
        return math.sinh(n * lam) / (n * math.sinh(lam))
    if kind == "harmonious":
        # f2(0) is a sentinel; only n * f2(n) is ever used at n = 0
        return 1.0 if n == 0 else 1.0 / n
    if kind == "power":
        return 1.0 if n == 0 else float(n) ** (profile.p - 1.0)
    if n >= len(profile.values):
        raise DeformationError(
            f"deformation table exhausted: level {n} requested, "
            f"{len(profile.values)} values tabulated"
        )
    return profile.values[n]


def f2(profile: DeformationProfile, n: int) -> float:
    """Return ``f(n)**2`` for level ``n >= 0``.

    Raises
    ------
    DeformationError
        If a tabulated profile is too short, or if ``f2(n) <= 0`` for some
        ``n >= 1`` (``f`` would not be Hermitian and invertible there).
    """
    if n < 0:
        raise DeformationError(f"level index must be >= 0, got {n}")
    value = _raw_f2(profile, n)
    if n >= 1 and not (value > 0.0 and math.isfinite(value)):
        raise DeformationError(
            f"non-Hermitian deformation: f2({n}) = {value!r} for {profile.name}"
        )
    return value


def nf2(profile: DeformationProfile, n: int) -> float:
    """``n * f2(n)``, defined as 0 at ``n = 0`` by its limit."""
    if n == 0:
        if profile.kind == "tabulated":
            f2(profile, 0)
        return 0.0
    return n * f2(profile, n)


def energy(profile: DeformationProfile, n: int) -> float:
    """Level energy ``E_n = (n f2(n) + (n+1) f2(n+1)) / 2``."""
    return 0.5 * (nf2(profile, n) + nf2(profile, n + 1))


def omega(profile: DeformationProfile, n: int) -> float:
    """Transition frequency ``((n+2) f2(n+2) - n f2(n)) / 2``.

    May be zero or negative for exotic profiles; the bath layer decides
    whether such a frequency is acceptable.
    """
    return 0.5 * (nf2(profile, n + 2) - nf2(profile, n))


def commutator_gap(profile: DeformationProfile, n: int) -> float:
    """Diagonal element ``<n|[A, A^dag]|n> = (n+1) f2(n+1) - n f2(n)``."""
    return nf2(profile, n + 1) - nf2(profile, n)


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class SpectrumTable:
    """Per-level arrays over ``n = 0..n_trunc``.

    ``E`` holds the energies, ``Omega`` the transition frequencies and
    ``nf2`` the products ``n f2(n)`` (diagonal of ``A^dag A``).
    """

    profile_name: str
    n_trunc: int
    E: np.ndarray
    Omega: np.ndarray
    nf2: np.ndarray

    @property
    def dim(self) -> int:
        return self.n_trunc + 1


def build_spectrum(profile: DeformationProfile, n_trunc: int) -> SpectrumTable:
    """Tabulate energies and frequencies for levels ``0..n_trunc``.

    The frequency at the top levels needs ``f2`` up to ``n_trunc + 2``, so a
    tabulated profile must hold at least ``n_trunc + 3`` values.
    """
    if n_trunc < 1:
        raise DeformationError(f"n_trunc must be >= 1, got {n_trunc}")
    if profile.kind == "tabulated" and len(profile.values) < n_trunc + 3:
        raise DeformationError(
            f"deformation table exhausted: n_trunc={n_trunc} needs "
            f"{n_trunc + 3} values, got {len(profile.values)}"
        )
    prod = [nf2(profile, n) for n in range(n_trunc + 3)]
    E = [0.5 * (prod[n] + prod[n + 1]) for n in range(n_trunc + 1)]
    Om = [0.5 * (prod[n + 2] - prod[n]) for n in range(n_trunc + 1)]
    return SpectrumTable(
        profile_name=profile.name,
        n_trunc=n_trunc,
        E=_frozen(E),
        Omega=_frozen(Om),
        nf2=_frozen(prod[: n_trunc + 1]),
    )


def profile_from_config(cfg: dict) -> DeformationProfile:
    """Build a profile from its JSON form, e.g. ``{"kind": "q", "lambda": 0.1}``."""
    kind = cfg.get("kind")
    if kind == "identity":
        return DeformationProfile.identity()
    if kind in ("q", "q_deformed"):
        return DeformationProfile.q_deformed(cfg["lambda"])
    if kind == "harmonious":
        return DeformationProfile.harmonious()
    if kind == "power":
        return DeformationProfile.power(cfg["p"])
    if kind == "tabulated":
        return DeformationProfile.tabulated(cfg["values"])
    raise DeformationError(f"unknown deformation kind {kind!r}")
