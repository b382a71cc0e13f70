"""Right-hand side of the number-basis master equation.

Two independent evaluations are provided:

* :func:`build_stencil` / :func:`apply_rhs` precompute one coefficient array
  per coupling and apply them with shifted array slices. This is the fast
  path used by the integrators.
* :func:`assemble_dense` writes the full superoperator by looping over
  target elements and evaluating each term from the per-level tables. It is
  the oracle for the stencil and the backend for null-space steady states.

Row-major flattening is used throughout: element ``(m, n)`` of a
``d x d`` density matrix sits at index ``m * d + n``.

Lamb/Stark shift terms are not included; reinstating them would only change
the unitary part of the diagonal coefficient.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .bath import CoefficientTables

__all__ = [
    "LiouvillianError",
    "StencilRHS",
    "build_stencil",
    "apply_rhs",
    "assemble_dense",
    "dense_to_json",
    "DENSE_ROW_CAP",
]

DENSE_ROW_CAP = 4096

# name -> (row shift of the source element, column shift)
COUPLING_SHIFTS = {
    "up_up": (1, 1),
    "down_down": (-1, -1),
    "down_up": (-1, 1),
    "up_down": (1, -1),
    "m_minus2": (-2, 0),
    "n_minus2": (0, -2),
    "m_plus2": (2, 0),
    "n_plus2": (0, 2),
}


class LiouvillianError(ValueError):
    """Non-finite coefficients, size limits or shape mismatches."""


@dataclass(frozen=True)
class StencilRHS:
    """Precomputed coefficients of the master equation on a ``d x d`` grid.

    ``couplings[name][m, n]`` multiplies the source element
    ``rho[m + dm, n + dn]`` in the equation for ``rho[m, n]``, with the
    shifts listed in ``COUPLING_SHIFTS``. Entries whose source falls outside
    the truncated basis are exactly zero.
    """

    tables: CoefficientTables
    diag_unitary: np.ndarray
    diag_decay: np.ndarray
    diag: np.ndarray
    couplings: dict
    has_squeezing: bool

    @property
    def dim(self) -> int:
        return self.tables.dim


def _shifted(arr: np.ndarray, shift: int) -> np.ndarray:
    """``out[k] = arr[k + shift]`` with zeros where the index leaves the array."""
    out = np.zeros_like(arr)
    d = arr.shape[0]
    if shift >= 0:
        out[: d - shift] = arr[shift:]
    else:
        out[-shift:] = arr[: d + shift]
    return out


def build_stencil(tables: CoefficientTables) -> StencilRHS:
    """Precompute every coupling coefficient for the given tables."""
    d = tables.dim
    g = tables.gamma
    idx = np.arange(d, dtype=float)
    m = idx[:, None]
    n = idx[None, :]
    E = np.asarray(tables.E, dtype=float)
    N = np.asarray(tables.N, dtype=float)
    M = np.asarray(tables.M, dtype=complex)
    # occupations one level down; the prefactor of every use vanishes at level 0
    N_dn = _shifted(N, -1)
    M_dn = _shifted(M, -1)
    Nm, Nn = N[:, None], N[None, :]
    Nm_dn, Nn_dn = N_dn[:, None], N_dn[None, :]
    Mm, Mn = M[:, None], M[None, :]
    Mm_dn, Mn_dn = M_dn[:, None], M_dn[None, :]

    diag_unitary = -1j * (E[:, None] - E[None, :])
    diag_decay = -g * (m * (1.0 + Nm_dn) + n * (1.0 + Nn_dn) + (m + 1.0) * Nm + (n + 1.0) * Nn)
    diag_decay = np.broadcast_to(diag_decay, (d, d)).astype(complex)

    c = {
        "up_up": g * np.sqrt((m + 1.0) * (n + 1.0)) * (2.0 + Nm + Nn),
        "down_down": g * np.sqrt(m * n) * (Nm_dn + Nn_dn),
        "down_up": g * np.sqrt(m * (n + 1.0)) * (Mn + Mm_dn),
        "up_down": g * np.sqrt((m + 1.0) * n) * (np.conj(Mm) + np.conj(Mn_dn)),
        "m_minus2": -g * np.sqrt(m * (m - 1.0)) * Mm_dn + 0.0 * n,
        "n_minus2": -g * np.sqrt(n * (n - 1.0)) * np.conj(Mn_dn) + 0.0 * m,
        "m_plus2": -g * np.sqrt((m + 1.0) * (m + 2.0)) * np.conj(Mm) + 0.0 * n,
        "n_plus2": -g * np.sqrt((n + 1.0) * (n + 2.0)) * Mn + 0.0 * m,
    }
    i_m = np.arange(d)[:, None]
    i_n = np.arange(d)[None, :]
    couplings = {}
    for name, (dm, dn) in COUPLING_SHIFTS.items():
        coef = np.array(np.broadcast_to(c[name], (d, d)), dtype=complex)
        outside = (i_m + dm < 0) | (i_m + dm > d - 1) | (i_n + dn < 0) | (i_n + dn > d - 1)
        coef[np.broadcast_to(outside, (d, d))] = 0.0
        couplings[name] = coef

    named = {"diag_unitary": diag_unitary, "diag_decay": diag_decay, **couplings}
    for name, coef in named.items():
        bad = np.argwhere(~np.isfinite(coef))
        if bad.size:
            mi, ni = (int(v) for v in bad[0])
            raise LiouvillianError(f"non-finite coefficient {name} at (m, n) = ({mi}, {ni})")

    diag = diag_unitary + diag_decay
    for arr in (diag_unitary, diag_decay, diag, *couplings.values()):
        arr.flags.writeable = False
    has_squeezing = bool(np.any(M))
    return StencilRHS(tables, diag_unitary, diag_decay, diag, couplings, has_squeezing)


def apply_rhs(stencil: StencilRHS, rho) -> np.ndarray:
    """Time derivative of ``rho`` under the master equation.

    ``rho`` may be a :class:`~defosc.states.DensityMatrix` or a square array.
    The input is not modified. The summation order per element is fixed.
    """
    rho = np.asarray(getattr(rho, "elements", rho))
    d = stencil.dim
    if rho.shape != (d, d):
        raise LiouvillianError(f"density matrix shape {rho.shape} does not match stencil dimension {d}")
    c = stencil.couplings
    out = stencil.diag * rho
    out[:-1, :-1] += c["up_up"][:-1, :-1] * rho[1:, 1:]
    out[1:, 1:] += c["down_down"][1:, 1:] * rho[:-1, :-1]
    if stencil.has_squeezing:
        out[1:, :-1] += c["down_up"][1:, :-1] * rho[:-1, 1:]
        out[:-1, 1:] += c["up_down"][:-1, 1:] * rho[1:, :-1]
        out[2:, :] += c["m_minus2"][2:, :] * rho[:-2, :]
        out[:, 2:] += c["n_minus2"][:, 2:] * rho[:, :-2]
        out[:-2, :] += c["m_plus2"][:-2, :] * rho[2:, :]
        out[:, :-2] += c["n_plus2"][:, :-2] * rho[:, 2:]
    return out


def assemble_dense(tables: CoefficientTables, row_cap: int = DENSE_ROW_CAP) -> np.ndarray:
    """Dense superoperator acting on row-major ``vec(rho)``.

    Built element by element from the per-level tables, sharing no
    coefficient arrays with :func:`build_stencil`.
    """
    d = tables.dim
    size = d * d
    if size > row_cap:
        raise LiouvillianError(f"dense Liouvillian too large: {size} rows exceed cap {row_cap}")
    g = float(tables.gamma)
    E = [float(x) for x in tables.E]
    N = [float(x) for x in tables.N]
    M = [complex(x) for x in tables.M]
    L = np.zeros((size, size), dtype=complex)

    def occ_below(k):
        return N[k - 1] if k >= 1 else 0.0

    def sq_below(k):
        return M[k - 1] if k >= 1 else 0.0

    for m in range(d):
        for n in range(d):
            row = m * d + n
            terms = []
            decay = (m * (1.0 + occ_below(m)) + n * (1.0 + occ_below(n))
                     + (m + 1) * N[m] + (n + 1) * N[n])
            terms.append((m, n, -1j * (E[m] - E[n]) - g * decay))
            terms.append((m + 1, n + 1, g * ((m + 1) * (n + 1)) ** 0.5 * (2.0 + N[m] + N[n])))
            terms.append((m - 1, n - 1, g * (m * n) ** 0.5 * (occ_below(m) + occ_below(n))))
            terms.append((m - 1, n + 1, g * (m * (n + 1)) ** 0.5 * (M[n] + sq_below(m))))
            terms.append((m + 1, n - 1, g * ((m + 1) * n) ** 0.5
                          * (M[m].conjugate() + complex(sq_below(n)).conjugate())))
            terms.append((m - 2, n, -g * (m * (m - 1)) ** 0.5 * sq_below(m) if m >= 2 else 0.0))
            terms.append((m, n - 2, -g * (n * (n - 1)) ** 0.5 * complex(sq_below(n)).conjugate() if n >= 2 else 0.0))
            terms.append((m + 2, n, -g * ((m + 1) * (m + 2)) ** 0.5 * M[m].conjugate()))
            terms.append((m, n + 2, -g * ((n + 1) * (n + 2)) ** 0.5 * M[n]))
            for sm, sn, coef in terms:
                if 0 <= sm < d and 0 <= sn < d:
                    L[row, sm * d + sn] += coef
    return L


def dense_to_json(L: np.ndarray, n_trunc: int) -> str:
    """Serialise a dense superoperator as ``{"n_trunc", "re", "im"}``."""
    return json.dumps({"n_trunc": n_trunc, "re": L.real.tolist(), "im": L.imag.tolist()})
