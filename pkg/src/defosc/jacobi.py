"""Cyclic Jacobi eigenvalues for real symmetric and Hermitian matrices.

The sweep uses the round-robin (Brent-Luk) ordering: each sweep is split
into ``d - 1`` rounds of ``d / 2`` disjoint index pairs, and all rotations of
a round are applied at once as one orthogonal similarity transform.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

__all__ = ["JacobiError", "jacobi_eigvalsh", "hermitian_eigvalsh", "real_embedding"]


class JacobiError(RuntimeError):
    """Raised when the sweeps fail to converge."""


@lru_cache(maxsize=64)
def _round_robin(d: int):
    """Pairings for the ``d - 1`` rounds of a sweep (``d`` even)."""
    players = list(range(d))
    rounds = []
    for _ in range(d - 1):
        p = np.array([players[i] for i in range(d // 2)])
        q = np.array([players[d - 1 - i] for i in range(d // 2)])
        rounds.append((p, q))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(rounds)


def _off_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a - np.diag(a.diagonal())))


def jacobi_eigvalsh(a, tol: float = 1e-15, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues (ascending) of a real symmetric matrix.

    Sweeps stop once the off-diagonal Frobenius norm falls below
    ``tol * ||a||_F``.
    """
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    a = 0.5 * (a + a.T)
    d0 = a.shape[0]
    if d0 == 1:
        return a.diagonal().copy()
    d = d0 + (d0 % 2)
    if d != d0:
        # pad with an isolated zero row/column; its eigenvalue is dropped below
        a = np.pad(a, ((0, 1), (0, 1)))
    scale = float(np.linalg.norm(a))
    if scale == 0.0:
        return np.zeros(d0)
    threshold = tol * scale
    rounds = _round_robin(d)
    for _ in range(max_sweeps):
        if _off_norm(a) <= threshold:
            break
        for p, q in rounds:
            apq = a[p, q]
            app = a[p, p]
            aqq = a[q, q]
            active = apq != 0.0
            safe = np.where(active, apq, 1.0)
            with np.errstate(over="ignore"):
                # a subnormal apq gives tau = inf and hence t = 0: no rotation
                tau = (aqq - app) / (2.0 * safe)
                t = np.where(tau >= 0.0, 1.0, -1.0) / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            c = np.where(active, c, 1.0)
            s = np.where(active, s, 0.0)
            c = c[:, None]
            s = s[:, None]
            rp, rq = a[p, :], a[q, :]
            a[p, :], a[q, :] = c * rp - s * rq, s * rp + c * rq
            cp, cq = a[:, p].T, a[:, q].T
            a[:, p], a[:, q] = (c * cp - s * cq).T, (s * cp + c * cq).T
            a[p, q] = 0.0
            a[q, p] = 0.0
    else:
        if _off_norm(a) > threshold:
            raise JacobiError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")
    # the padding row never mixes, so it can be dropped by position
    return np.sort(a.diagonal()[:d0])


def real_embedding(h) -> np.ndarray:
    """Real symmetric ``[[Re, -Im], [Im, Re]]`` form of a Hermitian matrix."""
    h = np.asarray(h)
    re, im = h.real, h.imag
    return np.block([[re, -im], [im, re]])


def hermitian_eigvalsh(h, tol: float = 1e-15, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix via its real embedding.

    Every eigenvalue appears twice in the embedding; one copy of each is
    returned.
    """
    vals = jacobi_eigvalsh(real_embedding(h), tol=tol, max_sweeps=max_sweeps)
    return vals[::2]
