"""Time integration, steady states and truncation/positivity monitoring."""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .bath import CoefficientTables
from .deformation import DeformationProfile, SpectrumTable
from .liouvillian import StencilRHS, apply_rhs
from .states import GUARD_LEVELS, DensityMatrix, ObservableRecord, observables, thermal_steady_state

__all__ = [
    "IntegrationError",
    "IntegratorConfig",
    "Trajectory",
    "NumericSteadyState",
    "rk4_step",
    "evolve",
    "steady_state_closed_form",
    "steady_state_detailed_balance",
    "steady_state_numeric",
    "dense_null_space_state",
]

log = logging.getLogger(__name__)

METHODS = ("rk4_fixed", "rk4_adaptive")
TERMINATIONS = ("completed", "converged_to_steady", "positivity_alarm", "guard_band_alarm")


class IntegrationError(RuntimeError):
    """Non-finite state or invalid integrator settings."""


@dataclass(frozen=True)
class IntegratorConfig:
    """Integrator settings.

    ``dt`` is the fixed step, or the initial step for ``rk4_adaptive``.
    ``steady_tol``, when set, stops the run as soon as the max-norm of the
    right-hand side drops below it.
    """

    method: str = "rk4_fixed"
    dt: float = 0.01
    t_end: float = 10.0
    sample_every: int = 1
    adapt_tol: float = 1e-10
    guard_threshold: float = 1e-8
    pos_tol: float = 1e-8
    steady_tol: float | None = None
    snapshots: bool = False
    dt_max: float | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise IntegrationError(f"unknown integrator method {self.method!r}")
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise IntegrationError(f"dt must be > 0, got {self.dt!r}")
        if not self.t_end >= self.dt:
            raise IntegrationError(f"t_end ({self.t_end!r}) must be >= dt ({self.dt!r})")
        if int(self.sample_every) < 1:
            raise IntegrationError("sample_every must be >= 1")
        if not self.adapt_tol > 0.0:
            raise IntegrationError("adapt_tol must be > 0")


@dataclass
class Trajectory:
    records: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    termination: str = "completed"
    final_state: np.ndarray | None = None
    positivity_alarm: bool = False
    steps: int = 0

    def column(self, name: str) -> np.ndarray:
        """Observable time series; ``p<k>`` selects a level population."""
        if name.startswith("p") and name[1:].isdigit():
            k = int(name[1:])
            return np.array([r.populations[k] for r in self.records])
        return np.array([getattr(r, name) for r in self.records])

    @property
    def times(self) -> np.ndarray:
        return self.column("t")


def rk4_step(stencil: StencilRHS, rho: np.ndarray, dt: float, k1: np.ndarray | None = None) -> np.ndarray:
    """One classical Runge-Kutta step; ``dt`` may be negative."""
    if k1 is None:
        k1 = apply_rhs(stencil, rho)
    k2 = apply_rhs(stencil, rho + (0.5 * dt) * k1)
    k3 = apply_rhs(stencil, rho + (0.5 * dt) * k2)
    k4 = apply_rhs(stencil, rho + dt * k3)
    return rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _doubling_step(stencil, rho, h, k1):
    """Full step vs two half steps; returns the extrapolated state and error."""
    full = rk4_step(stencil, rho, h, k1)
    half = rk4_step(stencil, rho, 0.5 * h, k1)
    two = rk4_step(stencil, half, 0.5 * h)
    diff = (two - full) / 15.0
    return two + diff, float(np.max(np.abs(diff)))


def _stability_check(stencil: StencilRHS, cfg: IntegratorConfig) -> None:
    if cfg.method != "rk4_fixed":
        return
    stiff = cfg.dt * float(np.max(np.abs(stencil.diag)))
    if stiff > 0.1:
        warnings.warn(
            f"dt * max|diagonal coefficient| = {stiff:.3g} exceeds 0.1; "
            "fixed-step RK4 may be inaccurate or unstable",
            RuntimeWarning,
            stacklevel=3,
        )


def evolve(rho0, stencil: StencilRHS, spectrum: SpectrumTable, cfg: IntegratorConfig) -> Trajectory:
    """Integrate the master equation from ``rho0`` up to ``cfg.t_end``.

    A record is taken at ``t = 0``, every ``sample_every`` steps and at the
    final time. The run stops early with ``guard_band_alarm`` once the top
    two levels hold more than ``guard_threshold``, or with
    ``converged_to_steady`` when ``steady_tol`` is set and reached. A
    sampled ``min_eig < -pos_tol`` raises the positivity flag without
    stopping the run.
    """
    rho = np.array(getattr(rho0, "elements", rho0), dtype=complex)
    if rho.shape != (stencil.dim, stencil.dim) or spectrum.dim != stencil.dim:
        raise IntegrationError(
            f"shape mismatch: state {rho.shape}, stencil {stencil.dim}, spectrum {spectrum.dim}"
        )
    _stability_check(stencil, cfg)
    traj = Trajectory()
    every = int(cfg.sample_every)
    t_end = float(cfg.t_end)

    def record(t, state):
        rec = observables(state, spectrum, t)
        if rec.min_eig < -cfg.pos_tol and not traj.positivity_alarm:
            log.warning("positivity alarm at t=%g: min eigenvalue %.3g", t, rec.min_eig)
            traj.positivity_alarm = True
        traj.records.append(rec)
        if cfg.snapshots:
            traj.snapshots.append((t, state.copy()))

    record(0.0, rho)
    step = 0
    t = 0.0
    h = float(cfg.dt)
    h_max = float(cfg.dt_max) if cfg.dt_max else t_end
    stopped = None
    while t < t_end and stopped is None:
        k1 = apply_rhs(stencil, rho)
        if cfg.steady_tol is not None and float(np.max(np.abs(k1))) < cfg.steady_tol:
            stopped = "converged_to_steady"
            break
        if cfg.method == "rk4_fixed":
            t_next = (step + 1) * cfg.dt
            if t_next >= t_end * (1.0 - 1e-12):
                t_next = t_end
            h = cfg.dt if t_next != t_end else t_end - t
            rho = rk4_step(stencil, rho, h, k1)
        else:
            h_try = min(h, t_end - t)
            while True:
                cand, err = _doubling_step(stencil, rho, h_try, k1)
                if not math.isfinite(err):
                    raise IntegrationError(f"non-finite state at step {step + 1} (t={t:g})")
                if err <= cfg.adapt_tol:
                    break
                h_try *= max(0.2, 0.9 * (cfg.adapt_tol / err) ** 0.2)
                if h_try < 1e-14 * max(t_end, 1.0):
                    raise IntegrationError(f"adaptive step size underflow at t={t:g}")
            rho = cand
            t_next = t + h_try
            if t_next >= t_end * (1.0 - 1e-12):
                t_next = t_end
            grow = 4.0 if err == 0.0 else min(4.0, 0.9 * (cfg.adapt_tol / err) ** 0.2)
            h = min(h_try * max(grow, 1.0), h_max)
        step += 1
        t = t_next
        if not np.all(np.isfinite(rho)):
            raise IntegrationError(f"non-finite state at step {step} (t={t:g})")
        guard = float(np.sum(rho.diagonal().real[-GUARD_LEVELS:]))
        if guard > cfg.guard_threshold:
            stopped = "guard_band_alarm"
            log.warning("guard band alarm at t=%g: top-level population %.3g", t, guard)
            record(t, rho)
            break
        if step % every == 0 or t >= t_end:
            record(t, rho)
    if stopped == "converged_to_steady" and traj.records[-1].t != t:
        record(t, rho)
    traj.steps = step
    traj.final_state = rho
    if stopped == "guard_band_alarm":
        traj.termination = "guard_band_alarm"
    elif traj.positivity_alarm:
        traj.termination = "positivity_alarm"
    elif stopped == "converged_to_steady":
        traj.termination = "converged_to_steady"
    else:
        traj.termination = "completed"
    return traj


def steady_state_closed_form(profile: DeformationProfile, beta: float, n_trunc: int) -> DensityMatrix:
    """Thermal stationary state; same as :func:`states.thermal_steady_state`."""
    return thermal_steady_state(profile, beta, n_trunc)


def steady_state_detailed_balance(tables: CoefficientTables) -> DensityMatrix:
    """Diagonal stationary state from ``p[n+1] / p[n] = N[n] / (1 + N[n])``.

    Only valid when the bath has no squeezing correlations.
    """
    if np.any(tables.M):
        raise IntegrationError("detailed balance requires thermal-type bath (M = 0)")
    N = np.asarray(tables.N, dtype=float)
    p = np.empty(tables.dim)
    p[0] = 1.0
    for n in range(tables.n_trunc):
        p[n + 1] = p[n] * (N[n] / (1.0 + N[n]))
    p /= p.sum()
    return DensityMatrix.from_array(np.diag(p).astype(complex))


@dataclass
class NumericSteadyState:
    state: np.ndarray
    converged: bool
    t: float
    residual: float
    trajectory: Trajectory | None = None

    @property
    def termination(self) -> str:
        return self.trajectory.termination if self.trajectory else ("converged_to_steady" if self.converged else "completed")


def steady_state_numeric(stencil: StencilRHS, spectrum: SpectrumTable, cfg: IntegratorConfig,
                         rho0, steady_tol: float = 1e-10) -> NumericSteadyState:
    """Evolve until ``max|RHS(rho)| < steady_tol`` or ``cfg.t_end``.

    Non-convergence is reported through ``converged=False`` and a warning.
    """
    tol = cfg.steady_tol if cfg.steady_tol is not None else steady_tol
    run_cfg = IntegratorConfig(
        method=cfg.method, dt=cfg.dt, t_end=cfg.t_end, sample_every=max(int(cfg.sample_every), 1),
        adapt_tol=cfg.adapt_tol, guard_threshold=cfg.guard_threshold, pos_tol=cfg.pos_tol,
        steady_tol=tol, snapshots=False, dt_max=cfg.dt_max,
    )
    traj = evolve(rho0, stencil, spectrum, run_cfg)
    rho = traj.final_state
    residual = float(np.max(np.abs(apply_rhs(stencil, rho))))
    converged = traj.termination == "converged_to_steady" or residual < tol
    if not converged:
        warnings.warn(
            f"numeric steady state not reached by t={traj.records[-1].t:g} "
            f"(max|RHS| = {residual:.3g} > {tol:.3g})",
            RuntimeWarning,
            stacklevel=2,
        )
    return NumericSteadyState(rho, converged, traj.records[-1].t, residual, traj)


def dense_null_space_state(L: np.ndarray, dim: int) -> np.ndarray:
    """Stationary state of a dense superoperator.

    One row of ``L vec(rho) = 0`` is replaced by the unit-trace condition
    and the system is solved directly.
    """
    A = np.array(L, dtype=complex)
    b = np.zeros(dim * dim, dtype=complex)
    A[0, :] = 0.0
    A[0, np.arange(dim) * (dim + 1)] = 1.0
    b[0] = 1.0
    x = np.linalg.solve(A, b)
    rho = x.reshape(dim, dim)
    return 0.5 * (rho + rho.conj().T)
