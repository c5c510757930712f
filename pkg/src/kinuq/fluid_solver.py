"""Second-order TVD finite-volume solver for the compressible Euler system.

Thermodynamics follow the two-dimensional velocity space of the kinetic
model: p = rho T, E = rho |u|^2 / 2 + rho T, sound speed c = sqrt(2 T)
(adiabatic index 2).  The transverse momentum rho*uy is advected as a
passive conserved component.  Fluxes are Rusanov on minmod-limited primitive
reconstructions, advanced with SSP-RK2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FluidVacuumError, StabilityError
from .phase_space import Boundary, MacroState, SpatialGrid

_RHO, _MX, _MY, _EN = 0, 1, 2, 3


@dataclass(frozen=True)
class TransportCoeffs:
    """Viscosity/conductivity surrogates entering the regime criterion only."""

    mu: float = 1.0
    kappa: float = 1.0

    def __post_init__(self):
        if self.mu <= 0 or self.kappa <= 0:
            raise ValueError("transport coefficients must be positive")


@dataclass
class ConservedState:
    """Per-cell conserved vector (rho, rho ux, rho uy, E), shape (n_cells, 4)."""

    u: np.ndarray

    @staticmethod
    def from_macro(m: MacroState) -> "ConservedState":
        u = np.stack([m.rho, m.rho * m.ux, m.rho * m.uy, m.energy()], axis=-1)
        return ConservedState(u)

    def to_macro(self) -> MacroState:
        rho = self.u[:, _RHO]
        ux = self.u[:, _MX] / rho
        uy = self.u[:, _MY] / rho
        temp = (self.u[:, _EN] - 0.5 * rho * (ux**2 + uy**2)) / rho
        return MacroState(rho, ux, uy, temp)

    def validate(self):
        rho = self.u[:, _RHO]
        if np.any(~np.isfinite(self.u)):
            raise FluidVacuumError(int(np.argwhere(~np.isfinite(self.u).all(axis=1))[0, 0]), "finiteness")
        if np.any(rho <= 0):
            raise FluidVacuumError(int(np.argwhere(rho <= 0)[0, 0]), "density")
        e_int = self.u[:, _EN] - 0.5 * (self.u[:, _MX] ** 2 + self.u[:, _MY] ** 2) / rho
        if np.any(e_int <= 0):
            raise FluidVacuumError(int(np.argwhere(e_int <= 0)[0, 0]), "internal energy")

    def copy(self) -> "ConservedState":
        return ConservedState(self.u.copy())


def _primitives(u: np.ndarray) -> np.ndarray:
    rho = u[:, _RHO]
    ux = u[:, _MX] / rho
    uy = u[:, _MY] / rho
    p = u[:, _EN] - 0.5 * rho * (ux**2 + uy**2)  # = rho T
    return np.stack([rho, ux, uy, p], axis=-1)


def _conserved(w: np.ndarray) -> np.ndarray:
    rho, ux, uy, p = w[:, 0], w[:, 1], w[:, 2], w[:, 3]
    return np.stack([rho, rho * ux, rho * uy, p + 0.5 * rho * (ux**2 + uy**2)], axis=-1)


def _flux(w: np.ndarray) -> np.ndarray:
    rho, ux, uy, p = w[:, 0], w[:, 1], w[:, 2], w[:, 3]
    en = p + 0.5 * rho * (ux**2 + uy**2)
    return np.stack([rho * ux, rho * ux**2 + p, rho * ux * uy, (en + p) * ux], axis=-1)


def _minmod(a, b):
    return 0.5 * (np.sign(a) + np.sign(b)) * np.minimum(np.abs(a), np.abs(b))


def _pad(u: np.ndarray, boundary: Boundary, ghosts=None) -> np.ndarray:
    if ghosts is not None:
        left, right = ghosts
        return np.concatenate([left, u, right], axis=0)
    if boundary is Boundary.PERIODIC:
        return np.concatenate([u[-2:], u, u[:2]], axis=0)
    left = u[1::-1].copy()
    right = u[:-3:-1].copy()
    left[:, _MX] *= -1.0   # specular wall: normal momentum reflects
    right[:, _MX] *= -1.0
    return np.concatenate([left, u, right], axis=0)


def _rhs_fluxes(u: np.ndarray, boundary: Boundary, ghosts=None) -> np.ndarray:
    """Rusanov interface fluxes on MUSCL primitive reconstruction, (n+1, 4)."""
    up = _pad(u, boundary, ghosts)
    w = _primitives(up)
    d = np.diff(w, axis=0)
    sig = _minmod(d[:-1], d[1:])           # slopes for cells 1..n+2 of the pad
    wl = w[1:-2] + 0.5 * sig[:-1]          # left state at interface
    wr = w[2:-1] - 0.5 * sig[1:]           # right state
    # reconstruction can undershoot near vacuum; clip to the unreconstructed value
    for q in (0, 3):
        bad_l = wl[:, q] <= 0
        bad_r = wr[:, q] <= 0
        if bad_l.any():
            wl[bad_l] = w[1:-2][bad_l]
        if bad_r.any():
            wr[bad_r] = w[2:-1][bad_r]
    cl = np.sqrt(2.0 * wl[:, 3] / wl[:, 0])
    cr = np.sqrt(2.0 * wr[:, 3] / wr[:, 0])
    s = np.maximum(np.abs(wl[:, 1]) + cl, np.abs(wr[:, 1]) + cr)[:, None]
    return 0.5 * (_flux(wl) + _flux(wr)) - 0.5 * s * (_conserved(wr) - _conserved(wl))


def euler_step_values(u: np.ndarray, dx: float, boundary: Boundary, dt: float,
                      ghosts=None, cfl_check: bool = True) -> np.ndarray:
    """SSP-RK2 step on raw conserved values; ghosts (if given) stay frozen."""
    if cfl_check:
        w = _primitives(u)
        smax = float(np.max(np.abs(w[:, 1]) + np.sqrt(2.0 * w[:, 3] / w[:, 0])))
        if dt * smax / dx > 1.0 + 1e-12:
            raise StabilityError(dt, dx / smax)

    lam = dt / dx

    def fe(v):
        fl = _rhs_fluxes(v, boundary, ghosts)
        return v - lam * (fl[1:] - fl[:-1])

    u1 = fe(u)
    out = 0.5 * (u + fe(u1))

    rho = out[:, _RHO]
    if np.any(rho <= 0) or np.any(~np.isfinite(out)):
        bad = int(np.argwhere((rho <= 0) | ~np.isfinite(out).all(axis=1))[0, 0])
        raise FluidVacuumError(bad, "density")
    e_int = out[:, _EN] - 0.5 * (out[:, _MX] ** 2 + out[:, _MY] ** 2) / rho
    if np.any(e_int <= 0):
        raise FluidVacuumError(int(np.argwhere(e_int <= 0)[0, 0]), "internal energy")
    return out


def euler_step(s: ConservedState, sg: SpatialGrid, dt: float,
               cfl_check: bool = True) -> ConservedState:
    return ConservedState(euler_step_values(s.u, sg.dx, sg.boundary, dt,
                                            cfl_check=cfl_check))


def gradients(m: MacroState, sg: SpatialGrid):
    """(d ux/dx, d T/dx) per cell: central interior, one-sided at walls."""
    dux = _grad1(m.ux, sg)
    dt = _grad1(m.temp, sg)
    return dux, dt


def _grad1(q: np.ndarray, sg: SpatialGrid) -> np.ndarray:
    dx = sg.dx
    if sg.boundary is Boundary.PERIODIC:
        return (np.roll(q, -1) - np.roll(q, 1)) / (2.0 * dx)
    g = np.empty_like(q)
    g[1:-1] = (q[2:] - q[:-2]) / (2.0 * dx)
    g[0] = (q[1] - q[0]) / dx
    g[-1] = (q[-1] - q[-2]) / dx
    return g


def max_wave_speed(m: MacroState) -> float:
    """max over cells of |ux| + sqrt(2 T)."""
    return float(np.max(np.abs(m.ux) + np.sqrt(2.0 * m.temp)))
