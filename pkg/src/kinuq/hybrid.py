"""Coupled kinetic/fluid stepping with per-cell regime switching.

Each step runs a staggered pipeline so every cell is advanced by exactly one
solver:

  (a) evaluate the breakdown criterion on fluid cells, move failures to the
      kinetic set and lift their moments into distributions;
  (b) advance the remaining fluid cells with the Euler solver;
  (c) advance all kinetic cells (including the freshly lifted ones) with the
      penalised kinetic step;
  (d) evaluate the equilibrium criterion on the updated kinetic cells and
      project the near-equilibrium ones back to fluid.

Moving criterion evaluation after (fluid) or before (kinetic) the solver
update prevents cells from oscillating between sets without ever being
advanced.  At kinetic/fluid interfaces each side sees two ghost cells built
from the neighbour's time-n state: fluid neighbours are lifted to discrete
Maxwellians, kinetic neighbours are projected to their moments.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import collision
from .errors import InvalidStateError
from .fluid_solver import ConservedState, TransportCoeffs, euler_step_values, gradients
from .kinetic_solver import KineticStepConfig, _flip_v1, ap_step_cached
from .phase_space import (
    Boundary,
    DistributionField,
    KnudsenField,
    MacroState,
    SpatialGrid,
    VelocityGrid,
    discrete_maxwellian_values,
    l1_distance_values,
    moments_of,
)

LABEL_FLUID = 0
LABEL_KINETIC = 1


@dataclass(frozen=True)
class CriterionThresholds:
    eta0: float = 1e-2
    delta0: float = 1e-4

    def __post_init__(self):
        if self.eta0 <= 0 or self.delta0 < 0:
            raise InvalidStateError("thresholds must be positive")


@dataclass
class RegimeLabels:
    label: np.ndarray                       # int8, 0=fluid 1=kinetic
    history: list = field(default_factory=list)

    def record(self, step: int):
        self.history.append((step, self.label.copy()))

    def kinetic_fraction(self) -> float:
        return float(np.mean(self.label == LABEL_KINETIC))


@dataclass
class HybridState:
    f: DistributionField
    m: MacroState
    labels: RegimeLabels
    kn: KnudsenField
    # per-cell (moments, matched Maxwellian) of f at t^n on kinetic cells;
    # rebuilt by each step from its criterion pass, so the next step's
    # collision stage starts without re-deriving them
    eq_cache: dict | None = None

    @property
    def sgrid(self) -> SpatialGrid:
        return self.f.sgrid

    @property
    def vgrid(self) -> VelocityGrid:
        return self.f.vgrid

    @staticmethod
    def all_kinetic(f: DistributionField, kn: KnudsenField) -> "HybridState":
        from .phase_space import moments

        lbl = np.full(f.sgrid.n_cells, LABEL_KINETIC, dtype=np.int8)
        return HybridState(f, moments(f), RegimeLabels(lbl), kn)

    @staticmethod
    def all_fluid(m: MacroState, sg: SpatialGrid, vg: VelocityGrid,
                  kn: KnudsenField) -> "HybridState":
        vals = discrete_maxwellian_values(m.rho, m.ux, m.uy, m.temp, vg)
        lbl = np.full(sg.n_cells, LABEL_FLUID, dtype=np.int8)
        return HybridState(DistributionField(vals, sg, vg), m.copy(), RegimeLabels(lbl), kn)


@dataclass
class StepInfo:
    moved_fk: np.ndarray
    moved_kf: np.ndarray
    fluid_updates: int
    kinetic_updates: int

    @property
    def total_updates(self) -> int:
        return self.fluid_updates + self.kinetic_updates


def crit_fluid_to_kinetic(m: MacroState, kn: KnudsenField, coeffs: TransportCoeffs,
                          th: CriterionThresholds, sg: SpatialGrid) -> np.ndarray:
    """Hydrodynamic breakdown test per cell (true = switch to kinetic)."""
    dux, dtemp = gradients(m, sg)
    eps = np.where(np.isinf(kn.eps), 0.0, kn.eps)
    shear = eps * coeffs.mu / (m.rho * m.temp) * dux
    heat = eps**2 * coeffs.kappa**2 / (m.rho**2 * m.temp**3) * dtemp**2
    return (np.abs(shear + heat) > th.eta0) | (np.abs(shear) > th.eta0)


def crit_kinetic_to_fluid(values: np.ndarray, vg: VelocityGrid,
                          th: CriterionThresholds) -> np.ndarray:
    """Equilibrium test per cell: L1_v distance to the local (discrete)
    Maxwellian at or below delta0 (inclusive)."""
    rho, ux, uy, temp = moments_of(values, vg)
    meq = discrete_maxwellian_values(rho, ux, uy, temp, vg)
    return l1_distance_values(values, meq, vg) <= th.delta0


def lift(m: MacroState, vg: VelocityGrid) -> np.ndarray:
    """Moments -> distribution on designated cells; discrete moments match m
    exactly, so no conserved quantity jumps at the transition."""
    return discrete_maxwellian_values(m.rho, m.ux, m.uy, m.temp, vg)


def project(values: np.ndarray, vg: VelocityGrid) -> MacroState:
    """Distribution -> moments on designated cells."""
    return MacroState(*moments_of(values, vg))


def _segments(mask: np.ndarray, periodic: bool):
    """Maximal runs of True cells; a periodic wrap-around run is rotated into
    one contiguous (start, length) pair with start near the end."""
    n = mask.size
    if mask.all():
        return [(0, n)]
    if not mask.any():
        return []
    idx = np.flatnonzero(np.diff(np.concatenate([[False], mask, [False]]).astype(int)))
    runs = [(int(idx[i]), int(idx[i + 1] - idx[i])) for i in range(0, len(idx), 2)]
    if periodic and len(runs) > 1 and runs[0][0] == 0 and sum(runs[-1]) == n:
        first, last = runs[0], runs.pop()
        runs[0] = (last[0], last[1] + first[1])  # wraps past n-1
    return runs


def ghost_sync(state: HybridState):
    """Interface ghost data at time n.

    Returns (kinetic_ghosts, fluid_ghosts): fluid cells within two cells of a
    kinetic cell mapped to lifted distributions, and kinetic cells within two
    cells of a fluid cell mapped to projected moment rows (rho, ux, uy, T).
    """
    lbl = state.labels.label
    n = lbl.size
    periodic = state.sgrid.boundary is Boundary.PERIODIC
    kin = lbl == LABEL_KINETIC
    flu = ~kin

    def near(src_mask):
        out = np.zeros(n, dtype=bool)
        for off in (-2, -1, 1, 2):
            rolled = np.roll(src_mask, off)
            if not periodic:  # no wrap: offsets crossing the wall do not count
                if off > 0:
                    rolled[:off] = False
                else:
                    rolled[off:] = False
            out |= rolled
        return out

    lift_cells = np.flatnonzero(flu & near(kin))
    proj_cells = np.flatnonzero(kin & near(flu))

    kinetic_ghosts = {}
    if lift_cells.size:
        sub = MacroState(state.m.rho[lift_cells], state.m.ux[lift_cells],
                         state.m.uy[lift_cells], state.m.temp[lift_cells])
        lifted = lift(sub, state.vgrid)
        kinetic_ghosts = {int(c): lifted[i] for i, c in enumerate(lift_cells)}
    fluid_ghosts = {}
    for c in proj_cells:
        rho, ux, uy, temp = moments_of(state.f.values[c], state.vgrid)
        fluid_ghosts[int(c)] = np.array([rho, ux, uy, temp])
    return kinetic_ghosts, fluid_ghosts


@dataclass(frozen=True)
class HybridStepConfig:
    dt: float
    thresholds: CriterionThresholds = CriterionThresholds()
    coeffs: TransportCoeffs = TransportCoeffs()
    cfl_check: bool = True


def hybrid_step(state: HybridState, kernel: collision.SpectralKernel,
                cfg: HybridStepConfig):
    """One coupled step; returns (new_state, StepInfo)."""
    sg, vg = state.sgrid, state.vgrid
    n = sg.n_cells
    periodic = sg.boundary is Boundary.PERIODIC
    lbl = state.labels.label.copy()
    m_now = state.m           # authoritative moments at t^n (kinetic cells refreshed)
    f_vals = state.f.values.copy()
    inv_eps = state.kn.inv_eps

    eq_mom = state.eq_cache["moments"].copy() if state.eq_cache else \
        np.stack([m_now.rho, m_now.ux, m_now.uy, m_now.temp])
    eq_meq = state.eq_cache["meq"].copy() if state.eq_cache else None

    # (a) breakdown criterion on fluid cells, move and lift
    breakdown = crit_fluid_to_kinetic(m_now, state.kn, cfg.coeffs, cfg.thresholds, sg)
    moved_fk = (lbl == LABEL_FLUID) & breakdown
    if moved_fk.any():
        cells = np.flatnonzero(moved_fk)
        sub = MacroState(m_now.rho[cells], m_now.ux[cells], m_now.uy[cells],
                         m_now.temp[cells])
        lifted = lift(sub, vg)
        f_vals[cells] = lifted
        lbl[cells] = LABEL_KINETIC
        eq_mom[:, cells] = np.stack([sub.rho, sub.ux, sub.uy, sub.temp])
        if eq_meq is not None:
            eq_meq[cells] = lifted

    kin_mask = lbl == LABEL_KINETIC
    flu_mask = ~kin_mask

    u_now = ConservedState.from_macro(m_now).u   # moment field at t^n
    new_u = u_now.copy()
    fluid_updates = 0

    # (b) fluid segments advance with frozen ghosts from the t^n moment field
    if flu_mask.all():
        new_u = euler_step_values(u_now, sg.dx, sg.boundary, cfg.dt,
                                  cfl_check=cfg.cfl_check)
        fluid_updates = n
    else:
        for start, length in _segments(flu_mask, periodic):
            sel = np.arange(start, start + length) % n
            ghosts = _fluid_ghosts(u_now, start, length, n, sg.boundary)
            new_u[sel] = euler_step_values(u_now[sel], sg.dx, sg.boundary,
                                           cfg.dt, ghosts=ghosts,
                                           cfl_check=cfg.cfl_check)
            fluid_updates += length

    # (c) kinetic segments advance; fluid neighbours supply lifted ghosts
    new_f = f_vals.copy()
    kinetic_updates = 0

    def eq_for(sel):
        if eq_meq is None:
            return None
        mom = tuple(eq_mom[i, sel] for i in range(4))
        return (mom, eq_meq[sel])

    if kin_mask.all():
        cfg_k = KineticStepConfig(dt=cfg.dt, cfl_check=cfg.cfl_check)
        sel_all = np.arange(n)
        new_f, _ = ap_step_cached(f_vals, sg.dx, sg.boundary, vg, inv_eps,
                                  kernel, cfg_k, eq_old=eq_for(sel_all))
        kinetic_updates = n
    elif kin_mask.any():
        cfg_k = KineticStepConfig(dt=cfg.dt, cfl_check=cfg.cfl_check)
        for start, length in _segments(kin_mask, periodic):
            sel = np.arange(start, start + length) % n
            ghosts = _kinetic_ghosts(f_vals, m_now, lbl, start, length, n,
                                     sg.boundary, vg)
            new_f[sel], _ = ap_step_cached(f_vals[sel], sg.dx, sg.boundary, vg,
                                           inv_eps[sel], kernel, cfg_k,
                                           ghosts=ghosts, eq_old=eq_for(sel))
            kinetic_updates += length

    # (d) equilibrium criterion on updated kinetic cells, project movers
    moved_kf = np.zeros(n, dtype=bool)
    rho_k = uxk = uyk = tk = None
    new_cache = {"moments": np.zeros((4, n)),
                 "meq": np.zeros_like(new_f)}
    if kin_mask.any():
        kcells = np.flatnonzero(kin_mask)
        rho_k, uxk, uyk, tk = moments_of(new_f[kcells], vg)
        meq = discrete_maxwellian_values(rho_k, uxk, uyk, tk, vg)
        near_eq = l1_distance_values(new_f[kcells], meq, vg) <= cfg.thresholds.delta0
        moved_kf[kcells[near_eq]] = True
        lbl[kcells[near_eq]] = LABEL_FLUID
        new_cache["moments"][:, kcells] = np.stack([rho_k, uxk, uyk, tk])
        new_cache["meq"][kcells] = meq

    # assemble: moments on kinetic cells refresh from the updated f
    m_new = ConservedState(new_u).to_macro()
    if kin_mask.any():
        kcells = np.flatnonzero(kin_mask)
        m_new.rho[kcells] = rho_k
        m_new.ux[kcells] = uxk
        m_new.uy[kcells] = uyk
        m_new.temp[kcells] = tk
    m_new.validate()

    if fluid_updates + kinetic_updates != n:
        raise InvalidStateError(
            f"update tally {fluid_updates}+{kinetic_updates} != {n} cells")

    labels = RegimeLabels(lbl, state.labels.history)
    out = HybridState(DistributionField(new_f, sg, vg), m_new, labels, state.kn,
                      eq_cache=new_cache)
    return out, StepInfo(moved_fk, moved_kf, fluid_updates, kinetic_updates)


def _fluid_ghosts(u_now: np.ndarray, start: int, length: int, n: int,
                  boundary: Boundary):
    """Two frozen ghost states per side of a fluid segment (projected moments
    double as the ghost states of kinetic neighbours since u_now holds the
    authoritative moment field)."""
    left_idx = [start - 2, start - 1]
    right_idx = [start + length, start + length + 1]
    if boundary is Boundary.PERIODIC:
        left = u_now[np.asarray(left_idx) % n]
        right = u_now[np.asarray(right_idx) % n]
        return left, right
    left = _wall_or_interior(u_now, left_idx, n)
    right = _wall_or_interior(u_now, right_idx, n)
    return left, right


def _wall_or_interior(u_now: np.ndarray, idx, n: int) -> np.ndarray:
    rows = []
    for j in idx:
        if 0 <= j < n:
            rows.append(u_now[j])
        else:  # specular mirror of the interior cell reflected at the wall
            mirror = -1 - j if j < 0 else 2 * n - 1 - j
            row = u_now[mirror].copy()
            row[1] *= -1.0
            rows.append(row)
    return np.stack(rows)


def _kinetic_ghosts(f_vals: np.ndarray, m_now: MacroState, lbl: np.ndarray,
                    start: int, length: int, n: int, boundary: Boundary,
                    vg: VelocityGrid):
    """Two ghost distributions per side of a kinetic segment: kinetic
    neighbours pass their f, fluid neighbours are lifted, walls mirror."""

    def value_at(j: int) -> np.ndarray:
        if boundary is Boundary.PERIODIC:
            j %= n
        if 0 <= j < n:
            if lbl[j] == LABEL_KINETIC:
                return f_vals[j]
            sub = MacroState(m_now.rho[j:j + 1], m_now.ux[j:j + 1],
                             m_now.uy[j:j + 1], m_now.temp[j:j + 1])
            return lift(sub, vg)[0]
        mirror = -1 - j if j < 0 else 2 * n - 1 - j
        return _flip_v1(value_at(mirror))

    left = np.stack([value_at(start - 2), value_at(start - 1)])
    right = np.stack([value_at(start + length), value_at(start + length + 1)])
    return left, right
