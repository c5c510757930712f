import numpy as np
import pytest

from kinuq.collision import CollisionParams, build_kernel
from kinuq.fluid_solver import ConservedState, TransportCoeffs, euler_step
from kinuq.hybrid import (
    CriterionThresholds,
    HybridState,
    HybridStepConfig,
    LABEL_FLUID,
    LABEL_KINETIC,
    crit_fluid_to_kinetic,
    crit_kinetic_to_fluid,
    ghost_sync,
    hybrid_step,
    lift,
    project,
)
from kinuq.kinetic_solver import KineticStepConfig, ap_step, max_stable_dt
from kinuq.phase_space import (
    Boundary,
    DistributionField,
    KnudsenField,
    MacroState,
    SpatialGrid,
    VelocityGrid,
    discrete_maxwellian,
    discrete_maxwellian_values,
    l1_distance_values,
    moments,
    moments_of,
)

from conftest import double_peak_values, smooth_periodic_state


class TestFluidToKinetic:
    def test_uniform_state_stays_fluid(self):
        sg = SpatialGrid(20, 0.0, 1.0, Boundary.SPECULAR)
        m = MacroState.uniform(20, 1.0, 0.0, 0.0, 1.0)
        kn = KnudsenField.constant(20, 1e-2)
        mask = crit_fluid_to_kinetic(m, kn, TransportCoeffs(), CriterionThresholds(), sg)
        assert not mask.any()

    def test_shear_threshold_arithmetic(self):
        # eps=1, mu=rho=T=1, dux/dx = 0.02 (> eta0) vs eps=1e-4 (below)
        sg = SpatialGrid(20, 0.0, 1.0, Boundary.SPECULAR)
        m = MacroState(np.ones(20), 0.02 * sg.centers, np.zeros(20), np.ones(20))
        th = CriterionThresholds(eta0=1e-2)
        mask1 = crit_fluid_to_kinetic(m, KnudsenField.constant(20, 1.0),
                                      TransportCoeffs(), th, sg)
        assert mask1[1:-1].all()
        mask2 = crit_fluid_to_kinetic(m, KnudsenField.constant(20, 1e-4),
                                      TransportCoeffs(), th, sg)
        assert not mask2.any()

    def test_heat_flux_term_alone_triggers(self):
        # zero velocity gradient; quadratic temperature-gradient term decides
        sg = SpatialGrid(20, 0.0, 1.0, Boundary.SPECULAR)
        m = MacroState(np.ones(20), np.zeros(20), np.zeros(20),
                       1.0 + 2.0 * sg.centers)
        th = CriterionThresholds(eta0=1e-2)
        mask = crit_fluid_to_kinetic(m, KnudsenField.constant(20, 0.2),
                                     TransportCoeffs(), th, sg)
        # eps^2 * (dT)^2 / (rho^2 T^3): 0.04*4/T^3 > 0.01 on the left cells
        assert mask[1]
        assert not mask[-2]  # T ~ 3 there, term below threshold


class TestKineticToFluid:
    def test_discrete_maxwellian_is_equilibrium(self, vg32):
        vals = discrete_maxwellian_values(np.array([1.0]), np.array([0.2]),
                                          np.array([0.0]), np.array([0.9]), vg32)
        mask = crit_kinetic_to_fluid(vals, vg32, CriterionThresholds())
        assert mask[0]

    def test_double_peak_stays_kinetic(self, vg32):
        vals = double_peak_values(vg32)[None]
        mask = crit_kinetic_to_fluid(vals, vg32, CriterionThresholds())
        assert not mask[0]

    def test_threshold_edge_inclusive(self, vg32):
        # craft a perturbation with vanishing conserved moments, then set the
        # threshold to the exactly-computed distance: <= must accept it
        base = discrete_maxwellian_values(np.array([1.0]), np.array([0.0]),
                                          np.array([0.0]), np.array([1.0]), vg32)[0]
        rng = np.random.default_rng(2)
        v1, v2 = vg32.velocity_mesh()
        g = rng.random((32, 32)) * np.exp(-(v1**2 + v2**2) / 4.0)
        basis = np.stack([np.ones_like(g), v1 + 0 * g, v2 + 0 * g,
                          (v1**2 + v2**2) / 2 + 0 * g]).reshape(4, -1)
        coef, *_ = np.linalg.lstsq(basis.T, g.ravel(), rcond=None)
        h = (g.ravel() - basis.T @ coef).reshape(32, 32)
        f = (base + 1e-3 * h)[None]
        rho, ux, uy, temp = moments_of(f, vg32)
        meq = discrete_maxwellian_values(rho, ux, uy, temp, vg32)
        d = float(l1_distance_values(f, meq, vg32)[0])
        assert d > 1e-6   # genuinely perturbed
        assert crit_kinetic_to_fluid(f, vg32, CriterionThresholds(delta0=d))[0]
        assert not crit_kinetic_to_fluid(
            f, vg32, CriterionThresholds(delta0=d * (1 - 1e-12)))[0]


class TestLiftProject:
    def test_roundtrip_on_equilibrium(self, vg32):
        m = MacroState(np.array([1.0, 0.5]), np.array([0.3, -0.2]),
                       np.array([0.0, 0.1]), np.array([1.0, 0.7]))
        lifted = lift(m, vg32)
        back = project(lifted, vg32)
        assert np.abs(back.rho - m.rho).max() < 1e-6
        assert np.abs(back.temp - m.temp).max() < 1e-6

    def test_lift_matches_mass_exactly(self, vg32):
        m = MacroState(np.array([0.125]), np.array([0.0]), np.array([0.0]),
                       np.array([0.25]))
        lifted = lift(m, vg32)
        assert abs(lifted.sum() * vg32.cell_weight / 0.125 - 1.0) < 1e-12


class TestGhostSync:
    def _state(self, labels, vg, boundary=Boundary.SPECULAR):
        n = len(labels)
        sg = SpatialGrid(n, 0.0, 1.0, boundary)
        m = MacroState.uniform(n, 1.0, 0.1, 0.0, 1.0)
        vals = discrete_maxwellian_values(m.rho, m.ux, m.uy, m.temp, vg)
        f = DistributionField(vals, sg, vg)
        from kinuq.hybrid import RegimeLabels

        st = HybridState(f, m, RegimeLabels(np.array(labels, dtype=np.int8)),
                         KnudsenField.constant(n, 1e-2))
        return st

    def test_all_kinetic_no_interface(self, vg16):
        st = self._state([LABEL_KINETIC] * 8, vg16)
        kin_ghosts, flu_ghosts = ghost_sync(st)
        assert kin_ghosts == {} and flu_ghosts == {}

    def test_two_fluid_two_kinetic_neighbours(self, vg16):
        # fluid cells 0-3, kinetic 4-7: the two fluid cells nearest the
        # interface are lifted, the two nearest kinetic cells projected
        st = self._state([0, 0, 0, 0, 1, 1, 1, 1], vg16)
        kin_ghosts, flu_ghosts = ghost_sync(st)
        assert sorted(kin_ghosts) == [2, 3]
        assert sorted(flu_ghosts) == [4, 5]

    def test_interface_ghosts_reproduce_equilibrium_neighbour(self, vg32):
        st = self._state([0, 0, 0, 0, 1, 1, 1, 1], vg32)
        kin_ghosts, flu_ghosts = ghost_sync(st)
        # lifted fluid ghost vs the kinetic neighbour's stored distribution
        assert np.abs(kin_ghosts[3] - st.f.values[4]).max() < 1e-10
        # projected kinetic ghost vs the fluid neighbour's moment row
        rho, ux, uy, temp = flu_ghosts[4]
        assert rho == pytest.approx(1.0, abs=1e-10)
        assert temp == pytest.approx(1.0, abs=1e-10)


def _hybrid_state_from_macro(m, sg, vg, eps):
    return HybridState.all_fluid(m, sg, vg, KnudsenField.constant(sg.n_cells, eps))


class TestHybridStep:
    def test_all_fluid_bitwise_euler(self, vg16):
        sg = SpatialGrid(20, 0.0, 1.0, Boundary.PERIODIC)
        m = MacroState.uniform(20, 1.0, 0.2, 0.0, 1.0)
        state = _hybrid_state_from_macro(m, sg, vg16, 1e-4)
        kernel = build_kernel(CollisionParams(), vg16)
        cfg = HybridStepConfig(dt=1e-3)
        out, info = hybrid_step(state, kernel, cfg)
        assert info.fluid_updates == 20 and info.kinetic_updates == 0
        ref = euler_step(ConservedState.from_macro(m), sg, 1e-3).to_macro()
        assert np.array_equal(out.m.rho, ref.rho)
        assert np.array_equal(out.m.ux, ref.ux)
        assert np.array_equal(out.m.temp, ref.temp)

    def test_infinite_eta0_keeps_equilibrium_fluid(self, vg16, sg50_periodic):
        m = smooth_periodic_state(sg50_periodic)
        state = _hybrid_state_from_macro(m, sg50_periodic, vg16, 1e-2)
        kernel = build_kernel(CollisionParams(), vg16)
        cfg = HybridStepConfig(dt=1e-3, thresholds=CriterionThresholds(eta0=np.inf))
        out, info = hybrid_step(state, kernel, cfg)
        assert (out.labels.label == LABEL_FLUID).all()
        ref = euler_step(ConservedState.from_macro(m), sg50_periodic, 1e-3).to_macro()
        assert np.array_equal(out.m.rho, ref.rho)

    def test_all_kinetic_matches_ap_step_moments(self, vg32, sg50_periodic):
        vals = double_peak_values(vg32)[None] * \
            (1 + 0.3 * np.sin(2 * np.pi * sg50_periodic.centers))[:, None, None]
        f = DistributionField(vals, sg50_periodic, vg32)
        kn = KnudsenField.constant(50, 1e-1)
        state = HybridState.all_kinetic(f, kn)
        kernel = build_kernel(CollisionParams(beta0=4.0), vg32)
        dt = 0.4 * max_stable_dt(vg32, sg50_periodic)
        out, info = hybrid_step(state, kernel,
                                HybridStepConfig(dt=dt,
                                                 thresholds=CriterionThresholds(delta0=0.0)))
        assert info.kinetic_updates == 50
        assert (out.labels.label == LABEL_KINETIC).all()
        ref = ap_step(f, kn, kernel, KineticStepConfig(dt=dt))
        mm = moments(ref)
        assert np.abs(out.m.rho - mm.rho).max() < 1e-13
        assert np.abs(out.m.temp - mm.temp).max() < 1e-13

    def test_partition_and_single_update_invariants(self, vg16):
        # mixed labels, several steps: every cell updated exactly once
        sg = SpatialGrid(24, 0.0, 1.0, Boundary.PERIODIC)
        x = sg.centers
        m = MacroState(1 + 0.4 * np.sin(2 * np.pi * x), 0.5 * np.cos(2 * np.pi * x),
                       np.zeros(24), 1 + 0.3 * np.sin(4 * np.pi * x))
        state = _hybrid_state_from_macro(m, sg, vg16, 0.05)
        kernel = build_kernel(CollisionParams(beta0=4.0), vg16)
        cfg = HybridStepConfig(dt=0.3 * max_stable_dt(vg16, sg))
        for _ in range(10):
            state, info = hybrid_step(state, kernel, cfg)
            assert info.total_updates == 24
            assert set(np.unique(state.labels.label)) <= {LABEL_FLUID, LABEL_KINETIC}

    def test_authoritative_moments_on_kinetic_cells(self, vg16):
        sg = SpatialGrid(24, 0.0, 1.0, Boundary.PERIODIC)
        x = sg.centers
        m = MacroState(1 + 0.4 * np.sin(2 * np.pi * x), 0.5 * np.cos(2 * np.pi * x),
                       np.zeros(24), 1 + 0.3 * np.sin(4 * np.pi * x))
        state = _hybrid_state_from_macro(m, sg, vg16, 0.05)
        kernel = build_kernel(CollisionParams(beta0=4.0), vg16)
        cfg = HybridStepConfig(dt=0.3 * max_stable_dt(vg16, sg))
        state, info = hybrid_step(state, kernel, cfg)
        kin = state.labels.label == LABEL_KINETIC
        if kin.any():
            mm = MacroState(*moments_of(state.f.values[kin], vg16))
            assert np.abs(mm.rho - state.m.rho[kin]).max() < 1e-12
            assert np.abs(mm.temp - state.m.temp[kin]).max() < 1e-12

    def test_moved_cells_are_lifted_then_advanced(self, vg16):
        # a sharp velocity kink placed mid-domain must flip cells to kinetic
        sg = SpatialGrid(24, 0.0, 1.0, Boundary.PERIODIC)
        x = sg.centers
        ux = np.where(np.abs(x - 0.5) < 0.1, 0.5, 0.0)
        m = MacroState(np.ones(24), ux, np.zeros(24), np.ones(24))
        state = _hybrid_state_from_macro(m, sg, vg16, 0.5)
        kernel = build_kernel(CollisionParams(beta0=4.0), vg16)
        cfg = HybridStepConfig(dt=0.3 * max_stable_dt(vg16, sg))
        out, info = hybrid_step(state, kernel, cfg)
        assert info.moved_fk.any()
        moved = np.flatnonzero(info.moved_fk)
        assert (out.labels.label[moved] == LABEL_KINETIC).all()
        assert info.kinetic_updates == len(moved)
