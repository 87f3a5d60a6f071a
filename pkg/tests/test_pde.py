"""Spatial discretisation: stencil, field dynamics, reduction to the ODE."""

import numpy as np
import pytest
from dataclasses import replace

from anthobs import (
    Grid,
    Measurement,
    ParameterSet,
    SpatialParameterSet,
    SpatialSystem,
    SpatialSystemState,
    WithinHostSystem,
    aggregate,
    check_conditions_spatial,
    laplacian_neumann,
    simulate,
    spatial_model_rhs,
    spatial_observer_rhs,
)
from anthobs import forcing as F
from anthobs import ode
from anthobs.pde import phi1_field, phi2_field, phi3_field, spatial_coefficients


@pytest.fixture(scope="module")
def uniform_sp(p):
    return SpatialParameterSet(base=p, spatial_profile="uniform")


class TestGrid:
    def test_spacing(self):
        g = Grid(1, 8)
        assert g.h == 0.125 and g.h * g.n == 1.0

    def test_centers_1d(self):
        g = Grid(1, 4)
        np.testing.assert_allclose(g.centers()[:, 0], [0.125, 0.375, 0.625, 0.875])

    def test_centers_2d_shape(self):
        g = Grid(2, 8)
        assert g.centers().shape == (8, 8, 2)

    def test_too_small_rejected(self):
        with pytest.raises(ValueError):
            Grid(1, 1)

    def test_bad_dim_rejected(self):
        with pytest.raises(ValueError):
            Grid(3, 8)


class TestLaplacian:
    def test_constant_field_is_flat(self):
        g = Grid(2, 16)
        out = laplacian_neumann(np.full(g.shape, 0.7), g, 1e-2)
        assert np.array_equal(out, np.zeros(g.shape))

    def test_quadratic_interior_identity(self):
        # f(x) = x^2 has second difference exactly 2 at interior cells
        g = Grid(1, 32)
        x = g.centers()[:, 0]
        out = laplacian_neumann(x ** 2, g, 1.0)
        np.testing.assert_allclose(out[1:-1], 2.0, rtol=1e-9)

    def test_conservation_random_fields(self):
        rng = np.random.default_rng(7)
        for dim in (1, 2):
            g = Grid(dim, 16)
            for _ in range(50):
                f = rng.random(g.shape)
                out = laplacian_neumann(f, g, 1e-2)
                assert abs(out.sum()) <= 1e-12 * np.abs(out).sum()

    def test_dissipative(self):
        # pure diffusion shrinks the L2 norm monotonically
        g = Grid(1, 32)
        rng = np.random.default_rng(3)
        f = rng.random(g.shape)
        dt = 0.4 * g.h ** 2 / (2 * 1e-2)
        norms = [float((f ** 2).mean())]
        for _ in range(1000):
            f = f + dt * laplacian_neumann(f, g, 1e-2)
            norms.append(float((f ** 2).mean()))
        diffs = np.diff(norms)
        assert np.all(diffs <= 1e-15)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape"):
            laplacian_neumann(np.zeros(5), Grid(1, 8), 1e-2)


class TestAggregate:
    def test_constant(self):
        assert aggregate(np.full((4, 4), 2.5)) == (2.5, 2.5, 2.5)

    def test_split_values(self):
        assert aggregate(np.array([0.0, 1.0, 0.0, 1.0])) == (0.0, 0.5, 1.0)

    def test_order(self):
        f = np.random.default_rng(12).random((6, 6))
        mn, mean, mx = aggregate(f)
        assert mn <= mean <= mx

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            aggregate(np.array([]))


class TestPointwiseKernels:
    """The field correction terms agree pointwise with the scalar forms."""

    def test_phi1_matches_scalar(self, p):
        rng = np.random.default_rng(5)
        th = rng.random(64)
        vh = rng.random(64)
        v = rng.random(64)
        field = phi1_field(th, vh, v, p.epsilon)
        scalar = np.array([
            ode.volume_gap(0.0, t, y, Measurement(vm, 0.0, 0.0), p)
            for t, y, vm in zip(th, vh, v)])
        assert np.array_equal(field, scalar)

    def test_phi2_matches_scalar(self, p, uniform_sp):
        rng = np.random.default_rng(6)
        th = rng.random(64)
        v = rng.random(64)
        rho = rng.random(64)
        drho = rng.standard_normal(64)
        q3 = np.ones(64)
        t = 0.11
        field = phi2_field(t, th, v, rho, drho, q3, p)
        scalar = np.array([
            ode.rot_innovation(t, x, Measurement(vm, rm, dm), p)
            for x, vm, rm, dm in zip(th, v, rho, drho)])
        assert np.array_equal(field, scalar)

    def test_phi3_matches_scalar(self, p):
        rng = np.random.default_rng(8)
        th = rng.random(64)
        vh = rng.random(64)
        t = 0.27
        field = phi3_field(t, th, vh, p)
        scalar = np.array([ode.growth_saturation(t, x, y, p) for x, y in zip(th, vh)])
        assert np.array_equal(field, scalar)

    def test_phi3_guard(self, p):
        with pytest.raises(ValueError):
            phi3_field(0.1, np.array([1.0 + 2 * p.epsilon]), np.array([0.5]), p)


class TestSpatialRhs:
    def test_constant_state_matches_ode_rhs(self, p, uniform_sp):
        g = Grid(2, 8)
        th, v, rho = 0.4, 0.3, 0.2
        s = SpatialSystemState(
            np.full(g.shape, th), np.full(g.shape, v), np.full(g.shape, rho),
            np.full(g.shape, 0.1), np.full(g.shape, v))
        d = spatial_model_rhs(0.11, s, g, uniform_sp)
        d_ode = ode.model_rhs(0.11, ode.ModelState(th, v, rho), p)
        for field, scalar in zip(d, d_ode):
            assert np.array_equal(field, np.full(g.shape, scalar))

    def test_vanishes_at_peak_time(self, p, sp):
        g = Grid(1, 8)
        s = SpatialSystemState(*(np.full(g.shape, x) for x in (0.4, 0.3, 0.2, 0.1, 0.3)))
        d = spatial_model_rhs(0.75, s, g, sp)
        for field in d:
            assert np.array_equal(field, np.zeros(g.shape))

    def test_two_equal_cells_have_zero_diffusion(self, p, sp):
        g = Grid(1, 2)
        s = SpatialSystemState(*(np.full(g.shape, x) for x in (0.4, 0.3, 0.2, 0.1, 0.3)))
        d_with = spatial_model_rhs(0.11, s, g, sp)
        d_without = spatial_model_rhs(0.11, s, g, replace(sp, diffusivity=0.0))
        np.testing.assert_array_equal(d_with[0], d_without[0])

    def test_observer_matches_model_at_truth_without_gains(self, p, sp):
        g = Grid(1, 8)
        rng = np.random.default_rng(4)
        th = 0.2 + 0.5 * rng.random(g.shape)
        v = 0.1 + 0.5 * rng.random(g.shape)
        rho = 0.1 * rng.random(g.shape)
        s = SpatialSystemState(th, v, rho, th.copy(), v.copy())
        d_model = spatial_model_rhs(0.11, s, g, sp)
        d_obs = spatial_observer_rhs(0.11, s, g, sp)
        np.testing.assert_allclose(d_obs[0], d_model[0], rtol=1e-13, atol=1e-16)
        np.testing.assert_allclose(d_obs[1], d_model[1], rtol=1e-13, atol=1e-16)


class TestReductionOracle:
    def test_uniform_profile_reproduces_ode_trajectory(self, p, uniform_sp):
        g = Grid(1, 4)
        pde_sys = SpatialSystem(uniform_sp, g, 0.75, 0.5, 0.75)
        ode_sys = WithinHostSystem(p, 0.75, 0.5, 0.75)
        tr_pde = simulate(pde_sys, 0.0, 0.2, 1e-4)
        tr_ode = simulate(ode_sys, 0.0, 0.2, 1e-4)
        for pde_arr, ode_arr in ((tr_pde.truth, tr_ode.truth),
                                 (tr_pde.observer, tr_ode.observer)):
            gap = np.abs(pde_arr - ode_arr[..., None]).max()
            assert gap <= 1e-6

    def test_uniform_profile_with_gains(self, p, uniform_sp):
        p2 = replace(p, k2=1e3)
        sp2 = SpatialParameterSet(base=p2, spatial_profile="uniform")
        g = Grid(1, 4)
        pde_sys = SpatialSystem(sp2, g, 0.75, 0.5, 0.75)
        ode_sys = WithinHostSystem(p2, 0.75, 0.5, 0.75)
        tr_pde = simulate(pde_sys, 0.0, 0.2, 1e-4)
        tr_ode = simulate(ode_sys, 0.0, 0.2, 1e-4)
        gap = np.abs(tr_pde.observer - tr_ode.observer[..., None]).max()
        assert gap <= 1e-6


class TestSpatialConditions:
    def test_reduces_to_ode_report_on_constant_run(self, p, uniform_sp):
        g = Grid(1, 4)
        pde_sys = SpatialSystem(uniform_sp, g, 0.75, 0.5, 0.75)
        tr_pde = simulate(pde_sys, 0.0, 0.3, 1e-4)
        ode_sys = WithinHostSystem(p, 0.75, 0.5, 0.75)
        tr_ode = simulate(ode_sys, 0.0, 0.3, 1e-4)
        rep_pde = check_conditions_spatial(tr_pde, g, uniform_sp)
        rep_ode = ode.check_conditions(tr_ode, p)
        assert rep_pde.alpha_inf == pytest.approx(rep_ode.alpha_inf, abs=1e-15)
        assert rep_pde.coercivity_inf == pytest.approx(rep_ode.coercivity_inf, rel=1e-9)
        assert rep_pde.dominance_inf == pytest.approx(rep_ode.dominance_inf, abs=1e-12)

    def test_gain_free_reduces_to_alpha_weight_inf(self, p, sp):
        g = Grid(1, 4)
        system = SpatialSystem(sp, g, 0.5, 0.5, 0.5)
        tr = simulate(system, 0.0, 0.05, 1e-4)
        rep = check_conditions_spatial(tr, g, sp)
        # K1 = K2 = 0: both stability infima equal inf over (t, x) of alpha*w
        assert rep.stability1_inf == rep.stability2_inf
        assert rep.stability1_inf >= rep.alpha_inf

    def test_k1_without_sensitivity_is_flagged(self, p):
        p1 = replace(p, k1=1e3)
        sp1 = SpatialParameterSet(base=p1)
        g = Grid(1, 4)
        system = SpatialSystem(sp1, g, 0.5, 0.5, 0.5)
        tr = simulate(system, 0.0, 0.02, 1e-4)
        rep = check_conditions_spatial(tr, g, sp1)
        assert rep.stability1_inf is None
        assert any("sensitivity" in note for note in rep.notes)

    def test_dominance_nonnegative_without_volume_gain(self, p):
        p2 = replace(p, k2=1e3)
        sp2 = SpatialParameterSet(base=p2)
        g = Grid(1, 4)
        system = SpatialSystem(sp2, g, 0.5, 0.5, 0.5)
        tr = simulate(system, 0.0, 0.05, 1e-4)
        rep = check_conditions_spatial(tr, g, sp2)
        assert rep.dominance_inf >= 0.0


class TestL2Envelope:
    def test_gain_free_run_obeys_flat_bound(self, p, sp):
        # inf alpha = 0 with the seasonal forcing, so the mean-square error
        # must never rise above its initial value (plus tolerance)
        g = Grid(1, 8)
        system = SpatialSystem(sp, g, 0.75, 0.5, 0.75)
        tr = simulate(system, 0.0, 0.3, 1e-4)
        err = tr.truth[:, 0] - tr.observer[:, 0]
        norm2 = (err ** 2).mean(axis=1)
        assert np.all(norm2 <= norm2[0] * (1 + 1e-3))

    def test_positive_baseline_gives_exponential_decay(self, p):
        # a constant baseline forcing makes inf alpha > 0 and the L2 norm
        # decay at least at rate 2*inf(alpha)
        p1 = replace(p, p1_mode="constant", p1_const=2.0)
        sp1 = SpatialParameterSet(base=p1)
        g = Grid(1, 8)
        system = SpatialSystem(sp1, g, 0.75, 0.5, 0.75)
        tr = simulate(system, 0.0, 0.3, 1e-4)
        err = tr.truth[:, 0] - tr.observer[:, 0]
        norm2 = (err ** 2).mean(axis=1)
        bound = norm2[0] * np.exp(-2.0 * 2.0 * tr.times)
        assert np.all(norm2 <= bound * (1 + 1e-3))


class TestCfl:
    def test_unstable_step_refused(self, p):
        sp_fast = SpatialParameterSet(base=p, diffusivity=10.0)
        g = Grid(2, 32)
        system = SpatialSystem(sp_fast, g, 0.5, 0.5, 0.5)
        with pytest.raises(ValueError, match="stability bound"):
            simulate(system, 0.0, 0.1, 1e-4)

    def test_reference_step_passes(self, p, sp):
        g = Grid(2, 32)
        system = SpatialSystem(sp, g, 0.5, 0.5, 0.5)
        assert system.cfl_limit() > p.dt
