"""Coupled truth+observer systems consumed by :func:`anthobs.stepping.simulate`.

A system bundles initial states, invariant boxes, right-hand sides and
measurement synthesis.  States are stacked numpy arrays: component axis
first, then (for the spatial system) the grid axes, so the same integrator
drives both models.
"""

from __future__ import annotations

import numpy as np

from . import forcing, ode, pde
from .params import ParameterSet, SpatialParameterSet
from .stepping import cfl_step_limit

__all__ = ["WithinHostSystem", "SpatialSystem", "MEASUREMENT_MODES"]

MEASUREMENT_MODES = ("exact", "finite_difference")

#: Order of stacked components across truth then observer state.
COMPONENTS = ("theta", "v", "rho", "theta_hat", "v_hat")


class WithinHostSystem:
    """Within-host model coupled to its observer.

    Truth state is ``[theta, v, rho]``; observer state is
    ``[theta_hat, v_hat]`` with the fixed initialisation ``theta_hat(0) = 0``
    and ``v_hat(0) = v(0)`` assumed by the convergence analysis.
    """

    component_names = COMPONENTS
    #: run on the plain-float integration loop
    scalar = True

    def __init__(self, p: ParameterSet, theta0: float, v0: float, rho0: float,
                 measurement_mode: str = "exact"):
        if measurement_mode not in MEASUREMENT_MODES:
            raise ValueError(f"unknown measurement mode {measurement_mode!r}")
        if not (0.0 <= theta0 <= 1.0 and 0.0 <= v0 <= p.v_max and 0.0 <= rho0 <= 1.0):
            raise ValueError(
                f"initial state ({theta0}, {v0}, {rho0}) outside the state box")
        self.p = p
        self.measurement_mode = measurement_mode
        self.truth0 = np.array([theta0, v0, rho0])
        self.observer0 = np.array([0.0, v0])
        self.truth_bounds = (np.array([0.0, 0.0, 0.0]), np.array([1.0, p.v_max, 1.0]))
        self.observer_bounds = (np.array([0.0, 0.0]), np.array([1.0, p.v_max]))

    def cfl_limit(self):
        return None

    def max_gain(self) -> float:
        return max(self.p.k1, self.p.k2)

    # scalar loop interface: states and measurements are tuples of floats

    def truth_rhs_scalar(self, t: float, y: tuple) -> tuple:
        return ode.model_rhs(t, ode.ModelState(*y), self.p)

    def measure_scalar(self, t: float, y: tuple, prev) -> ode.Measurement:
        s = ode.ModelState(*y)
        if self.measurement_mode == "finite_difference" and prev is not None:
            t_prev, y_prev = prev
            return ode.make_measurement(
                t, s, "finite_difference", (ode.ModelState(*y_prev), t_prev))
        # exact mode, and the first step of a differencing sensor
        return ode.make_measurement(t, s, "exact", p=self.p)

    def observer_rhs_scalar(self, t: float, z: tuple, m: tuple) -> tuple:
        return ode.observer_rhs(
            t, ode.ObserverState(*z), ode.Measurement(*m), self.p)

    # stacked-array interface (same arithmetic; used by the generic loop)

    def truth_rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        return np.array(self.truth_rhs_scalar(t, tuple(y.tolist())))

    def measure(self, t: float, y: np.ndarray, prev) -> np.ndarray:
        if prev is not None:
            t_prev, y_prev = prev
            prev = (t_prev, tuple(y_prev.tolist()))
        return np.array(self.measure_scalar(t, tuple(y.tolist()), prev))

    def observer_rhs(self, t: float, z: np.ndarray, m: np.ndarray) -> np.ndarray:
        return np.array(self.observer_rhs_scalar(
            t, tuple(z.tolist()), tuple(np.asarray(m).tolist())))


class SpatialSystem:
    """Spatial reaction-diffusion model coupled to its spatial observer.

    Initial fields are spatially constant (which satisfies the zero-flux
    boundary exactly); spatial coefficient profiles are precomputed once.
    """

    component_names = COMPONENTS

    def __init__(self, sp: SpatialParameterSet, grid: pde.Grid,
                 theta0: float, v0: float, rho0: float,
                 measurement_mode: str = "exact"):
        if measurement_mode not in MEASUREMENT_MODES:
            raise ValueError(f"unknown measurement mode {measurement_mode!r}")
        p = sp.base
        if not (0.0 <= theta0 <= 1.0 and 0.0 <= v0 <= p.v_max and 0.0 <= rho0 <= 1.0):
            raise ValueError(
                f"initial state ({theta0}, {v0}, {rho0}) outside the state box")
        self.sp = sp
        self.p = p
        self.grid = grid
        self.measurement_mode = measurement_mode
        self.coef = pde.spatial_coefficients(grid, sp)
        shape = grid.shape
        self.truth0 = np.stack([
            np.full(shape, theta0), np.full(shape, v0), np.full(shape, rho0)])
        self.observer0 = np.stack([np.zeros(shape), np.full(shape, v0)])
        self.truth_bounds = (np.array([0.0, 0.0, 0.0]), np.array([1.0, p.v_max, 1.0]))
        self.observer_bounds = (np.array([0.0, 0.0]), np.array([1.0, p.v_max]))

    def cfl_limit(self) -> float:
        return cfl_step_limit(self.grid.h, self.grid.dim, self.sp.diffusivity)

    def max_gain(self) -> float:
        return max(self.sp.K1, self.sp.K2)

    def _state(self, y: np.ndarray, z: np.ndarray | None = None) -> pde.SpatialSystemState:
        if z is None:
            z = self.observer0
        return pde.SpatialSystemState(y[0], y[1], y[2], z[0], z[1])

    def truth_rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        d = pde.spatial_model_rhs(t, self._state(y), self.grid, self.sp, self.coef)
        return np.stack(d)

    def measure(self, t: float, y: np.ndarray, prev) -> np.ndarray:
        theta, v, rho = y[0], y[1], y[2]
        if self.measurement_mode == "finite_difference" and prev is not None:
            t_prev, y_prev = prev
            drho = (rho - y_prev[2]) / (t - t_prev)
        else:
            gbar = (
                self.coef.q3
                * forcing.seasonal(t, self.p.b3, self.p.c3, self.p.d3)
                * (theta - self.p.kappa * rho) * v
            )
            drho = gbar * (1.0 - rho)
        return np.stack([v, rho, drho])

    def observer_rhs(self, t: float, z: np.ndarray, m: np.ndarray) -> np.ndarray:
        # true theta is unobservable; the observer only reads the measured
        # fields (v, rho, drho_dt) and its own state, so slot rho in as a
        # placeholder for theta
        s = pde.SpatialSystemState(m[1], m[0], m[1], z[0], z[1])
        d = pde.spatial_observer_rhs(t, s, self.grid, self.sp, m[2], self.coef)
        return np.stack(d)
