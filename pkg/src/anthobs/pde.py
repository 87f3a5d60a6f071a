"""Finite-difference discretisation of the spatial disease model and observer.

The domain is the unit interval (1-D) or unit square (2-D) on a cell-centred
uniform grid; homogeneous Neumann (zero normal flux) boundaries are realised
by ghost-cell reflection, which is second-order accurate and conserves the
cell sum of the diffusion operator exactly (up to rounding).

Fields are plain numpy arrays of shape ``grid.shape``; reaction terms act
pointwise with spatial coefficient profiles, diffusion acts on the inhibition
rate (true and estimated) only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import forcing
from .params import SpatialParameterSet

__all__ = [
    "Grid",
    "SpatialSystemState",
    "SpatialCoefficients",
    "laplacian_neumann",
    "spatial_coefficients",
    "spatial_model_rhs",
    "spatial_observer_rhs",
    "aggregate",
    "check_conditions_spatial",
    "SpatialConditionReport",
]

SINGULAR_TOL = 1e-9


@dataclass(frozen=True)
class Grid:
    """Cell-centred uniform grid on the unit interval or square."""

    dim: int
    n: int

    def __post_init__(self) -> None:
        if self.dim not in (1, 2):
            raise ValueError(f"grid dim must be 1 or 2, got {self.dim}")
        if self.n < 2:
            raise ValueError(f"grid needs n >= 2 cells per axis, got {self.n}")

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    def centers(self) -> np.ndarray:
        """Cell-centre coordinates, shape ``(*shape, dim)``."""
        axis = (np.arange(self.n) + 0.5) * self.h
        if self.dim == 1:
            return axis[:, None]
        gx, gy = np.meshgrid(axis, axis, indexing="ij")
        return np.stack([gx, gy], axis=-1)


@dataclass
class SpatialSystemState:
    """True fields (theta, v, rho) and observer fields (theta_hat, v_hat)."""

    theta: np.ndarray
    v: np.ndarray
    rho: np.ndarray
    theta_hat: np.ndarray
    v_hat: np.ndarray

    @property
    def rot_volume(self) -> np.ndarray:
        """Derived rot-volume field ``rho * v``."""
        return self.rho * self.v


def laplacian_neumann(f: np.ndarray, grid: Grid, diffusivity: float) -> np.ndarray:
    """``D * laplacian(f)`` with zero-flux (reflecting ghost cell) boundaries.

    Second-order central stencil; the cell sum of the output telescopes to
    zero, so diffusion conserves the field total exactly.
    """
    if f.shape != grid.shape:
        raise ValueError(f"field shape {f.shape} does not match grid {grid.shape}")
    inv_h2 = diffusivity / (grid.h * grid.h)
    if grid.dim == 1:
        out = np.empty_like(f)
        out[1:-1] = f[:-2] - 2.0 * f[1:-1] + f[2:]
        out[0] = f[1] - f[0]
        out[-1] = f[-2] - f[-1]
        return inv_h2 * out
    g = np.pad(f, 1, mode="edge")
    out = (
        g[:-2, 1:-1] + g[2:, 1:-1] + g[1:-1, :-2] + g[1:-1, 2:]
        - 4.0 * f
    )
    return inv_h2 * out


@dataclass(frozen=True)
class SpatialCoefficients:
    """Per-cell spatial profiles, fixed over a run.

    ``q1, q2, q3`` multiply the three forcings, ``u_space`` multiplies the
    control signal.  The ``uniform`` profile sets all four to 1, reducing
    every cell to the within-host dynamics.
    """

    q1: np.ndarray
    q2: np.ndarray
    q3: np.ndarray
    u_space: np.ndarray


def spatial_coefficients(grid: Grid, sp: SpatialParameterSet) -> SpatialCoefficients:
    """Evaluate the spatial coefficient profiles on the grid cells."""
    if sp.spatial_profile == "uniform":
        one = np.ones(grid.shape)
        return SpatialCoefficients(one, one.copy(), one.copy(), one.copy())
    pts = grid.centers()
    m0 = forcing.anisotropy_matrix(sp.base.seed, grid.dim, sp.anisotropy_scale)
    u_space = np.sin(forcing.radial_squared(pts, m0, sp.center(0, grid.dim))) ** 2
    qs = [forcing.spatial_weight(pts, i, sp, grid.dim) for i in (1, 2, 3)]
    return SpatialCoefficients(qs[0], qs[1], qs[2], u_space)


def _growth_profile_field(theta: np.ndarray, p) -> np.ndarray:
    if p.p2_mode == "quadratic":
        return (2.0 - theta) ** 2
    return 2.0 - theta


def _weight_field(t: float, coef: SpatialCoefficients, p) -> np.ndarray:
    u = coef.u_space * forcing.control(t, p)
    den = 1.0 - p.sigma * u
    if np.any(den <= 0.0):
        raise ValueError(f"sigma*u(t,x) >= 1 somewhere at t={t}")
    return 1.0 / den


def spatial_model_rhs(t: float, s: SpatialSystemState, grid: Grid,
                      sp: SpatialParameterSet,
                      coef: SpatialCoefficients | None = None):
    """Field derivatives ``(dtheta, dv, drho)`` of the spatial model.

    The inhibition rate diffuses; volume and rot proportion are pointwise.
    """
    p = sp.base
    if coef is None:
        coef = spatial_coefficients(grid, sp)
    cap = 1.0 + p.epsilon - s.theta
    if np.any(cap <= 0.0):
        raise ValueError(f"volume capacity 1+epsilon-theta <= 0 somewhere at t={t}")
    alpha = _p1_field(t, p) + coef.q1 * forcing.seasonal(t, p.b1, p.c1, p.d1)
    w = _weight_field(t, coef, p)
    dtheta = alpha * (1.0 - w * s.theta) + laplacian_neumann(s.theta, grid, sp.diffusivity)
    beta = coef.q2 * forcing.seasonal(t, p.b2, p.c2, p.d2) * _growth_profile_field(s.theta, p)
    dv = beta * (1.0 - s.v / (forcing.volume_capacity(t, p) * p.v_max * cap))
    gbar = coef.q3 * forcing.seasonal(t, p.b3, p.c3, p.d3) * (s.theta - p.kappa * s.rho) * s.v
    drho = gbar * (1.0 - s.rho)
    return dtheta, dv, drho


def _p1_field(t: float, p) -> float:
    return p.p1_const if p.p1_mode == "constant" else 0.0


def phi1_field(theta_hat: np.ndarray, v_hat: np.ndarray, v_meas: np.ndarray,
               epsilon: float) -> np.ndarray:
    """Vectorised volume-deficit correction (same branches as the scalar form)."""
    safe = np.where(v_hat > 0.0, v_hat, 1.0)
    base = (1.0 - v_meas / safe) * (1.0 + epsilon - theta_hat)
    cond = (v_meas <= v_hat) & (theta_hat > 0.0) & (theta_hat < 1.0) & (v_hat > 0.0)
    return np.where(cond, base, 0.0)


def phi2_field(t: float, theta_hat: np.ndarray, v_meas: np.ndarray,
               rho_meas: np.ndarray, drho_meas: np.ndarray,
               q3: np.ndarray, p) -> np.ndarray:
    """Vectorised rot-rate innovation (same branches as the scalar form)."""
    gbar = q3 * forcing.seasonal(t, p.b3, p.c3, p.d3) * (theta_hat - p.kappa * rho_meas) * v_meas
    inner = drho_meas - gbar * (1.0 - rho_meas)
    cond = (theta_hat > 0.0) & (theta_hat < 1.0)
    return np.where(cond, inner, 0.0)


def phi3_field(t: float, theta_hat: np.ndarray, v_hat: np.ndarray, p) -> np.ndarray:
    """Vectorised growth-saturation term."""
    cap = 1.0 + p.epsilon - theta_hat
    if np.any(cap <= 0.0):
        raise ValueError(f"1+epsilon-theta_hat <= 0 somewhere at t={t}")
    return 1.0 - v_hat / (cap * forcing.volume_capacity(t, p) * p.v_max)


def spatial_observer_rhs(t: float, s: SpatialSystemState, grid: Grid,
                         sp: SpatialParameterSet,
                         drho_meas: np.ndarray | None = None,
                         coef: SpatialCoefficients | None = None):
    """Field derivatives ``(dtheta_hat, dv_hat)`` of the spatial observer.

    The estimate diffuses like the true inhibition rate; corrections act
    pointwise with the (spatially constant) gain fields ``K1, K2``.  The
    measured volume and rot fields are read from the true state in ``s``;
    ``drho_meas`` defaults to the exact rot rate synthesised from ``s``.
    """
    p = sp.base
    if coef is None:
        coef = spatial_coefficients(grid, sp)
    if drho_meas is None:
        gbar = coef.q3 * forcing.seasonal(t, p.b3, p.c3, p.d3) * (s.theta - p.kappa * s.rho) * s.v
        drho_meas = gbar * (1.0 - s.rho)
    alpha = _p1_field(t, p) + coef.q1 * forcing.seasonal(t, p.b1, p.c1, p.d1)
    w = _weight_field(t, coef, p)
    dtheta = (
        alpha * (1.0 - w * s.theta_hat)
        + sp.K1 * phi1_field(s.theta_hat, s.v_hat, s.v, p.epsilon)
        + sp.K2 * phi2_field(t, s.theta_hat, s.v, s.rho, drho_meas, coef.q3, p)
        + laplacian_neumann(s.theta_hat, grid, sp.diffusivity)
    )
    beta = coef.q2 * forcing.seasonal(t, p.b2, p.c2, p.d2) * _growth_profile_field(s.theta_hat, p)
    dv = beta * phi3_field(t, s.theta_hat, s.v_hat, p)
    return dtheta, dv


def aggregate(f: np.ndarray) -> tuple[float, float, float]:
    """Spatial ``(min, mean, max)`` of a field."""
    if f.size == 0:
        raise ValueError("empty field")
    return float(np.min(f)), float(np.mean(f)), float(np.max(f))


# ---------------------------------------------------------------------------
# convergence-condition diagnostics (spatial)
# ---------------------------------------------------------------------------

@dataclass
class SpatialConditionReport:
    """Space-time infima of the spatial observer convergence conditions.

    Analogue of the within-host report, with infima taken over every (time,
    cell) sample.  The first stability expression needs the sensitivity of
    the true volume to the initial inhibition rate; it is estimated from a
    pair of auxiliary truth runs and is ``None`` (with a note) when those are
    not supplied while ``K1 > 0``.
    """

    alpha_inf: float
    coercivity_inf: float | None
    coercivity_samples: int
    stability1_inf: float | None
    stability1_excluded: int
    stability2_inf: float | None
    stability2_excluded: int
    dominance_inf: float | None
    notes: list[str]


def check_conditions_spatial(traj, grid: Grid, sp: SpatialParameterSet,
                             sensitivity: np.ndarray | None = None) -> SpatialConditionReport:
    """Evaluate the spatial convergence diagnostics along a recorded run.

    ``sensitivity``, when given, is the per-record field ``d v / d theta(0)``
    estimated by central difference of two auxiliary truth runs whose initial
    inhibition rate was perturbed by ``+-1e-4``; shape ``(n_records, *grid)``.
    """
    p = sp.base
    coef = spatial_coefficients(grid, sp)
    times = traj.times
    if len(times) == 0:
        raise ValueError("empty trajectory")
    notes: list[str] = []

    alpha_inf = np.inf
    coer_inf = np.inf
    coer_n = 0
    s1_vals: list[float] = []
    s2_vals: list[float] = []
    dom_inf = np.inf
    s1_excl = 0
    s2_excl = 0
    need_sens = sp.K1 > 0.0
    if need_sens and sensitivity is None:
        notes.append(
            "stability expressions skipped: K1 > 0 needs the paired-run"
            " volume sensitivity estimate")

    for i, t in enumerate(times):
        t = float(t)
        theta, v, rho = traj.truth[i]
        theta_hat, v_hat = traj.observer[i]
        drho = traj.measurements[i][2]
        alpha = _p1_field(t, p) + coef.q1 * forcing.seasonal(t, p.b1, p.c1, p.d1)
        w = _weight_field(t, coef, p)
        alpha_inf = min(alpha_inf, float(alpha.min()))

        err = theta - theta_hat
        informative = np.abs(err) > 1e-12
        if np.any(informative):
            g_true = coef.q3 * forcing.seasonal(t, p.b3, p.c3, p.d3) * (theta - p.kappa * rho) * v
            g_hat = coef.q3 * forcing.seasonal(t, p.b3, p.c3, p.d3) * (theta_hat - p.kappa * rho) * v
            ratios = np.abs(g_true - g_hat)[informative] / np.abs(err)[informative]
            coer_inf = min(coer_inf, float(ratios.min()))
            coer_n += int(np.count_nonzero(informative))

        phi1 = phi1_field(theta_hat, v_hat, v, p.epsilon)
        phi2 = phi2_field(t, theta_hat, v, rho, drho, coef.q3, p)
        dom_inf = min(dom_inf, float((sp.K2 * np.abs(phi2) - sp.K1 * phi1).min()))

        delta = ((theta_hat > 0.0) & (theta_hat < 1.0)).astype(float)
        aw = alpha * w
        if sp.K1 == 0.0:
            s1_vals.append(float(aw.min()))
            s2_vals.append(float((aw + sp.K2 * phi2).min()))
        elif sensitivity is not None:
            ok = v >= SINGULAR_TOL
            s1_excl += int(np.count_nonzero(~ok))
            s2_excl += int(np.count_nonzero(~ok))
            if np.any(ok):
                dv_dtheta = sensitivity[i]
                ratio = (v + (1.0 + p.epsilon - theta) * dv_dtheta) / np.where(ok, v, 1.0)
                expr1 = ratio * sp.K1 * delta + aw
                expr2 = expr1 + sp.K2 * phi2
                s1_vals.append(float(expr1[ok].min()))
                s2_vals.append(float(expr2[ok].min()))

    return SpatialConditionReport(
        alpha_inf=float(alpha_inf),
        coercivity_inf=None if coer_n == 0 else float(coer_inf),
        coercivity_samples=coer_n,
        stability1_inf=min(s1_vals) if s1_vals else None,
        stability1_excluded=s1_excl,
        stability2_inf=min(s2_vals) if s2_vals else None,
        stability2_excluded=s2_excl,
        dominance_inf=float(dom_inf) if len(times) else None,
        notes=notes,
    )
