"""Time- and space-dependent forcing functions, control signal and profiles.

Scalar evaluators (``control``, ``inhibition_forcing``, ...) are plain
``math``-based functions: they sit on the hot path of the fixed-step
integrator, where one evaluation per step matters.  ``*_series`` variants
evaluate the same formulas on numpy arrays for quadrature and diagnostics;
they are tested to agree with the scalar forms to machine precision.

Every function here is pure: no global state, safe for concurrent use.
"""

from __future__ import annotations

import math

import numpy as np

from .params import ParameterSet, SpatialParameterSet

__all__ = [
    "control",
    "inhibition_weight",
    "inhibition_forcing",
    "baseline_forcing",
    "growth_profile",
    "growth_forcing",
    "rot_forcing",
    "volume_capacity",
    "seasonal",
    "control_series",
    "inhibition_weight_series",
    "inhibition_forcing_series",
    "anisotropy_matrix",
    "radial_squared",
    "spatial_weight",
    "control_spatial",
]


# ---------------------------------------------------------------------------
# scalar time functions
# ---------------------------------------------------------------------------

def control(t: float, p: ParameterSet) -> float:
    """Fungicide control signal ``u(t) = sin^2(w1*(t-ph1)^2) * exp(-w2*(t-ph2)^2)``.

    Always in ``[0, 1]``: a burst of treatments around ``phase1`` damped by a
    Gaussian window centred at ``phase2``.
    """
    s = math.sin(p.omega1 * (t - p.phase1) ** 2)
    return s * s * math.exp(-p.omega2 * (t - p.phase2) ** 2)


def inhibition_weight(t: float, p: ParameterSet) -> float:
    """Control weight ``w(t) = 1/(1 - sigma*u(t))`` in the inhibition dynamics.

    Under treatment the inhibition rate relaxes towards ``1/w <= 1`` instead
    of 1.  Raises ``ValueError`` when ``sigma*u(t) >= 1`` (singular
    configuration; impossible for ``sigma < 1`` since ``u <= 1``).
    """
    den = 1.0 - p.sigma * control(t, p)
    if den <= 0.0:
        raise ValueError(f"sigma*u(t) >= 1 at t={t}: control weight is singular")
    return 1.0 / den


def seasonal(t: float, b: float, c: float, d: float) -> float:
    """Seasonal shape ``b*(1 - cos(c*t))*(t - d)^2`` common to all forcings."""
    return b * (1.0 - math.cos(c * t)) * (t - d) ** 2


def baseline_forcing(t: float, p: ParameterSet) -> float:
    """Baseline term ``p1(t)`` of the inhibition forcing (zero by default)."""
    if p.p1_mode == "constant":
        return p.p1_const
    return 0.0


def inhibition_forcing(t: float, p: ParameterSet) -> float:
    """Inhibition-rate forcing ``p1(t) + b1*(1 - cos(c1*t))*(t - d1)^2``."""
    return baseline_forcing(t, p) + seasonal(t, p.b1, p.c1, p.d1)


def growth_profile(theta: float, p: ParameterSet) -> float:
    """Profile ``p2`` shaping how inhibition suppresses berry growth."""
    if p.p2_mode == "quadratic":
        return (2.0 - theta) ** 2
    return 2.0 - theta


def growth_forcing(t: float, theta: float, p: ParameterSet) -> float:
    """Berry-growth forcing ``b2*(1 - cos(c2*t))*(t - d2)^2 * p2(theta)``.

    Nonincreasing in ``theta`` for both profiles on ``[0, 1]``.
    """
    return seasonal(t, p.b2, p.c2, p.d2) * growth_profile(theta, p)


def rot_forcing(t: float, theta: float, v: float, rho: float, p: ParameterSet) -> float:
    """Rot-proportion forcing ``b3*(1 - cos(c3*t))*(t - d3)^2*(theta - kappa*rho)*v``.

    Vanishes exactly when ``v = 0`` (no berry, no rot) and when
    ``theta = kappa*rho``; increasing in ``theta``.
    """
    return seasonal(t, p.b3, p.c3, p.d3) * (theta - p.kappa * rho) * v


def volume_capacity(t: float, p: ParameterSet) -> float:
    """Environmental capacity factor ``eta(t)`` limiting the maximal volume.

    ``constant`` mode is the reference choice ``1/(1 + epsilon)``; the
    ``seasonal`` mode oscillates inside its admissible band
    ``[eta_star, 1/(1 + epsilon)]``.
    """
    hi = 1.0 / (1.0 + p.epsilon)
    if p.eta_mode == "seasonal":
        return p.eta_star + (hi - p.eta_star) * 0.5 * (1.0 + math.cos(2.0 * math.pi * t))
    return hi


# ---------------------------------------------------------------------------
# vectorised twins (quadrature / diagnostics)
# ---------------------------------------------------------------------------

def control_series(t: np.ndarray, p: ParameterSet) -> np.ndarray:
    """``control`` evaluated elementwise on an array of times."""
    t = np.asarray(t, dtype=float)
    s = np.sin(p.omega1 * (t - p.phase1) ** 2)
    return s * s * np.exp(-p.omega2 * (t - p.phase2) ** 2)


def inhibition_weight_series(t: np.ndarray, p: ParameterSet) -> np.ndarray:
    """``inhibition_weight`` evaluated elementwise on an array of times."""
    den = 1.0 - p.sigma * control_series(t, p)
    if np.any(den <= 0.0):
        raise ValueError("sigma*u(t) >= 1 somewhere: control weight is singular")
    return 1.0 / den


def inhibition_forcing_series(t: np.ndarray, p: ParameterSet) -> np.ndarray:
    """``inhibition_forcing`` evaluated elementwise on an array of times."""
    t = np.asarray(t, dtype=float)
    base = p.p1_const if p.p1_mode == "constant" else 0.0
    return base + p.b1 * (1.0 - np.cos(p.c1 * t)) * (t - p.d1) ** 2


# ---------------------------------------------------------------------------
# spatial factors
# ---------------------------------------------------------------------------

def anisotropy_matrix(seed: int, dim: int, scale: float) -> np.ndarray:
    """Random ``dim x dim`` matrix, entries i.i.d. uniform on ``[0, scale)``.

    Pure function of ``(seed, dim, scale)``: the same arguments always
    reproduce the same matrix.
    """
    rng = np.random.default_rng(seed)
    return scale * rng.random((dim, dim))


def radial_squared(points: np.ndarray, matrix: np.ndarray, center) -> np.ndarray:
    """``|M (x - c)|^2`` for points of shape ``(..., dim)``."""
    d = np.asarray(points, dtype=float) - np.asarray(center, dtype=float)
    md = d @ matrix.T
    return np.sum(md * md, axis=-1)


def spatial_weight(points: np.ndarray, i: int, sp: SpatialParameterSet, dim: int) -> np.ndarray:
    """Radial profile ``q_i(x) = (sin^2(|M_i (x - x_i)|^2) + 1)/2`` in ``[1/2, 1]``.

    ``M_i = anisotropy_matrix(seed + i, dim, anisotropy_scale)``.
    """
    if not 1 <= i <= 3:
        raise ValueError(f"profile index {i} not in 1..3")
    m = anisotropy_matrix(sp.base.seed + i, dim, sp.anisotropy_scale)
    r2 = radial_squared(points, m, sp.center(i, dim))
    return (np.sin(r2) ** 2 + 1.0) / 2.0


def control_spatial(t: float, points: np.ndarray, sp: SpatialParameterSet, dim: int) -> np.ndarray:
    """Spatial control ``u(t,x) = sin^2(|M (x - x0)|^2) * u(t)`` in ``[0, 1]``."""
    m = anisotropy_matrix(sp.base.seed, dim, sp.anisotropy_scale)
    r2 = radial_squared(points, m, sp.center(0, dim))
    return np.sin(r2) ** 2 * control(t, sp.base)
