"""Within-host disease model, its observer and condition diagnostics.

State variables: inhibition rate ``theta`` in [0,1], berry volume ``v`` in
[0, v_max], rot proportion ``rho`` in [0,1].  The rot volume is the derived
product ``rho * v`` and is never evolved on its own.  The observer estimates
``(theta, v)`` from the measurable stream ``(v, rho, drho_dt)``; its
correction uses three terms:

* a volume-deficit term, active only when the measured volume is below the
  estimate and the inhibition estimate is strictly interior;
* a rot-rate innovation, the gap between the measured rot-proportion rate
  and the rate the estimate would predict;
* a growth-saturation term that steers the volume estimate towards its
  logistic equilibrium.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import forcing
from .params import ParameterSet

__all__ = [
    "ModelState",
    "ObserverState",
    "Measurement",
    "model_rhs",
    "observer_rhs",
    "volume_gap",
    "rot_innovation",
    "growth_saturation",
    "interior_indicator",
    "make_measurement",
    "check_conditions",
    "OdeConditionReport",
]

#: Denominators smaller than this are treated as singular in diagnostics.
SINGULAR_TOL = 1e-9


class ModelState(NamedTuple):
    theta: float
    v: float
    rho: float

    @property
    def rot_volume(self) -> float:
        """Derived rot volume ``rho * v``; never an independent state."""
        return self.rho * self.v


class ObserverState(NamedTuple):
    theta_hat: float
    v_hat: float


class Measurement(NamedTuple):
    """Observable stream: volume, rot proportion and its time derivative."""

    v: float
    rho: float
    drho_dt: float


def model_rhs(t: float, s: ModelState, p: ParameterSet) -> tuple[float, float, float]:
    """Right-hand side ``(dtheta, dv, drho)`` of the within-host model.

    Raises ``ValueError`` if ``1 + epsilon - theta <= 0`` (cannot happen in
    the state box; guards against numerical drift).
    """
    cap = 1.0 + p.epsilon - s.theta
    if cap <= 0.0:
        raise ValueError(f"volume capacity 1+epsilon-theta={cap} <= 0 at t={t}")
    a = forcing.inhibition_forcing(t, p)
    w = forcing.inhibition_weight(t, p)
    dtheta = a * (1.0 - w * s.theta)
    dv = forcing.growth_forcing(t, s.theta, p) * (
        1.0 - s.v / (forcing.volume_capacity(t, p) * p.v_max * cap)
    )
    drho = forcing.rot_forcing(t, s.theta, s.v, s.rho, p) * (1.0 - s.rho)
    return dtheta, dv, drho


def interior_indicator(x: float) -> float:
    """1 if ``x`` lies strictly inside ``]0, 1[``, else 0."""
    return 1.0 if 0.0 < x < 1.0 else 0.0


def volume_gap(t: float, theta_hat: float, v_hat: float, m: Measurement,
               p: ParameterSet) -> float:
    """Volume-deficit correction ``(1 - v/v_hat)*(1 + epsilon - theta_hat)``.

    Active only when ``v <= v_hat``, ``theta_hat in ]0,1[`` and ``v_hat > 0``;
    the guard branch absorbs every degenerate input.  Always >= 0.
    """
    if m.v <= v_hat and 0.0 < theta_hat < 1.0 and v_hat > 0.0:
        return (1.0 - m.v / v_hat) * (1.0 + p.epsilon - theta_hat)
    return 0.0


def rot_innovation(t: float, theta_hat: float, m: Measurement,
                   p: ParameterSet) -> float:
    """Rot-rate innovation: measured ``drho_dt`` minus the estimate's prediction.

    Zero outside ``theta_hat in ]0,1[`` and whenever the estimate already
    explains the measured rot rate.
    """
    if 0.0 < theta_hat < 1.0:
        predicted = forcing.rot_forcing(t, theta_hat, m.v, m.rho, p) * (1.0 - m.rho)
        return m.drho_dt - predicted
    return 0.0


def growth_saturation(t: float, theta_hat: float, v_hat: float,
                      p: ParameterSet) -> float:
    """Logistic saturation ``1 - v_hat/((1+eps-theta_hat)*eta(t)*v_max)``.

    Zero exactly at the volume equilibrium; raises ``ValueError`` when
    ``1 + epsilon - theta_hat <= 0``.
    """
    cap = 1.0 + p.epsilon - theta_hat
    if cap <= 0.0:
        raise ValueError(f"1+epsilon-theta_hat={cap} <= 0 at t={t}")
    return 1.0 - v_hat / (cap * forcing.volume_capacity(t, p) * p.v_max)


def observer_rhs(t: float, o: ObserverState, m: Measurement,
                 p: ParameterSet) -> tuple[float, float]:
    """Right-hand side ``(dtheta_hat, dv_hat)`` of the observer."""
    a = forcing.inhibition_forcing(t, p)
    w = forcing.inhibition_weight(t, p)
    dtheta = (
        a * (1.0 - w * o.theta_hat)
        + p.k1 * volume_gap(t, o.theta_hat, o.v_hat, m, p)
        + p.k2 * rot_innovation(t, o.theta_hat, m, p)
    )
    dv = forcing.growth_forcing(t, o.theta_hat, p) * growth_saturation(
        t, o.theta_hat, o.v_hat, p
    )
    return dtheta, dv


def make_measurement(t: float, s: ModelState, mode: str = "exact",
                     prev: tuple[ModelState, float] | None = None,
                     p: ParameterSet | None = None) -> Measurement:
    """Synthesise the observable stream from the true state.

    ``exact`` mode reads ``drho_dt`` off the model right-hand side;
    ``finite_difference`` emulates a real differencing sensor with a backward
    quotient, and requires the previous sample ``prev = (state, time)``.
    """
    if mode == "exact":
        if p is None:
            raise ValueError("exact mode requires the parameter set")
        drho = forcing.rot_forcing(t, s.theta, s.v, s.rho, p) * (1.0 - s.rho)
    elif mode == "finite_difference":
        if prev is None:
            raise ValueError("finite_difference mode requires the previous sample")
        s_prev, t_prev = prev
        drho = (s.rho - s_prev.rho) / (t - t_prev)
    else:
        raise ValueError(f"unknown measurement mode {mode!r}")
    return Measurement(s.v, s.rho, drho)


# ---------------------------------------------------------------------------
# convergence-condition diagnostics
# ---------------------------------------------------------------------------

@dataclass
class OdeConditionReport:
    """Empirical infima of the observer convergence conditions on a trajectory.

    ``alpha_inf`` / ``alpha_zero_times``: smallest sampled inhibition forcing
    and the times where it (numerically) vanishes.  ``coercivity_inf`` is the
    smallest sampled ratio ``|rot_forcing(theta) - rot_forcing(theta_hat)| /
    |theta - theta_hat|`` (``None`` when no sample has ``theta != theta_hat``).
    ``stability1_inf`` / ``stability2_inf`` are the infima of the two gain
    stability expressions, with singular samples (``v`` or ``1 - theta*w``
    below tolerance) excluded and counted.  ``dominance_inf`` is the smallest
    margin ``k2*|innovation| - k1*volume_gap``.
    """

    alpha_inf: float
    alpha_zero_times: list[float]
    coercivity_inf: float | None
    coercivity_samples: int
    stability1_inf: float | None
    stability1_excluded: int
    stability2_inf: float | None
    stability2_excluded: int
    dominance_inf: float | None
    notes: list[str] = field(default_factory=list)


def _stability_fraction(t, th, v, p, a, w):
    """Shared fraction of both stability expressions; None when singular."""
    if v < SINGULAR_TOL or abs(1.0 - th * w) < SINGULAR_TOL or a < SINGULAR_TOL:
        return None
    eta = forcing.volume_capacity(t, p)
    num = forcing.growth_forcing(t, th, p) * (
        eta * p.v_max * (1.0 + p.epsilon - th) - v
    )
    return num / (a * eta * v * p.v_max * (1.0 - th * w))


def check_conditions(traj, p: ParameterSet) -> OdeConditionReport:
    """Evaluate the convergence-condition diagnostics along a trajectory.

    ``traj`` is a recorded :class:`~anthobs.stepping.Trajectory` of the
    coupled within-host system.  The report carries per-condition infima over
    the sampled times; non-evaluable samples are flagged, never fatal.
    """
    times = traj.times
    if len(times) == 0:
        raise ValueError("empty trajectory")
    notes: list[str] = []

    alphas = forcing.inhibition_forcing_series(times, p)
    alpha_inf = float(np.min(alphas))
    alpha_zero_times = [float(t) for t, a in zip(times, alphas) if a < SINGULAR_TOL]

    coer_ratios: list[float] = []
    s1_vals: list[float] = []
    s2_vals: list[float] = []
    dom_vals: list[float] = []
    s1_excl = 0
    s2_excl = 0
    for i, t in enumerate(times):
        t = float(t)
        th, v, rho = (float(x) for x in traj.truth[i])
        th_hat, v_hat = (float(x) for x in traj.observer[i])
        m = Measurement(*(float(x) for x in traj.measurements[i]))
        a = float(alphas[i])
        w = forcing.inhibition_weight(t, p)

        if abs(th - th_hat) > 1e-12:
            gap = abs(
                forcing.rot_forcing(t, th, m.v, m.rho, p)
                - forcing.rot_forcing(t, th_hat, m.v, m.rho, p)
            )
            coer_ratios.append(gap / abs(th - th_hat))

        k1d = p.k1 * interior_indicator(th_hat)
        phi2 = rot_innovation(t, th_hat, m, p)
        phi1 = volume_gap(t, th_hat, v_hat, m, p)
        dom_vals.append(p.k2 * abs(phi2) - p.k1 * phi1)

        if k1d == 0.0:
            frac_term = 0.0
        else:
            frac = _stability_fraction(t, th, v, p, a, w)
            if frac is None:
                s1_excl += 1
                s2_excl += 1
                continue
            frac_term = k1d * frac
        s1_vals.append(a * w + k1d + frac_term)
        s2_vals.append(a * w + k1d + p.k2 * phi2 + frac_term)

    if not coer_ratios:
        notes.append("coercivity: no informative samples (theta_hat == theta throughout)")
    return OdeConditionReport(
        alpha_inf=alpha_inf,
        alpha_zero_times=alpha_zero_times,
        coercivity_inf=min(coer_ratios) if coer_ratios else None,
        coercivity_samples=len(coer_ratios),
        stability1_inf=min(s1_vals) if s1_vals else None,
        stability1_excluded=s1_excl,
        stability2_inf=min(s2_vals) if s2_vals else None,
        stability2_excluded=s2_excl,
        dominance_inf=min(dom_vals) if dom_vals else None,
        notes=notes,
    )
