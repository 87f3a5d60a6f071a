"""Fixed-step explicit time integration with recording and box clamping.

``simulate`` advances a coupled truth+observer system in lockstep: at each
step the measurement is synthesised from the current true state, the truth
is advanced, then the observer is advanced using that measurement (held
constant over the step).  The observer therefore only ever sees truth data
from the current or earlier steps.

After every step, states are clamped to their invariant boxes and the
pre-clamp overshoot is recorded; any overshoot beyond ``OVERSHOOT_LIMIT``
aborts the run, since the continuous dynamics cannot leave the box and a
larger excursion signals an unstable step size.

Systems with a handful of scalar components (the within-host model) run on a
plain-float loop; field systems run the same algorithm on stacked numpy
arrays.  Both paths perform identical IEEE arithmetic and are cross-checked
in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "step_euler",
    "step_rk4",
    "simulate",
    "Trajectory",
    "NonFiniteError",
    "OvershootError",
    "OVERSHOOT_LIMIT",
    "cfl_step_limit",
]

#: Largest tolerated pre-clamp excursion outside the state box.
OVERSHOOT_LIMIT = 1e-6

SCHEMES = ("euler", "rk4")


class NonFiniteError(RuntimeError):
    """A derivative or state component became NaN or infinite."""


class OvershootError(RuntimeError):
    """A state component left its invariant box by more than the tolerance."""


def _require_finite(d, t: float, what: str) -> None:
    if isinstance(d, float):
        if not math.isfinite(d):
            raise NonFiniteError(f"non-finite {what} ({d}) at t={t}")
        return
    arr = np.asarray(d)
    if math.isfinite(float(arr.sum())):
        return
    if not np.all(np.isfinite(arr)):
        idx = tuple(int(i) for i in np.argwhere(~np.isfinite(arr))[0])
        raise NonFiniteError(f"non-finite {what} at t={t}, component {idx}")


def step_euler(rhs, t: float, state, dt: float):
    """One explicit Euler step: ``state + dt * rhs(t, state)``."""
    d = rhs(t, state)
    _require_finite(d, t, "derivative")
    return state + dt * d


def step_rk4(rhs, t: float, state, dt: float):
    """One classical 4-stage Runge-Kutta step."""
    k1 = rhs(t, state)
    _require_finite(k1, t, "derivative (stage 1)")
    k2 = rhs(t + 0.5 * dt, state + 0.5 * dt * k1)
    _require_finite(k2, t, "derivative (stage 2)")
    k3 = rhs(t + 0.5 * dt, state + 0.5 * dt * k2)
    _require_finite(k3, t, "derivative (stage 3)")
    k4 = rhs(t + dt, state + dt * k3)
    _require_finite(k4, t, "derivative (stage 4)")
    return state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


_STEPPERS = {"euler": step_euler, "rk4": step_rk4}


def cfl_step_limit(h: float, dim: int, diffusivity: float, safety: float = 0.9) -> float:
    """Largest stable explicit step for diffusion: ``safety*h^2/(2*dim*D)``."""
    if diffusivity <= 0.0:
        return math.inf
    return safety * h * h / (2.0 * dim * diffusivity)


@dataclass
class Trajectory:
    """Recorded samples of a coupled truth+observer run.

    ``truth`` has shape ``(n_records, 3[, *grid])`` holding
    ``(theta, v, rho)``; ``observer`` has shape ``(n_records, 2[, *grid])``
    holding ``(theta_hat, v_hat)`` (``None`` for truth-only runs);
    ``measurements`` holds ``(v, rho, drho_dt)`` as consumed by the observer
    at each recorded time.  ``overshoot`` maps component names to the largest
    pre-clamp excursion outside the box seen anywhere in the run.
    """

    times: np.ndarray
    truth: np.ndarray
    observer: np.ndarray | None
    measurements: np.ndarray
    overshoot: dict[str, float]
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.times)


def _validate_run(system, t0, t1, dt, scheme, record_stride) -> int:
    if t1 < t0:
        raise ValueError(f"t1={t1} earlier than t0={t0}")
    if dt <= 0.0:
        raise ValueError(f"dt={dt} must be > 0")
    if scheme not in _STEPPERS:
        raise ValueError(f"unknown scheme {scheme!r}; pick one of {SCHEMES}")
    if record_stride < 1:
        raise ValueError("record_stride must be >= 1")
    cfl = system.cfl_limit()
    if cfl is not None and dt > cfl:
        raise ValueError(
            f"dt={dt} violates the diffusion stability bound {cfl:.3e}; refuse to run")
    cap = 1.0 / (10.0 * dt)
    if system.max_gain() > cap:
        raise ValueError(
            f"gain {system.max_gain()} exceeds the stability cap 1/(10*dt)={cap}")
    return int(math.floor((t1 - t0) / dt + 1e-9))


def simulate(system, t0: float, t1: float, dt: float, scheme: str = "euler",
             record_stride: int = 10, clamp: bool = True,
             truth_only: bool = False) -> Trajectory:
    """Advance truth and observer from ``t0`` to ``t1`` with fixed step ``dt``.

    Records every ``record_stride``-th step (plus the initial sample) and
    returns a :class:`Trajectory`.  ``clamp=False`` disables box clamping but
    still tracks (and enforces the limit on) pre-clamp overshoot.

    Raises ``ValueError`` on an unstable diffusion step (CFL check) or on a
    gain above the ``1/(10*dt)`` cap, :class:`NonFiniteError` on a non-finite
    derivative or state, :class:`OvershootError` when the box is left by more
    than ``OVERSHOOT_LIMIT``.
    """
    n_steps = _validate_run(system, t0, t1, dt, scheme, record_stride)
    if getattr(system, "scalar", False):
        return _simulate_scalar(system, t0, dt, scheme, n_steps, record_stride,
                                clamp, truth_only)
    return _simulate_generic(system, t0, dt, scheme, n_steps, record_stride,
                             clamp, truth_only)


def _finish(system, rec, max_over, meta, truth_only) -> Trajectory:
    times, truth, obs, meas = rec
    overshoot = {name: float(v)
                 for name, v in zip(system.component_names, max_over)}
    return Trajectory(
        times=np.array(times),
        truth=np.array(truth),
        observer=None if truth_only else np.array(obs),
        measurements=np.array(meas),
        overshoot=overshoot,
        meta=meta,
    )


def _simulate_generic(system, t0, dt, scheme, n_steps, record_stride,
                      clamp, truth_only) -> Trajectory:
    stepper = _STEPPERS[scheme]
    names = system.component_names
    truth = np.array(system.truth0, dtype=float, copy=True)
    obs = None if truth_only else np.array(system.observer0, dtype=float, copy=True)
    t_lo, t_hi = system.truth_bounds
    o_lo, o_hi = system.observer_bounds
    n_truth = truth.shape[0]

    rec = ([], [], [], [])
    max_over = np.zeros(len(names))
    prev: tuple[float, np.ndarray] | None = None
    for k in range(n_steps + 1):
        t = t0 + k * dt
        m = system.measure(t, truth, prev)
        if k % record_stride == 0:
            rec[0].append(t)
            rec[1].append(truth.copy())
            if obs is not None:
                rec[2].append(obs.copy())
            rec[3].append(np.array(m, dtype=float, copy=True))
        if k == n_steps:
            break

        new_truth = stepper(system.truth_rhs, t, truth, dt)
        if obs is not None:
            new_obs = stepper(lambda tt, z: system.observer_rhs(tt, z, m), t, obs, dt)
        prev = (t, truth)

        new_truth, over_t = _clamp_array(new_truth, t_lo, t_hi, clamp)
        np.maximum(max_over[:n_truth], over_t, out=max_over[:n_truth])
        truth = new_truth
        worst = float(over_t.max())
        if obs is not None:
            new_obs, over_o = _clamp_array(new_obs, o_lo, o_hi, clamp)
            np.maximum(max_over[n_truth:], over_o, out=max_over[n_truth:])
            obs = new_obs
            worst = max(worst, float(over_o.max()))
        if worst > OVERSHOOT_LIMIT:
            idx = int(np.argmax(max_over))
            raise OvershootError(
                f"component {names[idx]!r} overshot its box by "
                f"{max_over[idx]:.3e} (> {OVERSHOOT_LIMIT}) at t={t + dt}")

    meta = {"scheme": scheme, "dt": dt, "t0": t0, "t1": t0 + n_steps * dt,
            "record_stride": record_stride, "clamp": clamp}
    return _finish(system, rec, max_over, meta, truth_only)


def _clamp_array(state: np.ndarray, lo: np.ndarray, hi: np.ndarray, apply: bool):
    """Clamp componentwise; return (state, per-component overshoot)."""
    if state.ndim == 1:
        over = np.maximum(0.0, np.maximum(lo - state, state - hi))
        if apply and over.max() > 0.0:
            state = np.clip(state, lo, hi)
        return state, over
    axes = tuple(range(1, state.ndim))
    over = np.maximum(
        0.0,
        np.maximum(lo - state.min(axis=axes), state.max(axis=axes) - hi),
    )
    if apply and over.max() > 0.0:
        shape = (-1,) + (1,) * (state.ndim - 1)
        state = np.clip(state, lo.reshape(shape), hi.reshape(shape))
    return state, over


# ---------------------------------------------------------------------------
# scalar fast path (within-host system: 3 + 2 float components)
# ---------------------------------------------------------------------------

def _step_scalar(rhs, t, state, dt, scheme, what):
    if scheme == "euler":
        d = rhs(t, state)
        for x in d:
            if not math.isfinite(x):
                raise NonFiniteError(
                    f"non-finite derivative at t={t}, component {d.index(x)} ({what})")
        return tuple(x + dt * dx for x, dx in zip(state, d))
    k1 = rhs(t, state)
    k2 = rhs(t + 0.5 * dt, tuple(x + 0.5 * dt * dx for x, dx in zip(state, k1)))
    k3 = rhs(t + 0.5 * dt, tuple(x + 0.5 * dt * dx for x, dx in zip(state, k2)))
    k4 = rhs(t + dt, tuple(x + dt * dx for x, dx in zip(state, k3)))
    for stage in (k1, k2, k3, k4):
        for x in stage:
            if not math.isfinite(x):
                raise NonFiniteError(f"non-finite derivative at t={t} ({what})")
    return tuple(
        x + (dt / 6.0) * (a + 2.0 * b + 2.0 * c + d)
        for x, a, b, c, d in zip(state, k1, k2, k3, k4)
    )


def _clamp_scalar(state, lo, hi, apply):
    over = tuple(max(0.0, l - x, x - h) for x, l, h in zip(state, lo, hi))
    if apply and max(over) > 0.0:
        state = tuple(min(max(x, l), h) for x, l, h in zip(state, lo, hi))
    return state, over


def _simulate_scalar(system, t0, dt, scheme, n_steps, record_stride,
                     clamp, truth_only) -> Trajectory:
    names = system.component_names
    truth = tuple(float(x) for x in system.truth0)
    obs = None if truth_only else tuple(float(x) for x in system.observer0)
    t_lo, t_hi = (tuple(b) for b in system.truth_bounds)
    o_lo, o_hi = (tuple(b) for b in system.observer_bounds)
    n_truth = len(truth)

    rec = ([], [], [], [])
    max_over = [0.0] * len(names)
    truth_rhs = system.truth_rhs_scalar
    obs_rhs = system.observer_rhs_scalar
    measure = system.measure_scalar

    prev: tuple[float, tuple] | None = None
    for k in range(n_steps + 1):
        t = t0 + k * dt
        m = measure(t, truth, prev)
        if k % record_stride == 0:
            rec[0].append(t)
            rec[1].append(truth)
            if obs is not None:
                rec[2].append(obs)
            rec[3].append(m)
        if k == n_steps:
            break

        new_truth = _step_scalar(truth_rhs, t, truth, dt, scheme, "truth")
        if obs is not None:
            new_obs = _step_scalar(
                lambda tt, z: obs_rhs(tt, z, m), t, obs, dt, scheme, "observer")
        prev = (t, truth)

        truth, over_t = _clamp_scalar(new_truth, t_lo, t_hi, clamp)
        worst = 0.0
        for i, ov in enumerate(over_t):
            if ov > max_over[i]:
                max_over[i] = ov
            if ov > worst:
                worst = ov
        if obs is not None:
            obs, over_o = _clamp_scalar(new_obs, o_lo, o_hi, clamp)
            for i, ov in enumerate(over_o):
                if ov > max_over[n_truth + i]:
                    max_over[n_truth + i] = ov
                if ov > worst:
                    worst = ov
        if worst > OVERSHOOT_LIMIT:
            idx = max(range(len(max_over)), key=lambda i: max_over[i])
            raise OvershootError(
                f"component {names[idx]!r} overshot its box by "
                f"{max_over[idx]:.3e} (> {OVERSHOOT_LIMIT}) at t={t + dt}")

    meta = {"scheme": scheme, "dt": dt, "t0": t0, "t1": t0 + n_steps * dt,
            "record_stride": record_stride, "clamp": clamp}
    return _finish(system, rec, max_over, meta, truth_only)
