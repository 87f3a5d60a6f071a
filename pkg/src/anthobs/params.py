"""Parameter containers and hypothesis validation.

All model constants live in :class:`ParameterSet` (within-host model) and
:class:`SpatialParameterSet` (reaction-diffusion model).  Defaults reproduce
the reference simulation study: the cultivation year is normalised to
``t in [0, 1]`` and every rate constant is interpreted on that axis.

Parameter sets are frozen dataclasses: validate once, then share freely
between threads / worker processes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

__all__ = [
    "ParameterSet",
    "SpatialParameterSet",
    "Violation",
    "gain_cap",
    "validate",
    "validate_spatial",
]

#: Selectors for the baseline inhibition forcing p1(t).
P1_MODES = ("zero", "constant")
#: Selectors for the growth profile p2: "linear" -> 2 - x, "quadratic" -> (2 - x)^2.
P2_MODES = ("linear", "quadratic")
#: Selectors for the volume-capacity function eta(t).
ETA_MODES = ("constant", "seasonal")


@dataclass(frozen=True)
class ParameterSet:
    """Constants of the within-host model, its observer and the control signal.

    ``b2``, ``b3`` and ``eta_star`` may be left as ``None``; they are then
    resolved from the reference formulas ``b2 = v_max*ln(1e5*v_max*(1 -
    epsilon*eta_star))/2``, ``b3 = v_max*ln(1e5*v_max)`` and ``eta_star =
    1/(1 + epsilon)`` at construction time.
    """

    # seasonal forcing amplitudes / pulsations / peak times
    b1: float = 5.0 * math.log(10.0)
    b2: float | None = None
    b3: float | None = None
    c1: float = 10.0 * math.pi
    c2: float = 10.0 * math.pi
    c3: float = 10.0 * math.pi
    d1: float = 0.75
    d2: float = 0.75
    d3: float = 0.75
    # control signal u(t) = sin^2(omega1*(t-phase1)^2) * exp(-omega2*(t-phase2)^2)
    omega1: float = 25.0 * math.pi
    omega2: float = 10.0
    phase1: float = 0.6
    phase2: float = 0.4
    # epidermis-penetration bound: inhibition cannot drop below 1 - sigma
    sigma: float = 0.9
    # volume regulariser: berries keep a minimal size ~ epsilon*v_max*min(eta)
    epsilon: float = 1e-4
    eta_star: float | None = None
    eta_mode: str = "constant"
    v_max: float = 1.0
    # rot feedback constant in the rot forcing (theta - kappa*rho)
    kappa: float = 1.0
    # observer correction gains
    k1: float = 0.0
    k2: float = 0.0
    # baseline forcing p1 and growth profile p2 selectors
    p1_mode: str = "zero"
    p1_const: float = 0.0
    p2_mode: str = "linear"
    # integration step and PRNG seed (anisotropy matrices)
    dt: float = 1e-4
    seed: int = 42

    def __post_init__(self) -> None:
        if self.eta_star is None:
            object.__setattr__(self, "eta_star", 1.0 / (1.0 + self.epsilon))
        if self.b2 is None:
            b2 = self.v_max * math.log(
                1e5 * self.v_max * (1.0 - self.epsilon * self.eta_star)
            ) / 2.0
            object.__setattr__(self, "b2", b2)
        if self.b3 is None:
            object.__setattr__(self, "b3", self.v_max * math.log(1e5 * self.v_max))


@dataclass(frozen=True)
class SpatialParameterSet:
    """Constants specific to the reaction-diffusion model.

    The diffusion tensor is isotropic, ``A = diffusivity * I``.  Anisotropy
    matrices for the radial space profiles are drawn uniformly from
    ``[0, anisotropy_scale)`` using ``base.seed`` (control matrix) and
    ``base.seed + i`` (profile matrix i).  ``spatial_profile = "uniform"``
    replaces every spatial factor by 1, which reduces each grid cell to the
    within-host model.
    """

    base: ParameterSet = field(default_factory=ParameterSet)
    diffusivity: float = 1e-2
    anisotropy_scale: float = 5.0
    spatial_profile: str = "radial"
    # centres of the radial control / profile factors (truncated to grid dim)
    x0: tuple[float, ...] = (0.0, 0.0, 0.0)
    x1: tuple[float, ...] = (0.0, 0.0, 0.0)
    x2: tuple[float, ...] = (0.0, 0.0, 0.0)
    x3: tuple[float, ...] = (0.0, 0.0, 0.0)
    # spatially constant observer gain fields; default to the base gains
    K1: float | None = None
    K2: float | None = None

    def __post_init__(self) -> None:
        if self.K1 is None:
            object.__setattr__(self, "K1", self.base.k1)
        if self.K2 is None:
            object.__setattr__(self, "K2", self.base.k2)

    def center(self, i: int, dim: int) -> tuple[float, ...]:
        """Centre of radial factor ``i`` (0 = control) truncated to ``dim``."""
        pt = (self.x0, self.x1, self.x2, self.x3)[i]
        return tuple(pt[:dim]) + (0.0,) * max(0, dim - len(pt))


@dataclass(frozen=True)
class Violation:
    """One violated hypothesis, with the originating parameter and severity."""

    key: str
    message: str
    hard: bool = False


def gain_cap(dt: float) -> float:
    """Largest admissible observer gain for step ``dt``: ``1 / (10 * dt)``."""
    return 1.0 / (10.0 * dt)


def _check_selector(out: list[Violation], key: str, value: str, allowed) -> None:
    if value not in allowed:
        out.append(Violation(key, f"{key}={value!r} not one of {sorted(allowed)}", hard=True))


def validate(p: ParameterSet) -> list[Violation]:
    """Check every configuration-level model hypothesis on ``p``.

    Returns a (possibly empty) list of :class:`Violation`; never raises.
    Violations flagged ``hard`` make simulation meaningless (singular control
    weight, unstable gains, non-positive step) and are rejected by the
    configuration loader; soft ones note broken model assumptions.
    """
    out: list[Violation] = []
    if not 0.0 < p.sigma < 1.0:
        out.append(Violation(
            "sigma",
            f"sigma={p.sigma} outside ]0,1[: the control weight 1/(1-sigma*u)"
            " is singular at full control effort",
            hard=True,
        ))
    if p.dt <= 0.0 or not math.isfinite(p.dt):
        out.append(Violation("dt", f"dt={p.dt} must be a positive finite step", hard=True))
    if p.epsilon < 0.0:
        out.append(Violation("epsilon", f"epsilon={p.epsilon} must be >= 0"))
    if not 0.0 < p.eta_star < 1.0:
        out.append(Violation(
            "eta_star",
            f"eta_star={p.eta_star} must lie in ]0,1[ (lower bound of eta)"))
    for key in ("k1", "k2"):
        k = getattr(p, key)
        if k < 0.0 or not math.isfinite(k):
            out.append(Violation(key, f"{key}={k} must be finite and >= 0", hard=True))
    if p.dt > 0 and max(p.k1, p.k2) > gain_cap(p.dt):
        out.append(Violation(
            "k1" if p.k1 >= p.k2 else "k2",
            f"gain cap exceeded: max(k1,k2)={max(p.k1, p.k2)} >"
            f" 1/(10*dt)={gain_cap(p.dt)}",
            hard=True,
        ))
    for key in ("b1", "b2", "b3"):
        if getattr(p, key) < 0.0:
            out.append(Violation(key, f"{key}={getattr(p, key)} must be >= 0 (nonnegative forcing)"))
    for key in ("c1", "c2", "c3"):
        if getattr(p, key) <= 0.0:
            out.append(Violation(key, f"{key}={getattr(p, key)} must be a positive pulsation"))
    for key in ("d1", "d2", "d3"):
        if not 0.0 <= getattr(p, key) <= 1.0:
            out.append(Violation(key, f"{key}={getattr(p, key)} must be a peak time in [0,1]"))
    for key in ("phase1", "phase2"):
        if not 0.0 <= getattr(p, key) <= 1.0:
            out.append(Violation(key, f"{key}={getattr(p, key)} must be a phase in [0,1]"))
    if p.omega1 < 0.0:
        out.append(Violation("omega1", f"omega1={p.omega1} must be >= 0"))
    if p.omega2 < 0.0:
        out.append(Violation("omega2", f"omega2={p.omega2} must be >= 0 (decaying control)"))
    if p.kappa < 0.0:
        out.append(Violation("kappa", f"kappa={p.kappa} must be >= 0"))
    if p.v_max <= 0.0:
        out.append(Violation("v_max", f"v_max={p.v_max} must be > 0", hard=True))
    if p.p1_const < 0.0:
        out.append(Violation("p1_const", f"p1_const={p.p1_const} must be >= 0"))
    _check_selector(out, "p1_mode", p.p1_mode, P1_MODES)
    _check_selector(out, "p2_mode", p.p2_mode, P2_MODES)
    _check_selector(out, "eta_mode", p.eta_mode, ETA_MODES)
    # eta(t) must stay inside [eta_star, 1/(1+epsilon)] over the year
    if p.eta_mode in ETA_MODES and p.epsilon >= 0.0:
        from . import forcing  # local import: forcing depends on this module

        hi = 1.0 / (1.0 + p.epsilon)
        bad = None
        for i in range(0, 1001):
            t = i / 1000.0
            eta = forcing.volume_capacity(t, p)
            if not (p.eta_star - 1e-12 <= eta <= hi + 1e-12):
                bad = (t, eta)
                break
        if bad is not None:
            out.append(Violation(
                "eta_mode",
                f"eta({bad[0]})={bad[1]} escapes [eta_star, 1/(1+epsilon)]"
                f" = [{p.eta_star}, {hi}]",
            ))
    return out


def validate_spatial(sp: SpatialParameterSet) -> list[Violation]:
    """Validate the spatial extension together with its base parameters."""
    out = validate(sp.base)
    if sp.diffusivity < 0.0:
        out.append(Violation("diffusivity", f"diffusivity={sp.diffusivity} must be >= 0", hard=True))
    if sp.anisotropy_scale < 0.0:
        out.append(Violation("anisotropy_scale",
                             f"anisotropy_scale={sp.anisotropy_scale} must be >= 0"))
    if sp.spatial_profile not in ("radial", "uniform"):
        out.append(Violation("spatial_profile",
                             f"spatial_profile={sp.spatial_profile!r} not one of"
                             " ['radial', 'uniform']", hard=True))
    for key in ("K1", "K2"):
        k = getattr(sp, key)
        if k < 0.0 or not math.isfinite(k):
            out.append(Violation(key, f"{key}={k} must be finite and >= 0", hard=True))
    if sp.base.dt > 0 and max(sp.K1, sp.K2) > gain_cap(sp.base.dt):
        out.append(Violation(
            "K1" if sp.K1 >= sp.K2 else "K2",
            f"gain cap exceeded: max(K1,K2)={max(sp.K1, sp.K2)} >"
            f" 1/(10*dt)={gain_cap(sp.base.dt)}",
            hard=True,
        ))
    return out


def param_field_names(cls=ParameterSet) -> tuple[str, ...]:
    """Declared field names, in definition order (used by the config codec)."""
    return tuple(f.name for f in fields(cls))
