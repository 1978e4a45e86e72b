"""Null mean curvature flow of lightcone cross sections.

The flow reduces to the scalar evolution d omega/dt = -theta/2 = -omega H^2/4
of the conformal factor, the 2d Ricci flow of the conformally round metric.
Time stepping is classical RK4 on the spectral coefficients of omega with the
velocity product de-aliased on the oversampled grid each evaluation.  The
area decreases at the constant rate 8 pi, so the unnormalized flow from a
section of area A becomes singular at t = A / 8 pi; the normalized variant
rescales after each step to keep the area radius fixed and converges to a
constant-H^2 section.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import cross_section as cs
from . import sphere_spectral as sph
from .cross_section import CrossSection
from .errors import FlowSingularError, InvalidInputError, MonitorUndefinedError
from .sphere_spectral import ScalarField, SpectralField


@dataclass
class FlowConfig:
    dt_initial: float = 1e-3
    t_max: float = 1.0
    normalized: bool = False
    cfl_safety: float = 0.8
    stop_tracefree_tol: float = 0.0  # 0 disables the convergence stop
    max_steps: int = 100_000
    require_nonneg_h2: bool = False

    def __post_init__(self):
        if self.dt_initial <= 0:
            raise InvalidInputError("dt_initial must be positive")
        if not 0 < self.cfl_safety <= 1:
            raise InvalidInputError("cfl_safety must lie in (0, 1]")


@dataclass
class FlowState:
    t: float
    section: CrossSection
    diagnostics: dict = field(default_factory=dict)


@dataclass
class FlowResult:
    states: list
    termination: str  # reached_t_max | converged | singular | step_limit

    @property
    def final(self) -> FlowState:
        return self.states[-1]


def velocity(section: CrossSection) -> ScalarField:
    """Flow speed of the conformal factor, -omega H^2 / 4 = -omega K."""
    return ScalarField(
        section.ogrid, -section.omega_values * section._h2_values / 4.0
    )


def _velocity_coeffs(omega: SpectralField) -> SpectralField:
    sec = CrossSection(omega)
    return sph.analyze(velocity(sec))


def monotone_quantity(section: CrossSection) -> float:
    """Q = |Sigma| int (H^4/2 - 2 |Aring|^2) dmu; scaling invariant,
    non-decreasing along the flow when H^2 >= 0, bounded by 128 pi^2 with
    equality exactly on constant-H^2 sections."""
    h2 = cs.spacetime_mean_curvature(section)
    _, density = cs.tracefree_A(section)
    integrand = ScalarField(section.ogrid, 0.5 * h2.values**2 - 2.0 * density.values)
    return cs.area(section) * cs.integrate_on_surface(section, integrand)


def gradient_monitor(section: CrossSection) -> float:
    """max over the grid of |grad H^2|^2_gamma / H^2 + 3 |Aring|^2_gamma.

    The flow transports this quantity by a heat-type inequality, so its max
    cannot increase; requires strictly positive H^2."""
    h2 = section._h2_values
    if h2.min() <= 0:
        raise MonitorUndefinedError("gradient monitor needs min H^2 > 0")
    grad = sph.synthesize_gradient(
        sph.analyze(ScalarField(section.ogrid, h2)), section.ogrid
    )
    w2 = section.omega_values**2
    _, density = cs.tracefree_A(section)
    return float((grad.norm2() / w2 / h2 + 3.0 * density.values).max())


def diagnostics(section: CrossSection) -> dict:
    h2 = section._h2_values
    min_h2 = float(h2.min())
    try:
        monitor = gradient_monitor(section)
    except MonitorUndefinedError:
        monitor = float("nan")
    return {
        "area": cs.area(section),
        "area_radius": cs.area_radius(section),
        "Q": monotone_quantity(section),
        "min_H2": min_h2,
        "max_K": float(h2.max() / 4.0),
        "norm_A_tracefree": cs.norm_tracefree_A(section),
        "gradient_monitor": monitor,
    }


def make_state(t: float, section: CrossSection) -> FlowState:
    return FlowState(t, section, diagnostics(section))


def max_stable_dt(section: CrossSection, cfl_safety: float) -> float:
    """Step bound: the curvature-based parabolic surrogate combined with the
    explicit RK4 spectral stability limit for the top mode, whose linearized
    rate is l(l+1)/min(omega)^2."""
    w2_min = float(section.omega_values.min()) ** 2
    max_k = float(np.abs(section._h2_values).max()) / 4.0
    rule_curv = cfl_safety * w2_min / (32.0 * max(max_k, 1e-12))
    L = section.bandlimit
    rule_spectral = cfl_safety * 2.5 * w2_min / (L * (L + 1.0))
    return min(rule_curv, rule_spectral)


def step(state: FlowState, dt: float, target_radius: float | None = None) -> FlowState:
    """One RK4 step; halves dt (at most 10 times) if positivity fails.

    When target_radius is given the stepped factor is rescaled to that area
    radius (normalized flow)."""
    from .errors import InvalidSectionError

    c0 = state.section.omega
    for _ in range(11):
        try:
            k1 = _velocity_coeffs(c0)
            k2 = _velocity_coeffs(c0 + (0.5 * dt) * k1)
            k3 = _velocity_coeffs(c0 + (0.5 * dt) * k2)
            k4 = _velocity_coeffs(c0 + dt * k3)
            c_new = c0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            section = CrossSection(c_new)
        except (InvalidSectionError, ValueError):
            # positivity loss or non-finite values from an unstable step
            dt *= 0.5
            continue
        if target_radius is not None:
            section = cs.rescale(section, target_radius / cs.area_radius(section))
        return make_state(state.t + dt, section)
    raise FlowSingularError("positivity unrecoverable after 10 dt halvings")


def run(section0: CrossSection, config: FlowConfig) -> FlowResult:
    """Evolve until t_max, convergence (normalized mode), or singularity."""
    if config.require_nonneg_h2 and float(section0._h2_values.min()) < 0:
        raise InvalidInputError("initial section must have H^2 >= 0")
    target_radius = cs.area_radius(section0) if config.normalized else None
    min0 = float(section0.omega_values.min())
    states = [make_state(0.0, section0)]
    termination = "step_limit"
    for _ in range(config.max_steps):
        state = states[-1]
        if state.t >= config.t_max - 1e-15:
            termination = "reached_t_max"
            break
        if (
            config.normalized
            and config.stop_tracefree_tol > 0
            and state.diagnostics["norm_A_tracefree"] < config.stop_tracefree_tol
        ):
            termination = "converged"
            break
        dt = min(
            config.dt_initial,
            max_stable_dt(state.section, config.cfl_safety),
            config.t_max - state.t,
        )
        try:
            new_state = step(state, dt, target_radius)
        except FlowSingularError:
            termination = "singular"
            break
        states.append(new_state)
        if float(new_state.section.omega_values.min()) < 1e-3 * min0:
            termination = "singular"
            break
    return FlowResult(states, termination)
