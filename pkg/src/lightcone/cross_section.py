"""Cross sections of the standard future lightcone and their geometry.

A section is the graph {r = omega} over the round sphere with induced metric
gamma = omega^2 dOmega^2.  All gamma-covariant quantities are reduced to
round-sphere operators acting on v = 1/omega:

    H^2        = 4 (v^2 - |grad v|^2 + v lap v)      (spacetime mean curvature)
    K          = H^2 / 4                             (Gauss curvature)
    thetabar   = 2 / omega,  theta = omega H^2 / 2   (null expansions)
    Aring      = 4 omega * tracefree Hess_{S^2} v    (trace-free part of A)

with |Aring|^2_gamma = 16 v^2 |tracefree Hess v|^2 pointwise.  Nonlinear
products are evaluated on the oversampled grid; v and ln(omega) are
re-analyzed there at the section's bandlimit before any differentiation.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import sphere_spectral as sph
from .errors import BandlimitMismatchError, InvalidSectionError, QuadratureFailureError
from .sphere_spectral import (
    GridSpec,
    ScalarField,
    SpectralField,
    SymTensorField,
    TangentField,
)

_GRID_CACHE: dict = {}


def analysis_grid(bandlimit: int) -> GridSpec:
    g = _GRID_CACHE.get(("a", bandlimit))
    if g is None:
        g = sph.make_grid(bandlimit)
        _GRID_CACHE[("a", bandlimit)] = g
    return g


def oversampled_grid(bandlimit: int) -> GridSpec:
    g = _GRID_CACHE.get(("o", bandlimit))
    if g is None:
        g = sph.make_grid_oversampled(bandlimit)
        _GRID_CACHE[("o", bandlimit)] = g
    return g


class CrossSection:
    """Immutable spacelike cross section, defined by its conformal factor.

    The factor is stored spectrally at a fixed bandlimit; the constructor
    rejects factors that are not strictly positive (or degenerate, with
    min omega < 1e-8 max omega) on the oversampled grid.
    """

    def __init__(self, omega: SpectralField):
        self.omega = omega
        self.bandlimit = omega.bandlimit
        self.grid = analysis_grid(self.bandlimit)
        self.ogrid = oversampled_grid(self.bandlimit)
        vals = sph.synthesize(omega, self.ogrid).values
        mn, mx = float(vals.min()), float(vals.max())
        if mn <= 0.0:
            raise InvalidSectionError(f"conformal factor not positive (min {mn:.3e})")
        if mn < 1e-8 * mx:
            raise InvalidSectionError(
                f"conformal factor degenerate: min/max = {mn / mx:.3e}"
            )
        self._omega_o = vals

    @classmethod
    def from_values(cls, values: np.ndarray, bandlimit: int) -> "CrossSection":
        """Analyze grid values of omega (given on the oversampled grid)."""
        og = oversampled_grid(bandlimit)
        return cls(sph.analyze(ScalarField(og, values)))

    @classmethod
    def round(cls, bandlimit: int, radius: float = 1.0) -> "CrossSection":
        c = SpectralField.zeros(bandlimit)
        c.coeffs[0] = radius * sph.SQRT_4PI
        return cls(c)

    # -- cached representations ------------------------------------------------

    @cached_property
    def v(self) -> ScalarField:
        """1/omega on the analysis grid."""
        return ScalarField(
            self.grid, 1.0 / sph.synthesize(self.omega, self.grid).values
        )

    @cached_property
    def u(self) -> ScalarField:
        """ln(omega) on the analysis grid."""
        return ScalarField(
            self.grid, np.log(sph.synthesize(self.omega, self.grid).values)
        )

    @property
    def omega_values(self) -> np.ndarray:
        """omega on the oversampled grid (exact synthesis)."""
        return self._omega_o

    @cached_property
    def v_coeffs(self) -> SpectralField:
        return sph.analyze(ScalarField(self.ogrid, 1.0 / self._omega_o))

    @cached_property
    def u_coeffs(self) -> SpectralField:
        return sph.analyze(ScalarField(self.ogrid, np.log(self._omega_o)))

    @cached_property
    def _v_data(self):
        c = self.v_coeffs
        vt = sph.synthesize(c, self.ogrid).values
        grad = sph.synthesize_gradient(c, self.ogrid)
        lap = sph.synthesize_laplacian(c, self.ogrid).values
        return vt, grad, lap

    @cached_property
    def _h2_values(self) -> np.ndarray:
        vt, grad, lap = self._v_data
        return 4.0 * (vt**2 - grad.norm2() + vt * lap)

    @cached_property
    def _aess(self) -> SymTensorField:
        return sph.synthesize_hessian(self.v_coeffs, self.ogrid).tracefree()

    @cached_property
    def _area(self) -> float:
        return sph.integrate_values(self._omega_o**2, self.ogrid)


def rescale(section: CrossSection, factor: float) -> CrossSection:
    if factor <= 0:
        raise InvalidSectionError("rescaling factor must be positive")
    return CrossSection(factor * section.omega)


# ------------------------------------------------------------------------------
# Geometric quantities
# ------------------------------------------------------------------------------


def area(section: CrossSection) -> float:
    """Surface area: integral of omega^2 over the round sphere."""
    return section._area


def area_radius(section: CrossSection) -> float:
    return float(np.sqrt(section._area / (4.0 * np.pi)))


def spacetime_mean_curvature(section: CrossSection) -> ScalarField:
    """H^2 on the oversampled grid.  Despite the notation this is the signed
    Lorentzian length of the mean curvature vector and may be negative."""
    return ScalarField(section.ogrid, section._h2_values.copy())


def spacetime_mean_curvature_from_log(section: CrossSection) -> ScalarField:
    """Independent H^2 route through u = ln(omega): 4 e^{-2u} (1 - lap u)."""
    ut = sph.synthesize(section.u_coeffs, section.ogrid).values
    lap = sph.synthesize_laplacian(section.u_coeffs, section.ogrid).values
    return ScalarField(section.ogrid, 4.0 * np.exp(-2.0 * ut) * (1.0 - lap))


def gauss_curvature(section: CrossSection) -> ScalarField:
    return ScalarField(section.ogrid, section._h2_values / 4.0)


def null_expansions(section: CrossSection):
    """(thetabar, theta) with thetabar = 2/omega and theta = omega H^2 / 2,
    so thetabar * theta = H^2 holds by construction."""
    w = section.omega_values
    thetabar = ScalarField(section.ogrid, 2.0 / w)
    theta = ScalarField(section.ogrid, w * section._h2_values / 2.0)
    return thetabar, theta


def theta_direct(section: CrossSection) -> ScalarField:
    """Future null expansion from its defining formula,
    2 (1/omega + |grad omega|^2_gamma / omega - lap_gamma omega), reduced to
    round operators via |grad|^2_gamma = omega^-2 |grad|^2 and
    lap_gamma = omega^-2 lap.  Cross-check route for null_expansions."""
    w = section.omega_values
    grad_w = sph.synthesize_gradient(section.omega, section.ogrid)
    lap_w = sph.synthesize_laplacian(section.omega, section.ogrid).values
    return ScalarField(
        section.ogrid, 2.0 * (1.0 / w + grad_w.norm2() / w**3 - lap_w / w**2)
    )


def connection_one_form(section: CrossSection) -> TangentField:
    """zeta = -d omega / omega in the round orthonormal frame."""
    w = section.omega_values
    grad_w = sph.synthesize_gradient(section.omega, section.ogrid)
    return TangentField(section.ogrid, -grad_w.a_theta / w, -grad_w.a_phi / w)


def tracefree_A(section: CrossSection):
    """Trace-free part of the scalar second fundamental form.

    Returns (aess, density): the round-frame components of the trace-free
    Hessian of v = 1/omega, and the pointwise gamma-norm density
    |Aring|^2_gamma = 16 v^2 |aess|^2 as a ScalarField."""
    aess = section._aess
    vt = section._v_data[0]
    density = ScalarField(section.ogrid, 16.0 * vt**2 * aess.norm2())
    return aess, density


def norm_tracefree_A(section: CrossSection) -> float:
    """L^2(Sigma) norm of Aring."""
    _, density = tracefree_A(section)
    return float(np.sqrt(max(integrate_on_surface(section, density), 0.0)))


def second_ff_contraction(section: CrossSection) -> ScalarField:
    """<chi, thetabar*chi/2...> contraction |II|^2 = theta / omega, computed
    from the direct theta formula; must equal H^2 / 2."""
    w = section.omega_values
    return ScalarField(section.ogrid, theta_direct(section).values / w)


def integrate_on_surface(section: CrossSection, density: ScalarField) -> float:
    """Integral of a density against the surface measure omega^2 dOmega."""
    if density.grid.key != section.ogrid.key:
        raise ValueError("density must live on the section's oversampled grid")
    return sph.integrate_values(density.values * section.omega_values**2, section.ogrid)


def fint_h2(section: CrossSection) -> float:
    """Surface average of H^2 (equals 4/r^2 by Gauss-Bonnet)."""
    return integrate_on_surface(section, spacetime_mean_curvature(section)) / area(
        section
    )


def codazzi_residual(section: CrossSection) -> float:
    """Max gamma-norm of div_gamma(Aring) - d(H^2)/2 over the grid.

    Uses the 2d conformal covariance of the divergence of trace-free symmetric
    tensors, div_gamma T = omega^-2 div_round T, together with the exact
    round-sphere identity div(tracefree Hess v) = d(lap v)/2 + dv.  Every
    ingredient is an exact derivative of the band-limited v and omega, so the
    residual measures only the truncation of 1/omega."""
    og = section.ogrid
    w = section.omega_values
    vt, grad_v, lap_v = section._v_data
    aess = section._aess

    dlap = sph.synthesize_gradient(
        sph.laplacian_coeffs(section.v_coeffs), og
    )
    hess_v = sph.synthesize_hessian(section.v_coeffs, og)
    grad_w = sph.synthesize_gradient(section.omega, og)

    # div_round(Aring) with Aring = 4 omega aess:
    #   4 omega (d lap v / 2 + dv) + 4 aess(grad omega, .)
    div_t = 4.0 * w * (0.5 * dlap.a_theta + grad_v.a_theta) + 4.0 * (
        aess.t_tt * grad_w.a_theta + aess.t_tp * grad_w.a_phi
    )
    div_p = 4.0 * w * (0.5 * dlap.a_phi + grad_v.a_phi) + 4.0 * (
        aess.t_tp * grad_w.a_theta + aess.t_pp * grad_w.a_phi
    )

    # d(H^2)/2 = 2 d(v^2 - |grad v|^2 + v lap v), expanded pointwise-exactly.
    h_t = 2.0 * (
        2.0 * vt * grad_v.a_theta
        - 2.0 * (hess_v.t_tt * grad_v.a_theta + hess_v.t_tp * grad_v.a_phi)
        + lap_v * grad_v.a_theta
        + vt * dlap.a_theta
    )
    h_p = 2.0 * (
        2.0 * vt * grad_v.a_phi
        - 2.0 * (hess_v.t_tp * grad_v.a_theta + hess_v.t_pp * grad_v.a_phi)
        + lap_v * grad_v.a_phi
        + vt * dlap.a_phi
    )

    res_t = div_t / w**2 - h_t
    res_p = div_p / w**2 - h_p
    gamma_norm = np.sqrt((res_t**2 + res_p**2) / w**2)
    return float(gamma_norm.max())


def w22_norm(c: SpectralField) -> float:
    """Spectral W^{2,2} norm: sum of (1 + l(l+1))^2 c_lm^2, square-rooted."""
    weights = np.array(
        [
            (1.0 + l * (l + 1.0)) ** 2
            for l in range(c.bandlimit + 1)
            for _ in range(2 * l + 1)
        ]
    )
    return float(np.sqrt(np.sum(weights * c.coeffs**2)))


def w22_distance(omega1: SpectralField, omega2: SpectralField) -> float:
    if omega1.bandlimit != omega2.bandlimit:
        raise BandlimitMismatchError("w22_distance requires equal bandlimits")
    return w22_norm(omega1 - omega2)


@dataclass
class GeometryReport:
    """Flat analysis record for one section (emitted by the CLI)."""

    area: float
    area_radius: float
    min_h2: float
    max_h2: float
    int_h2: float
    norm_a_tracefree: float
    gap_lhs: float
    gap_rhs: float
    z_vector: tuple
    kappa: float
    codazzi_residual: float
    w22_to_reference: float

    def __post_init__(self):
        if not self.area > 0:
            raise QuadratureFailureError("report with nonpositive area")
