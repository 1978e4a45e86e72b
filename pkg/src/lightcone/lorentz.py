"""Restricted Lorentz group action on lightcone cross sections.

Signature (-+++).  Every transform in the identity component factors as
Lambda = Lambda_a . D ("rotate, then boost"), where D is a spatial rotation
and Lambda_a the pure boost with Lambda_a(dt) = (sqrt(1+|a|^2), a).  The
action on a section is the conformal transformation law

    omega_Lambda(p) = omega(Phi_Lambda(p)) / (sqrt(1+|a|^2) - a . p),

with Phi_Lambda the Moebius point map of the inverse motion; the pure boost
along +e3 pulls colatitudes back through
cos(theta) = (b cos(theta') - a) / (b - a cos(theta')), b = sqrt(1+a^2).
The boost denominator uses the minus sign; the image of the round sphere of
radius rho is rho / (b - a . p), whose own boost parameter in the plus-sign
form rho / (b + a . p) corresponds to the inverse boost.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import sphere_spectral as sph
from .cross_section import CrossSection, area, oversampled_grid
from .errors import (
    BalanceFailedError,
    InvalidReferenceVectorError,
    InvalidSectionError,
    MappedSectionInvalidError,
    NotRestrictedLorentzError,
    QuadratureFailureError,
)
from .sphere_spectral import ScalarField, SpectralField

ETA = np.diag([-1.0, 1.0, 1.0, 1.0])


@dataclass(frozen=True)
class FourVector:
    """Minkowski 4-vector, components (p0, p1, p2, p3)."""

    components: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "components", np.asarray(self.components, dtype=float).reshape(4)
        )

    @property
    def time(self) -> float:
        return float(self.components[0])

    @property
    def spatial(self) -> np.ndarray:
        return self.components[1:].copy()

    def minkowski_norm2(self) -> float:
        p = self.components
        return float(-p[0] ** 2 + p[1] ** 2 + p[2] ** 2 + p[3] ** 2)

    def is_timelike_future(self) -> bool:
        return self.minkowski_norm2() < 0.0 and self.time > 0.0

    def lorentz_radius(self) -> float:
        """sqrt(-eta(z, z)) for timelike z."""
        q = -self.minkowski_norm2()
        if q <= 0:
            raise InvalidReferenceVectorError("vector is not timelike")
        return float(np.sqrt(q))

    def __mul__(self, scalar: float) -> "FourVector":
        return FourVector(self.components * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True)
class LorentzMatrix:
    """Element of the restricted Lorentz group (4x4, M^T eta M = eta,
    det = +1, M00 >= 1)."""

    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "matrix", np.asarray(self.matrix, dtype=float).reshape(4, 4)
        )

    @classmethod
    def identity(cls) -> "LorentzMatrix":
        return cls(np.eye(4))

    @classmethod
    def from_rotation(cls, r3: np.ndarray) -> "LorentzMatrix":
        m = np.eye(4)
        m[1:, 1:] = r3
        return cls(m)

    def invariant_violation(self) -> float:
        m = self.matrix
        err = np.abs(m.T @ ETA @ m - ETA).max()
        err = max(err, abs(np.linalg.det(m) - 1.0))
        if m[0, 0] < 1.0:
            err = max(err, 1.0 - m[0, 0])
        return float(err)

    def require_restricted(self, tol: float = 1e-10):
        if self.invariant_violation() > tol:
            raise NotRestrictedLorentzError(
                f"matrix violates restricted-group invariants by "
                f"{self.invariant_violation():.3e}"
            )

    def inverse(self) -> "LorentzMatrix":
        return LorentzMatrix(ETA @ self.matrix.T @ ETA)

    def __matmul__(self, other):
        if isinstance(other, LorentzMatrix):
            return LorentzMatrix(self.matrix @ other.matrix)
        if isinstance(other, FourVector):
            return FourVector(self.matrix @ other.components)
        return NotImplemented


def special_boost(a: float) -> LorentzMatrix:
    """Boost along the x3 axis: dt-column (b, 0, 0, a), b = sqrt(1+a^2)."""
    b = np.sqrt(1.0 + a * a)
    m = np.eye(4)
    m[0, 0] = m[3, 3] = b
    m[0, 3] = m[3, 0] = a
    return LorentzMatrix(m)


def rotation_to_axis(direction: np.ndarray) -> np.ndarray:
    """Rotation taking e3 to the given unit direction with zero twist
    (rotation about e3 x direction); direction = -e3 uses a fixed 180-degree
    rotation about e1."""
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    c = d[2]
    k = np.array([-d[1], d[0], 0.0])  # e3 x d
    s = np.linalg.norm(k)
    if s < 1e-14:
        if c > 0:
            return np.eye(3)
        return np.diag([1.0, -1.0, -1.0])
    k = k / s
    kmat = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + s * kmat + (1.0 - c) * (kmat @ kmat)


def boost_toward(avec) -> LorentzMatrix:
    """Pure boost with Lambda(dt) = (sqrt(1+|a|^2), a)."""
    a = np.asarray(avec, dtype=float).reshape(3)
    mag = np.linalg.norm(a)
    if mag == 0.0:
        return LorentzMatrix.identity()
    rot = LorentzMatrix.from_rotation(rotation_to_axis(a / mag))
    return rot @ special_boost(mag) @ rot.inverse()


def decompose(lam: LorentzMatrix):
    """Split Lambda = Lambda_a . D into boost vector and spatial rotation."""
    lam.require_restricted()
    avec = lam.matrix[1:, 0].copy()
    d = boost_toward(avec).inverse() @ lam
    m = d.matrix
    err = max(
        abs(m[0, 0] - 1.0),
        np.abs(m[0, 1:]).max(),
        np.abs(m[1:, 0]).max(),
        np.abs(m[1:, 1:].T @ m[1:, 1:] - np.eye(3)).max(),
        abs(np.linalg.det(m[1:, 1:]) - 1.0),
    )
    if err > 1e-9:
        raise NotRestrictedLorentzError(
            f"residual of rotation factor too large: {err:.3e}"
        )
    return avec, d


@dataclass(frozen=True)
class MoebiusMap:
    """Point map and conformal denominator of a Lorentz transform on S^2.

    Convention "rotate-then-boost": for Lambda = Lambda_a . D the pulled-back
    factor is omega(pullback(p)) / (b - a . p) with
    pullback = R_D^-1 . R_a . Phi_|a| . R_a^-1."""

    a: float
    axis_rotation: np.ndarray  # takes e3 to the boost direction
    rotation: np.ndarray  # spatial block of D
    convention: str = field(default="rotate-then-boost")

    @classmethod
    def from_lorentz(cls, lam: LorentzMatrix) -> "MoebiusMap":
        avec, d = decompose(lam)
        mag = float(np.linalg.norm(avec))
        axis = np.eye(3) if mag == 0.0 else rotation_to_axis(avec / mag)
        return cls(mag, axis, d.matrix[1:, 1:].copy())

    @property
    def b(self) -> float:
        return float(np.sqrt(1.0 + self.a * self.a))

    @property
    def boost_vector(self) -> np.ndarray:
        return self.a * self.axis_rotation[:, 2]

    def is_identity(self, tol: float = 1e-14) -> bool:
        return self.a <= tol and np.abs(self.rotation - np.eye(3)).max() <= tol

    def _axis_pullback(self, pts: np.ndarray) -> np.ndarray:
        """Phi_a on Cartesian points: (q1, q2, b q3 - a) / (b - a q3)."""
        den = self.b - self.a * pts[:, 2]
        out = np.empty_like(pts)
        out[:, 0] = pts[:, 0] / den
        out[:, 1] = pts[:, 1] / den
        out[:, 2] = (self.b * pts[:, 2] - self.a) / den
        return out

    def pullback_points(self, pts: np.ndarray) -> np.ndarray:
        q = pts @ self.axis_rotation  # R_a^-1 applied to rows
        q = self._axis_pullback(q)
        q = q @ self.axis_rotation.T
        return q @ self.rotation  # R_D^-1 applied to rows

    def denominator(self, pts: np.ndarray) -> np.ndarray:
        return self.b - pts @ self.boost_vector

    def inverse_lorentz(self) -> LorentzMatrix:
        return (
            boost_toward(self.boost_vector) @ LorentzMatrix.from_rotation(self.rotation)
        ).inverse()


def apply_to_section(lam: LorentzMatrix, section: CrossSection) -> CrossSection:
    """Image of a cross section under a restricted Lorentz transform.

    The pullback is evaluated on the oversampled grid and re-analyzed at the
    section's bandlimit; the relative coefficient energy above 0.9 L is
    attached to the result as `reanalysis_residual`."""
    mob = MoebiusMap.from_lorentz(lam)
    og = section.ogrid
    if mob.is_identity():
        out = CrossSection(section.omega.copy())
        out.reanalysis_residual = 0.0
        return out
    pts = sph.grid_unit_vectors(og).reshape(-1, 3)
    pre = mob.pullback_points(pts)
    theta, phi = sph.angles_of(pre)
    vals = sph.evaluate_at(section.omega, np.stack([theta, phi], axis=-1))
    vals = vals / mob.denominator(pts)
    vals = vals.reshape(og.n_theta, og.n_phi)
    if vals.min() <= 0.0:
        raise MappedSectionInvalidError(
            f"mapped factor lost positivity (min {vals.min():.3e})"
        )
    coeffs = sph.analyze(ScalarField(og, vals))
    try:
        out = CrossSection(coeffs)
    except InvalidSectionError as exc:
        raise MappedSectionInvalidError(str(exc)) from exc
    energies = coeffs.degree_energies()
    cut = int(0.9 * section.bandlimit)
    total = float(energies.sum())
    out.reanalysis_residual = float(np.sqrt(energies[cut + 1 :].sum() / total))
    return out


def z_vector(section: CrossSection) -> FourVector:
    """Area-averaged position 4-vector: Z0 = avg of omega^3, Zi of f_i omega^3."""
    og = section.ogrid
    w3 = section.omega_values**3
    f1, f2, f3 = sph.first_harmonics(og)
    sigma = area(section)
    z = FourVector(
        np.array(
            [
                sph.integrate_values(w3, og),
                sph.integrate_values(f1.values * w3, og),
                sph.integrate_values(f2.values * w3, og),
                sph.integrate_values(f3.values * w3, og),
            ]
        )
        / sigma
    )
    if not z.is_timelike_future():
        raise QuadratureFailureError(
            "computed 4-vector is not timelike future-pointing; quadrature broken"
        )
    return z


def stcmc_from_z(z: FourVector, bandlimit: int) -> CrossSection:
    """Constant-H^2 section with the given associated 4-vector:
    omega = -eta(z, z) / (z0 - z . f)."""
    if not z.is_timelike_future():
        raise InvalidReferenceVectorError(
            "reference vector must be timelike future-pointing"
        )
    og = oversampled_grid(bandlimit)
    f1, f2, f3 = sph.first_harmonics(og)
    zc = z.components
    den = zc[0] - zc[1] * f1.values - zc[2] * f2.values - zc[3] * f3.values
    vals = -z.minkowski_norm2() / den
    return CrossSection.from_values(vals, bandlimit)


def stcmc_values(z: FourVector, grid) -> np.ndarray:
    """Closed-form omega_z on a grid (no re-analysis)."""
    f1, f2, f3 = sph.first_harmonics(grid)
    zc = z.components
    den = zc[0] - zc[1] * f1.values - zc[2] * f2.values - zc[3] * f3.values
    return -z.minkowski_norm2() / den


def first_moment_residual(section: CrossSection) -> float:
    """max_i |int f_i omega^3| / int omega^3 over the three first harmonics."""
    og = section.ogrid
    w3 = section.omega_values**3
    total = sph.integrate_values(w3, og)
    moments = [
        abs(sph.integrate_values(f.values * w3, og))
        for f in sph.first_harmonics(og)
    ]
    return float(max(moments) / total)


def balance(section: CrossSection, tol: float = 1e-8, max_iter: int = 5):
    """Boost a section so its first moments of omega^3 vanish.

    The boost parameter comes in closed form from the associated 4-vector
    (a = Z_spatial / r_Z); iteration only mops up re-analysis error.  Returns
    (balanced section, accumulated transform)."""
    current = section
    total = LorentzMatrix.identity()
    for _ in range(max_iter):
        if first_moment_residual(current) <= tol:
            return current, total
        z = z_vector(current)
        avec = z.spatial / z.lorentz_radius()
        lam = boost_toward(avec).inverse()
        current = apply_to_section(lam, current)
        total = lam @ total
    residual = first_moment_residual(current)
    if residual <= tol:
        return current, total
    raise BalanceFailedError(residual)


def _local_max(fun, theta0: float, phi0: float, h0: float) -> float:
    """Deterministic 5x5 local-grid refinement of a smooth function's max.

    Four levels with spacing shrinking 4x each leave the peak located to
    ~1e-4, i.e. a sup error of order curvature * 1e-8."""
    center_t, center_p, h = theta0, phi0, h0
    best = -np.inf
    offsets = np.arange(-2.0, 3.0)
    for _ in range(4):
        tt, pp = np.meshgrid(center_t + h * offsets, center_p + h * offsets,
                             indexing="ij")
        tt = np.clip(tt, 1e-9, np.pi - 1e-9)
        vals = fun(np.stack([tt.ravel(), pp.ravel() % (2 * np.pi)], axis=-1))
        k = int(np.argmax(vals))
        best = float(vals[k])
        center_t, center_p = tt.ravel()[k], pp.ravel()[k]
        h /= 4.0
    return best


def kappa_bound(section: CrossSection) -> float:
    """Smallest kappa with (1+kappa)^-1 omega_Z <= omega <= (1+kappa) omega_Z
    against the reference factor of the associated 4-vector.

    The grid max of the ratio is refined to the continuum sup (local grid
    search on the smooth ratio); without refinement the value would depend on
    how the grid samples the peak and would not be boost-invariant."""
    z = z_vector(section)
    og = section.ogrid
    ratio = section.omega_values / stcmc_values(z, og)
    zc = z.components
    q = -z.minkowski_norm2()

    def ratio_at(points, sign):
        w = sph.evaluate_at(section.omega, points)
        x = sph.unit_vectors(points[:, 0], points[:, 1])
        den = zc[0] - x @ zc[1:]
        return (w * den / q) ** sign

    h0 = np.pi / og.n_theta
    theta, phi = og.theta_phi_mesh()
    i_up = np.unravel_index(np.argmax(ratio), ratio.shape)
    i_dn = np.unravel_index(np.argmax(1.0 / ratio), ratio.shape)
    up = _local_max(lambda p: ratio_at(p, +1), theta[i_up], phi[i_up], h0)
    dn = _local_max(lambda p: ratio_at(p, -1), theta[i_dn], phi[i_dn], h0)
    return float(max(up, dn) - 1.0)
