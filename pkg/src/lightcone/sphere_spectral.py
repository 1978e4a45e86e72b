"""Quadrature-exact function calculus on the round 2-sphere.

Fields are represented either by values on a Gauss-Legendre x equispaced-phi
grid or by coefficients in a real orthonormal spherical-harmonic basis
(Condon-Shortley-free).  Basis convention, with P~_lm the associated Legendre
functions orthonormalized on [-1, 1]:

    Y_{l,0}  = P~_l0(cos theta) / sqrt(2 pi)
    Y_{l,m}  = P~_lm(cos theta) * cos(m phi) / sqrt(pi)   (m > 0)
    Y_{l,-m} = P~_lm(cos theta) * sin(m phi) / sqrt(pi)   (m > 0)

Coefficients are stored flat with index l*l + l + m (degree ascending, order
ascending within each degree).  All differential operators act through the
spectral representation; theta-derivatives use stable associated-Legendre
recurrences, never grid finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BandlimitMismatchError,
    GridTooCoarseError,
    InvalidBandlimitError,
)

TWO_PI = 2.0 * np.pi
SQRT_4PI = np.sqrt(4.0 * np.pi)


def coeff_index(l: int, m: int) -> int:
    """Flat index of the (l, m) coefficient."""
    return l * l + l + m


def n_coeffs(bandlimit: int) -> int:
    return (bandlimit + 1) ** 2


@dataclass(frozen=True, eq=False)
class GridSpec:
    """Gauss-Legendre (colatitude) x equispaced (longitude) quadrature grid.

    theta_nodes are strictly increasing and exclude the poles; glq_weights are
    the Gauss-Legendre weights in x = cos(theta), so the total quadrature
    weight sum_i glq_weights[i] * (2 pi / n_phi) over the grid is 4 pi.
    """

    bandlimit: int
    n_theta: int
    n_phi: int
    theta_nodes: np.ndarray
    glq_weights: np.ndarray
    x_nodes: np.ndarray  # exact Gauss-Legendre nodes, cos(theta_nodes)

    @property
    def phi_nodes(self) -> np.ndarray:
        return TWO_PI * np.arange(self.n_phi) / self.n_phi

    @property
    def key(self):
        return (self.bandlimit, self.n_theta, self.n_phi)

    def theta_phi_mesh(self):
        return np.meshgrid(self.theta_nodes, self.phi_nodes, indexing="ij")


def _legendre_and_derivative(n: int, x: np.ndarray):
    p0 = np.ones_like(x)
    p1 = x.copy()
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    return p1, n * (x * p1 - p0) / (x * x - 1.0)


def _gauss_legendre_grid(bandlimit: int, n_theta: int, n_phi: int) -> GridSpec:
    x, _ = np.polynomial.legendre.leggauss(n_theta)
    # Refine nodes and recompute weights in extended precision: leggauss
    # weights are only ~1e-12 accurate at n ~ 100, which would dominate the
    # coefficient noise of every transform.
    xl = x.astype(np.longdouble)
    for _ in range(2):
        p, dp = _legendre_and_derivative(n_theta, xl)
        xl = xl - p / dp
    _, dp = _legendre_and_derivative(n_theta, xl)
    wl = 2.0 / ((1.0 - xl * xl) * dp * dp)
    # ascending theta = descending x
    x = np.asarray(xl, dtype=float)[::-1].copy()
    weights = np.asarray(wl, dtype=float)[::-1].copy()
    return GridSpec(bandlimit, n_theta, n_phi, np.arccos(x), weights, x)


def make_grid(bandlimit: int) -> GridSpec:
    """Minimal grid that analyzes degree-<=L fields exactly (L+1 x 2L+2)."""
    if bandlimit < 4:
        raise InvalidBandlimitError(f"bandlimit must be >= 4, got {bandlimit}")
    return _gauss_legendre_grid(bandlimit, bandlimit + 1, 2 * bandlimit + 2)


def make_grid_oversampled(bandlimit: int) -> GridSpec:
    """Grid for aliasing-sensitive products (2L+1 x 4L+2); exact through
    quartic products of degree-<=L fields."""
    if bandlimit < 4:
        raise InvalidBandlimitError(f"bandlimit must be >= 4, got {bandlimit}")
    return _gauss_legendre_grid(bandlimit, 2 * bandlimit + 1, 4 * bandlimit + 2)


@dataclass(eq=False)
class ScalarField:
    """Real function on a quadrature grid, values of shape (n_theta, n_phi)."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_theta, self.grid.n_phi):
            raise ValueError(
                f"values shape {self.values.shape} does not match grid "
                f"({self.grid.n_theta}, {self.grid.n_phi})"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    def __add__(self, other):
        return ScalarField(self.grid, self.values + _vals(other))

    def __sub__(self, other):
        return ScalarField(self.grid, self.values - _vals(other))

    def __mul__(self, other):
        return ScalarField(self.grid, self.values * _vals(other))

    __rmul__ = __mul__


def _vals(x):
    return x.values if isinstance(x, ScalarField) else x


@dataclass(eq=False)
class SpectralField:
    """Harmonic coefficients up to a bandlimit, flat layout l*l + l + m."""

    bandlimit: int
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (n_coeffs(self.bandlimit),):
            raise ValueError("coefficient array has wrong length")

    @classmethod
    def zeros(cls, bandlimit: int) -> "SpectralField":
        return cls(bandlimit, np.zeros(n_coeffs(bandlimit)))

    @classmethod
    def delta(cls, bandlimit: int, l: int, m: int, value: float = 1.0):
        c = cls.zeros(bandlimit)
        c.coeffs[coeff_index(l, m)] = value
        return c

    def get(self, l: int, m: int) -> float:
        return float(self.coeffs[coeff_index(l, m)])

    def copy(self) -> "SpectralField":
        return SpectralField(self.bandlimit, self.coeffs.copy())

    def padded_to(self, bandlimit: int) -> "SpectralField":
        if bandlimit < self.bandlimit:
            raise BandlimitMismatchError("cannot pad to a smaller bandlimit")
        out = SpectralField.zeros(bandlimit)
        out.coeffs[: self.coeffs.size] = self.coeffs
        return out

    def degree_energies(self) -> np.ndarray:
        """Sum of squared coefficients per degree l."""
        out = np.empty(self.bandlimit + 1)
        for l in range(self.bandlimit + 1):
            out[l] = np.sum(self.coeffs[l * l : (l + 1) ** 2] ** 2)
        return out

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _check_same_bandlimit(self, other)
        return SpectralField(self.bandlimit, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _check_same_bandlimit(self, other)
        return SpectralField(self.bandlimit, self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "SpectralField":
        return SpectralField(self.bandlimit, self.coeffs * scalar)

    __rmul__ = __mul__


def _check_same_bandlimit(a: SpectralField, b: SpectralField):
    if a.bandlimit != b.bandlimit:
        raise BandlimitMismatchError(
            f"bandlimits differ: {a.bandlimit} vs {b.bandlimit}"
        )


@dataclass(eq=False)
class TangentField:
    """Vector field in the round orthonormal frame (e_theta, e_phi)."""

    grid: GridSpec
    a_theta: np.ndarray
    a_phi: np.ndarray

    def norm2(self) -> np.ndarray:
        return self.a_theta**2 + self.a_phi**2


@dataclass(eq=False)
class SymTensorField:
    """Symmetric 2-tensor in the round orthonormal frame."""

    grid: GridSpec
    t_tt: np.ndarray
    t_tp: np.ndarray
    t_pp: np.ndarray

    def trace(self) -> np.ndarray:
        return self.t_tt + self.t_pp

    def tracefree(self) -> "SymTensorField":
        half = 0.5 * (self.t_tt + self.t_pp)
        return SymTensorField(self.grid, self.t_tt - half, self.t_tp, self.t_pp - half)

    def norm2(self) -> np.ndarray:
        """Pointwise squared Frobenius norm (round frame)."""
        return self.t_tt**2 + 2.0 * self.t_tp**2 + self.t_pp**2


# ----------------------------------------------------------------------------
# Precomputed transform tables, cached per grid signature.
# ----------------------------------------------------------------------------


class _Tables:
    """Legendre/trig tables for one grid: rows grouped by order m, l = m..L."""

    def __init__(self, grid: GridSpec):
        L = grid.bandlimit
        # Tables are built in extended precision (once per grid) so that the
        # l(l+1)-amplified spectral derivatives stay near the double floor;
        # recurrence error at plain double would leave ~1e-13 per coefficient.
        x = grid.x_nodes.astype(np.longdouble)
        s = np.sqrt((1.0 - x) * (1.0 + x))
        self.x = np.asarray(x, dtype=float)
        self.s = np.asarray(s, dtype=float)
        self.cot = self.x / self.s
        self.L = L
        self.w = grid.glq_weights
        self.phi_weight = TWO_PI / grid.n_phi

        n_pairs = (L + 1) * (L + 2) // 2
        self.offsets = np.zeros(L + 2, dtype=int)
        for m in range(L + 1):
            self.offsets[m + 1] = self.offsets[m] + (L + 1 - m)
        self.m_of_pair = np.concatenate(
            [np.full(L + 1 - m, m) for m in range(L + 1)]
        )
        self.l_of_pair = np.concatenate(
            [np.arange(m, L + 1) for m in range(L + 1)]
        )

        P = np.zeros((n_pairs, grid.n_theta), dtype=np.longdouble)
        dP = np.zeros((n_pairs, grid.n_theta), dtype=np.longdouble)
        _fill_legendre(L, x, s, P, self.offsets)
        _fill_legendre_theta_derivative(L, x, s, P, dP, self.offsets)
        ll1 = (self.l_of_pair * (self.l_of_pair + 1)).astype(np.longdouble)[:, None]
        m2 = (self.m_of_pair**2).astype(np.longdouble)[:, None]
        d2P = -(x / s)[None, :] * dP - (ll1 - m2 / (s**2)[None, :]) * P
        self.P = np.asarray(P, dtype=float)
        self.dP = np.asarray(dP, dtype=float)
        self.d2P = np.asarray(d2P, dtype=float)

        phi = grid.phi_nodes
        m_arr = np.arange(L + 1)[:, None]
        self.trigC = np.cos(m_arr * phi[None, :]) / np.sqrt(np.pi)
        self.trigC[0] = 1.0 / np.sqrt(TWO_PI)
        self.trigS = np.sin(m_arr * phi[None, :]) / np.sqrt(np.pi)

        # Map from flat (l, m) coefficient index to pair rows, per trig type.
        self.flat_plus = np.array(
            [coeff_index(l, m) for m in range(L + 1) for l in range(m, L + 1)]
        )
        self.flat_minus = np.array(
            [coeff_index(l, -m) for m in range(L + 1) for l in range(m, L + 1)]
        )

    def pack(self, coeffs: np.ndarray):
        """Split flat coefficients into cos-type and sin-type pair vectors."""
        return coeffs[self.flat_plus], coeffs[self.flat_minus]


def _fill_legendre(L, x, s, P, offsets):
    """Orthonormal associated Legendre values via the stable m-diagonal and
    three-term upward recurrences (no Condon-Shortley phase)."""
    diag = np.full_like(x, 1.0 / np.sqrt(2.0))
    for m in range(L + 1):
        if m > 0:
            diag = np.sqrt((2 * m + 1) / (2.0 * m)) * s * diag
        base = offsets[m]
        P[base] = diag
        if m + 1 <= L:
            P[base + 1] = np.sqrt(2 * m + 3.0) * x * diag
        for l in range(m + 2, L + 1):
            a = np.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = -np.sqrt(
                (2.0 * l + 1.0)
                * ((l - 1.0) ** 2 - m * m)
                / ((2.0 * l - 3.0) * (l * l - m * m))
            )
            P[base + l - m] = a * x * P[base + l - m - 1] + b * P[base + l - m - 2]


def _fill_legendre_theta_derivative(L, x, s, P, dP, offsets):
    # d/dtheta P~_lm = (l x P~_lm - e_lm P~_{l-1,m}) / sin(theta),
    # e_lm = sqrt((2l+1)/(2l-1) (l^2 - m^2)); the l = m term has e = 0.
    for m in range(L + 1):
        base = offsets[m]
        dP[base] = m * x * P[base] / s
        for l in range(m + 1, L + 1):
            e = np.sqrt((2.0 * l + 1.0) / (2.0 * l - 1.0) * (l * l - m * m))
            dP[base + l - m] = (l * x * P[base + l - m] - e * P[base + l - m - 1]) / s


_TABLE_CACHE: dict = {}


def _tables(grid: GridSpec) -> _Tables:
    tab = _TABLE_CACHE.get(grid.key)
    if tab is None:
        tab = _Tables(grid)
        _TABLE_CACHE[grid.key] = tab
    return tab


# ----------------------------------------------------------------------------
# Transforms
# ----------------------------------------------------------------------------


def analyze(f: ScalarField) -> SpectralField:
    """Project grid values onto the harmonic basis by quadrature.

    Exact for fields band-limited at the grid's bandlimit."""
    tab = _tables(f.grid)
    L = tab.L
    # phi stage: A[m, i], B[m, i] are the cos/sin Fourier profiles.
    A = (f.values @ tab.trigC.T).T * tab.phi_weight
    B = (f.values @ tab.trigS.T).T * tab.phi_weight
    wA = A * tab.w[None, :]
    wB = B * tab.w[None, :]
    # pairwise np.sum keeps coefficient roundoff ~1e-15; naive accumulation
    # would be amplified by l(l+1) in spectral second derivatives
    cp = np.sum(tab.P * wA[tab.m_of_pair], axis=1)
    cm = np.sum(tab.P * wB[tab.m_of_pair], axis=1)
    coeffs = np.zeros(n_coeffs(L))
    coeffs[tab.flat_plus] = cp
    coeffs[tab.flat_minus[tab.m_of_pair > 0]] = cm[tab.m_of_pair > 0]
    return SpectralField(L, coeffs)


def _theta_profiles(c: SpectralField, tab: _Tables, table: np.ndarray):
    """Per-order theta profiles A[m, i] (cos side) and B[m, i] (sin side)."""
    cp, cm = tab.pack(c.coeffs)
    prodA = table * cp[:, None]
    prodB = table * cm[:, None]
    A = np.add.reduceat(prodA, tab.offsets[:-1], axis=0)
    B = np.add.reduceat(prodB, tab.offsets[:-1], axis=0)
    B[0] = 0.0
    return A, B


def _synth_table(c: SpectralField, grid: GridSpec, table_name: str) -> np.ndarray:
    tab = _tables(grid)
    if c.bandlimit > grid.bandlimit:
        raise GridTooCoarseError(
            f"grid bandlimit {grid.bandlimit} < field bandlimit {c.bandlimit}"
        )
    if c.bandlimit < grid.bandlimit:
        c = c.padded_to(grid.bandlimit)
    A, B = _theta_profiles(c, tab, getattr(tab, table_name))
    return A.T @ tab.trigC + B.T @ tab.trigS


def synthesize(c: SpectralField, grid: GridSpec) -> ScalarField:
    """Evaluate the harmonic sum on the grid."""
    return ScalarField(grid, _synth_table(c, grid, "P"))


def _phi_derivative_coeffs(c: SpectralField) -> SpectralField:
    """Coefficient map of d/dphi: swaps the +-m blocks with factors -+m."""
    out = SpectralField.zeros(c.bandlimit)
    for l in range(1, c.bandlimit + 1):
        for m in range(1, l + 1):
            out.coeffs[coeff_index(l, m)] = m * c.coeffs[coeff_index(l, -m)]
            out.coeffs[coeff_index(l, -m)] = -m * c.coeffs[coeff_index(l, m)]
    return out


def laplacian_coeffs(c: SpectralField) -> SpectralField:
    ll1 = np.array(
        [-l * (l + 1.0) for l in range(c.bandlimit + 1) for _ in range(2 * l + 1)]
    )
    return SpectralField(c.bandlimit, c.coeffs * ll1)


def synthesize_gradient(c: SpectralField, grid: GridSpec) -> TangentField:
    """Frame components (d_theta f, (1/sin theta) d_phi f)."""
    tab = _tables(grid)
    at = _synth_table(c, grid, "dP")
    dphi = _phi_derivative_coeffs(c)
    ap = _synth_table(dphi, grid, "P") / tab.s[:, None]
    return TangentField(grid, at, ap)


def synthesize_laplacian(c: SpectralField, grid: GridSpec) -> ScalarField:
    return synthesize(laplacian_coeffs(c), grid)


def synthesize_hessian(c: SpectralField, grid: GridSpec) -> SymTensorField:
    """Round-sphere Hessian in the orthonormal frame.

    H_tt = f_,theta,theta
    H_tp = f_,theta,phi / sin - cos/sin^2 f_,phi
    H_pp = f_,phi,phi / sin^2 + cot f_,theta
    """
    tab = _tables(grid)
    s = tab.s[:, None]
    cot = tab.cot[:, None]
    dphi = _phi_derivative_coeffs(c)
    f_t = _synth_table(c, grid, "dP")
    f_p = _synth_table(dphi, grid, "P")
    f_tt = _synth_table(c, grid, "d2P")
    f_tp = _synth_table(dphi, grid, "dP")
    f_pp = _synth_table(_phi_derivative_coeffs(dphi), grid, "P")
    h_tt = f_tt
    h_tp = f_tp / s - (cot / s) * f_p
    h_pp = f_pp / s**2 + cot * f_t
    return SymTensorField(grid, h_tt, h_tp, h_pp)


def gradient(f: ScalarField) -> TangentField:
    return synthesize_gradient(analyze(f), f.grid)


def laplacian(f: ScalarField) -> ScalarField:
    return synthesize_laplacian(analyze(f), f.grid)


def hessian(f: ScalarField) -> SymTensorField:
    return synthesize_hessian(analyze(f), f.grid)


def integrate(f: ScalarField) -> float:
    """Quadrature of f over the sphere with the round measure."""
    tab = _tables(f.grid)
    return float(np.sum((f.values @ np.full(f.grid.n_phi, tab.phi_weight)) * tab.w))


def integrate_values(values: np.ndarray, grid: GridSpec) -> float:
    tab = _tables(grid)
    return float(np.sum(values.sum(axis=1) * tab.w) * tab.phi_weight)


def project_degrees(c: SpectralField, degrees) -> SpectralField:
    """Zero all coefficients whose degree is not in `degrees`."""
    keep = set(int(d) for d in degrees)
    out = SpectralField.zeros(c.bandlimit)
    for l in range(c.bandlimit + 1):
        if l in keep:
            out.coeffs[l * l : (l + 1) ** 2] = c.coeffs[l * l : (l + 1) ** 2]
    return out


def first_harmonics(grid: GridSpec):
    """The coordinate functions (f1, f2, f3) = (sin sin, sin cos, cos)."""
    theta, phi = grid.theta_phi_mesh()
    st = np.sin(theta)
    return (
        ScalarField(grid, st * np.sin(phi)),
        ScalarField(grid, st * np.cos(phi)),
        ScalarField(grid, np.cos(theta)),
    )


def unit_vectors(theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Cartesian points of S^2 with x1 = sin sin, x2 = sin cos, x3 = cos."""
    st = np.sin(theta)
    return np.stack([st * np.sin(phi), st * np.cos(phi), np.cos(theta)], axis=-1)


def angles_of(points: np.ndarray):
    """(theta, phi) of Cartesian unit vectors; phi in [0, 2 pi)."""
    p = np.asarray(points, dtype=float)
    theta = np.arccos(np.clip(p[..., 2], -1.0, 1.0))
    phi = np.arctan2(p[..., 0], p[..., 1]) % TWO_PI
    return theta, phi


def grid_unit_vectors(grid: GridSpec) -> np.ndarray:
    theta, phi = grid.theta_phi_mesh()
    return unit_vectors(theta, phi)


def evaluate_at(c: SpectralField, points) -> np.ndarray:
    """Synthesize at arbitrary (theta, phi) points.

    Points at the poles are handled by the m = 0 limit (all m > 0 basis
    functions vanish there)."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    theta = pts[:, 0]
    phi = pts[:, 1]
    x = np.cos(theta)
    s = np.sin(theta)
    L = c.bandlimit
    out = np.zeros(len(pts))
    diag = np.full_like(x, 1.0 / np.sqrt(2.0))
    inv_sqrt_pi = 1.0 / np.sqrt(np.pi)
    for m in range(L + 1):
        if m > 0:
            diag = np.sqrt((2 * m + 1) / (2.0 * m)) * s * diag
        ls = np.arange(m, L + 1)
        cp = c.coeffs[ls * ls + ls + m]
        cm = c.coeffs[ls * ls + ls - m] if m > 0 else None
        if not cp.any() and (cm is None or not cm.any()):
            continue
        # accumulate the theta profile for this order, then attach trig
        acc_c = np.zeros_like(x)
        acc_s = np.zeros_like(x) if m > 0 else None
        p_prev = np.zeros_like(x)
        p_curr = diag
        for k, l in enumerate(ls):
            if l == m + 1:
                p_prev, p_curr = p_curr, np.sqrt(2 * m + 3.0) * x * diag
            elif l > m + 1:
                a = np.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
                b = -np.sqrt(
                    (2.0 * l + 1.0)
                    * ((l - 1.0) ** 2 - m * m)
                    / ((2.0 * l - 3.0) * (l * l - m * m))
                )
                p_prev, p_curr = p_curr, a * x * p_curr + b * p_prev
            if cp[k] != 0.0:
                acc_c += cp[k] * p_curr
            if m > 0 and cm[k] != 0.0:
                acc_s += cm[k] * p_curr
        if m == 0:
            out += acc_c / np.sqrt(TWO_PI)
        else:
            mphi = m * phi
            out += inv_sqrt_pi * (acc_c * np.cos(mphi) + acc_s * np.sin(mphi))
    return out


def random_bandlimited(
    rng: np.random.Generator,
    bandlimit: int,
    max_degree: int,
    degree_decay=None,
    include_constant: bool = False,
) -> SpectralField:
    """Seeded Gaussian coefficients up to max_degree, optional per-degree decay."""
    c = SpectralField.zeros(bandlimit)
    l0 = 0 if include_constant else 1
    for l in range(l0, min(max_degree, bandlimit) + 1):
        scale = 1.0 if degree_decay is None else degree_decay(l)
        c.coeffs[l * l : (l + 1) ** 2] = scale * rng.standard_normal(2 * l + 1)
    return c
