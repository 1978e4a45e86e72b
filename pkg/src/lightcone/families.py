"""Generators for the section families used by the verification suites.

Random sections are built as omega = exp(c * u) from a seeded band-limited
Gaussian field u (per-degree decay exp(-l^2/25), normalized to unit sup),
with rejection sampling on min H^2 >= 0 where an estimate requires that
hypothesis.  All generators are deterministic functions of their seed.
"""

from __future__ import annotations

import numpy as np

from . import cross_section as cs
from . import sphere_spectral as sph
from .cross_section import CrossSection
from .errors import GenerationFailedError
from .lorentz import FourVector, stcmc_from_z
from .sphere_spectral import ScalarField, SpectralField

DEFAULT_GEN_DEGREE = 12
DEFAULT_AMPLITUDE = 0.3


def round_section(bandlimit: int, rho: float = 1.0) -> CrossSection:
    if rho <= 0:
        raise GenerationFailedError("round section needs rho > 0")
    return CrossSection.round(bandlimit, rho)


def boosted_round(bandlimit: int, rho: float, avec) -> CrossSection:
    """Image of the round sphere of radius rho under the boost with
    velocity parameter avec: omega = rho / (sqrt(1+|a|^2) - a . x)."""
    if rho <= 0:
        raise GenerationFailedError("boosted round needs rho > 0")
    a = np.asarray(avec, dtype=float).reshape(3)
    z = FourVector(rho * np.array([np.sqrt(1.0 + a @ a), *a]))
    return stcmc_from_z(z, bandlimit)


def perturbed_section(
    bandlimit: int, rho: float, l: int, m: int, s: float
) -> CrossSection:
    """omega = rho / (1 + s Y_l^m); the family behind the optimality scan."""
    og = cs.oversampled_grid(bandlimit)
    f = sph.synthesize(SpectralField.delta(bandlimit, l, m), og).values
    vals = 1.0 + s * f
    if vals.min() <= 0:
        raise GenerationFailedError(f"1 + s Y_{l}^{m} loses positivity at s = {s}")
    return CrossSection.from_values(rho / vals, bandlimit)


def exp_perturbation(base: CrossSection, g: SpectralField, eps: float) -> CrossSection:
    """omega = omega_base * exp(eps * g)."""
    gv = sph.synthesize(g, base.ogrid).values
    return CrossSection.from_values(base.omega_values * np.exp(eps * gv), base.bandlimit)


def gaussian_log_factor(
    rng: np.random.Generator,
    bandlimit: int,
    gen_degree: int = DEFAULT_GEN_DEGREE,
) -> SpectralField:
    """Band-limited Gaussian log-factor, decay exp(-l^2/25).

    Normalized so the positive peak of its Laplacian is 3: then
    omega = exp(c u) has min H^2 = 4 e^{-2cu} (1 - c lap u) >= 0 for every
    c <= 1/3, so the default amplitude 0.3 keeps the H^2 >= 0 rejection rate
    at zero while leaving a genuine curvature contrast (min H^2 dips to
    about a tenth of the round value)."""
    u = sph.random_bandlimited(
        rng, bandlimit, gen_degree, degree_decay=lambda l: np.exp(-(l * l) / 25.0)
    )
    og = cs.oversampled_grid(bandlimit)
    peak = sph.synthesize_laplacian(u, og).values.max()
    return (3.0 / peak) * u


def random_section(
    bandlimit: int,
    rng,
    amplitude: float = DEFAULT_AMPLITUDE,
    gen_degree: int = DEFAULT_GEN_DEGREE,
    nonneg_h2: bool = True,
    max_tries: int = 200,
) -> CrossSection:
    """Seeded random section omega = exp(amplitude * u); when nonneg_h2 is
    set, draws are rejected until min H^2 >= 0."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    for _ in range(max_tries):
        u = gaussian_log_factor(rng, bandlimit, gen_degree)
        og = cs.oversampled_grid(bandlimit)
        vals = np.exp(amplitude * sph.synthesize(u, og).values)
        section = CrossSection.from_values(vals, bandlimit)
        if not nonneg_h2 or section._h2_values.min() >= 0.0:
            return section
    raise GenerationFailedError(
        f"no section with H^2 >= 0 found in {max_tries} draws; lower the amplitude"
    )


def compactness_convergent(
    bandlimit: int, n: int, boost: float = 0.4, eps0: float = 0.2
):
    """Sections omega_k = omega_z exp(eps0 2^-k g) converging to the
    constant-H^2 limit omega_z; returns (sections, limit section of unit
    area radius)."""
    base = boosted_round(bandlimit, 1.0, (0.0, 0.0, boost))
    g = SpectralField.delta(bandlimit, 2, 0) + 0.5 * SpectralField.delta(
        bandlimit, 3, 1
    )
    sections = [exp_perturbation(base, g, eps0 * 0.5**k) for k in range(n)]
    return sections, base


def compactness_divergent(bandlimit: int, n: int):
    """The escaping constant-H^2 family omega_k = 1/(sqrt(1+k^2) - k cos),
    unit area radius for every k but with no convergent subsequence."""
    return [
        stcmc_from_z(FourVector([np.sqrt(1.0 + k * k), 0.0, 0.0, float(k)]), bandlimit)
        for k in range(1, n + 1)
    ]
