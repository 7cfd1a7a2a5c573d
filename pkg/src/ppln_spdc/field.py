"""Biphoton transverse amplitude on momentum and position grids.

The joint amplitude is

    Φ(q_s, q_i) = E_p(q_s + q_i) · sinc(L/(4k_p)·|q_s − q_i|² + φ(T, λ_s))

with a Gaussian pump angular spectrum E_p(q) = exp(−w²|q|²/4), w being the
1/e² intensity radius of the pump waist.

Two representations are provided:

* one transverse axis (q_y = 0) on an N×N grid, used for coincidence maps,
  the singular-value oracle and per-axis marginals;
* exact two-dimensional single-photon marginals, obtained from the
  factorization of Φ in sum/difference coordinates, where both the
  far-field and the near-field marginal reduce to 2-D convolutions of
  radially symmetric functions.

Position x is conjugate to q through exp(i·q·x); transforms are unitary,
so Σ|Ψ|²Δx² = Σ|Φ|²Δq² holds exactly.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .crystal import CrystalConfig, wavenumber
from .errors import DomainError
from .phasematch import PumpSpec, collinear_mismatch, idler_wavelength, ring_wavevector, sinc

log = logging.getLogger(__name__)

NEAR = "near"
FAR = "far"


@dataclass(frozen=True)
class PumpBeam(PumpSpec):
    """Gaussian pump; ``waist_um`` is the 1/e² intensity radius at the crystal centre."""

    waist_um: float = 80.0

    def __post_init__(self):
        super().__post_init__()
        if not self.waist_um > 0:
            raise ValueError(f"pump waist must be positive, got {self.waist_um} µm")


@dataclass(frozen=True)
class TransverseGrid:
    """Symmetric 1-D wavevector grid of ``n`` points spanning [−q_max, q_max] (rad/µm)."""

    n: int = 512
    q_max: float = 0.2

    def __post_init__(self):
        if self.n < 32 or self.n & (self.n - 1):
            raise ValueError(f"grid size must be a power of two >= 32, got {self.n}")
        if not self.q_max > 0:
            raise ValueError(f"q_max must be positive, got {self.q_max}")

    @property
    def q(self) -> np.ndarray:
        return np.linspace(-self.q_max, self.q_max, self.n)

    @property
    def dq(self) -> float:
        return 2 * self.q_max / (self.n - 1)


@dataclass(frozen=True)
class BiphotonMatrix:
    values: np.ndarray
    grid: TransverseGrid
    signal_um: float
    idler_um: float
    temperature_c: float


@dataclass(frozen=True)
class NearFieldMatrix:
    values: np.ndarray
    x: np.ndarray
    dx: float


@dataclass(frozen=True)
class IntensityProfile:
    """Sampled single-photon intensity.

    ``geometry`` is ``"line"`` (1-D samples, measure ``cell``), ``"plane"``
    (2-D grid, measure ``cell``·``cell_y``) or ``"radial"`` (samples in |r|
    or |q|, annular measure 2π·|r|·``cell``). A plane uses ``coords`` for
    both axes unless ``coords_y``/``cell_y`` are given; ``values[a, b]`` sits
    at (coords[a], coords_y[b]).
    ``domain`` is ``"near"`` (position, µm) or ``"far"`` (wavevector, rad/µm).
    """

    domain: str
    coords: np.ndarray
    values: np.ndarray
    cell: float
    geometry: str = "line"
    coords_y: np.ndarray | None = None
    cell_y: float | None = None

    def __post_init__(self):
        if self.domain not in (NEAR, FAR):
            raise ValueError(f"domain must be 'near' or 'far', got {self.domain!r}")
        if self.geometry not in ("line", "plane", "radial"):
            raise ValueError(f"unknown geometry {self.geometry!r}")
        if not self.cell > 0:
            raise ValueError("cell measure must be positive")
        if self.geometry != "plane" and (self.coords_y is not None or self.cell_y is not None):
            raise ValueError("coords_y and cell_y apply to plane profiles only")
        if self.geometry == "plane":
            if self.coords_y is None:
                object.__setattr__(self, "coords_y", self.coords)
            if self.cell_y is None:
                object.__setattr__(self, "cell_y", self.cell)
            if not self.cell_y > 0:
                raise ValueError("cell measure must be positive")
        c = np.asarray(self.coords)
        cy = np.asarray(self.coords_y) if self.geometry == "plane" else c
        for axis in (c, cy):
            if axis.size > 1 and np.any(np.diff(axis) <= 0):
                raise ValueError("coordinates must be strictly increasing")
        v = np.asarray(self.values)
        if np.any(v < 0):
            raise ValueError("intensities must be non-negative")
        expected = (c.size, cy.size) if self.geometry == "plane" else (c.size,)
        if v.shape != expected:
            raise ValueError(f"values shape {v.shape} does not match coordinates {expected}")

    @property
    def dim(self) -> int:
        return 1 if self.geometry == "line" else 2

    def weights(self) -> np.ndarray:
        """Integration measure attached to each sample."""
        if self.geometry == "line":
            return np.full(self.values.shape, self.cell)
        if self.geometry == "plane":
            return np.full(self.values.shape, self.cell * self.cell_y)
        return 2 * np.pi * np.abs(self.coords) * self.cell

    def total(self) -> float:
        return float(np.sum(self.values * self.weights()))


def pump_angular_spectrum(q_sum, pump: PumpBeam):
    """Gaussian pump angular spectrum exp(−w²|q|²/4)."""
    return np.exp(-(pump.waist_um**2) * np.square(q_sum) / 4)


def _sinc_coefficient(temperature_c: float, crystal: CrystalConfig, pump: PumpSpec) -> float:
    kp = wavenumber(pump.wavelength_um, temperature_c, crystal.sellmeier)
    return crystal.length_um / (4 * kp)


def biphoton_matrix(
    signal_um: float,
    temperature_c: float,
    crystal: CrystalConfig,
    pump: PumpBeam,
    grid: TransverseGrid,
) -> BiphotonMatrix:
    """Φ[j, k] = Φ(q_j, q_k) on one transverse axis (y components zero)."""
    b = _sinc_coefficient(temperature_c, crystal, pump)
    phi = collinear_mismatch(signal_um, temperature_c, crystal, pump)
    q = grid.q
    qs, qi = q[:, None], q[None, :]
    values = pump_angular_spectrum(qs + qi, pump) * sinc(b * (qs - qi) ** 2 + phi)
    return BiphotonMatrix(
        values.astype(complex), grid, signal_um, idler_wavelength(signal_um, pump), temperature_c
    )


def conjugate_axis(n: int, dq: float) -> np.ndarray:
    """Position samples conjugate to an ``n``-point wavevector grid of step ``dq``."""
    return np.fft.fftshift(np.fft.fftfreq(n, d=dq)) * 2 * np.pi


def nearfield_matrix(phi: BiphotonMatrix) -> NearFieldMatrix:
    """Unitary 2-D transform of Φ to crystal-plane positions (x_s, x_i) in µm."""
    n, dq = phi.grid.n, phi.grid.dq
    x = conjugate_axis(n, dq)
    dx = 2 * np.pi / (n * dq)
    psi = np.fft.fftshift(np.fft.ifft2(np.fft.ifftshift(phi.values), norm="ortho"))
    return NearFieldMatrix(psi * (dq / dx), x, dx)


def marginal_intensity(
    matrix: np.ndarray, coords: np.ndarray, cell: float, domain: str, axis: int = 0
) -> IntensityProfile:
    """Single-photon intensity I[j] = Σ_k |M[j, k]|²·cell for the photon on ``axis``."""
    p = np.abs(np.asarray(matrix)) ** 2
    values = p.sum(axis=1 - axis) * cell
    return IntensityProfile(domain, np.asarray(coords, dtype=float), values, cell)


def farfield_marginal(phi: BiphotonMatrix, axis: int = 0) -> IntensityProfile:
    return marginal_intensity(phi.values, phi.grid.q, phi.grid.dq, FAR, axis)


def nearfield_marginal(psi: NearFieldMatrix, axis: int = 0) -> IntensityProfile:
    return marginal_intensity(psi.values, psi.x, psi.dx, NEAR, axis)


def pump_spectral_width(pump: PumpBeam) -> float:
    """1/e half-width of the pump angular spectrum amplitude, 2/w (rad/µm)."""
    return 2.0 / pump.waist_um


def farfield_radial_profile(
    signal_um: float,
    temperature_c: float,
    crystal: CrystalConfig,
    pump: PumpBeam,
    n_radial: int = 256,
    n_quad: int = 160,
    q_extent: float | None = None,
    normalize: bool = True,
) -> IntensityProfile:
    """Radial far-field marginal I(|q_s|) = ∫|Φ(q_s, q_i)|² d²q_i.

    By rotational symmetry q_s is taken on the x axis. The integral runs over
    u = q_s + q_i on a square midpoint grid of ``n_quad``² nodes whose
    half-width is four times the larger of the ring wavevector and the pump
    spectral width, centred where the pump spectrum localizes the integrand.
    """
    b = _sinc_coefficient(temperature_c, crystal, pump)
    phi = collinear_mismatch(signal_um, temperature_c, crystal, pump)
    q_ring = ring_wavevector(signal_um, temperature_c, crystal, pump) or 0.0
    width = pump_spectral_width(pump)
    if q_extent is None:
        q_extent = 4 * max(q_ring, math.sqrt(math.pi / b), width)
    half = 4 * max(q_ring, width)
    du = 2 * half / n_quad
    u = -half + du * (np.arange(n_quad) + 0.5)
    ux, uy = np.meshgrid(u, u, indexing="ij")
    pump2 = pump_angular_spectrum(np.hypot(ux, uy), pump) ** 2

    edge = np.zeros_like(pump2, dtype=bool)
    edge[0, :] = edge[-1, :] = edge[:, 0] = edge[:, -1] = True
    if pump2[edge].max() > 1e-3 * pump2.max():
        log.warning("far-field quadrature domain too small: boundary weight %.3g", pump2[edge].max())

    qs = np.linspace(0.0, q_extent, n_radial)
    out = np.empty(n_radial)
    for j, q in enumerate(qs):
        # q_s − q_i = 2q_s − u
        d2 = (2 * q - ux) ** 2 + uy**2
        out[j] = np.sum(pump2 * sinc(b * d2 + phi) ** 2) * du * du
    if normalize:
        out = out / out.max()
    return IntensityProfile(FAR, qs, out, qs[1] - qs[0], geometry="radial")


def farfield_image(profile: IntensityProfile, size: int, extent: float | None = None) -> np.ndarray:
    """Revolve a radial profile into a ``size``×``size`` image.

    Pixel centres span [−extent, extent] on both axes (default: the largest
    extent whose diagonal the profile covers).
    """
    r_max = float(profile.coords[-1])
    if extent is None:
        extent = r_max / math.sqrt(2)
    if extent * math.sqrt(2) > r_max * (1 + 1e-12):
        raise DomainError(
            f"radial profile reaches {r_max:.6g} but the image diagonal needs {extent * math.sqrt(2):.6g}"
        )
    axis = np.linspace(-extent, extent, size)
    r = np.hypot(axis[:, None], axis[None, :])
    return np.interp(r, profile.coords, profile.values)


def coincidence_slice(
    signal_um: float,
    idler_um: float,
    temperature_c: float,
    crystal: CrystalConfig,
    pump: PumpBeam,
    grid: TransverseGrid,
    tol_nm: float = 1.0,
) -> np.ndarray:
    """Normalized coincidence map C[j, k] = |Φ(q_sx = q_j, q_ix = q_k)|² with y = 0.

    ``idler_um`` must match the energy-conserving partner of ``signal_um``
    within ``tol_nm``.
    """
    partner = idler_wavelength(signal_um, pump)
    if abs(partner - idler_um) * 1e3 > tol_nm:
        raise DomainError(
            f"idler {idler_um * 1e3:.3f} nm is not the energy-conserving partner of signal "
            f"{signal_um * 1e3:.3f} nm ({partner * 1e3:.3f} nm for pump {pump.wavelength_um * 1e3:.3f} nm)"
        )
    c = np.abs(biphoton_matrix(signal_um, temperature_c, crystal, pump, grid).values) ** 2
    return c / c.max()


def _odd_axis(n: int, step: float) -> np.ndarray:
    return (np.arange(2 * (n // 2) + 1) - n // 2) * step


def marginals_2d(
    signal_um: float,
    temperature_c: float,
    crystal: CrystalConfig,
    pump: PumpBeam,
    n: int = 512,
    u_max: float = 0.4,
) -> tuple[IntensityProfile, IntensityProfile]:
    """Exact two-dimensional near- and far-field single-photon marginals.

    Writing Φ = E(q_s + q_i)·G(q_s − q_i) with radial E and G gives

        I_FF(q_s) = (|E|² ⊛ |G|²)(2q_s)
        I_NF(r_s) = ¼·(|Ẽ|² ⊛ |G̃|²)(r_s)

    where ~ is the unitary 2-D transform. Both convolutions are evaluated on
    an odd (n+1)² grid covering |u| ≤ ``u_max`` and its conjugate.

    Returns
    -------
    (near, far) : tuple of IntensityProfile
        Plane profiles on square grids. Their totals agree up to the sinc
        tails cut off beyond ``u_max`` (about 0.2 % in the ring regime).
    """
    b = _sinc_coefficient(temperature_c, crystal, pump)
    phi = collinear_mismatch(signal_um, temperature_c, crystal, pump)
    du = u_max / (n // 2)
    u = _odd_axis(n, du)
    m = u.size
    r2 = u[:, None] ** 2 + u[None, :] ** 2
    e = pump_angular_spectrum(np.sqrt(r2), pump)
    g = sinc(b * r2 + phi)

    far = fftconvolve(e**2, g**2, mode="same") * du * du

    # unitary transform: f~(y) = (1/2π) Σ f(u) exp(i u·y) du²
    scale = du * du * m * m / (2 * np.pi)
    e_t = np.fft.fftshift(np.fft.ifft2(np.fft.ifftshift(e))) * scale
    g_t = np.fft.fftshift(np.fft.ifft2(np.fft.ifftshift(g))) * scale
    dy = 2 * np.pi / (m * du)
    y = _odd_axis(n, dy)
    near = 0.25 * fftconvolve(np.abs(e_t) ** 2, np.abs(g_t) ** 2, mode="same") * dy * dy

    ff = IntensityProfile(FAR, u / 2, np.clip(far, 0, None), du / 2, geometry="plane")
    nf = IntensityProfile(NEAR, y, np.clip(near, 0, None), dy, geometry="plane")
    return nf, ff


def radial_cut(profile: IntensityProfile) -> IntensityProfile:
    """Non-negative half of the y = 0 row of a plane profile, as a radial profile."""
    if profile.geometry != "plane":
        raise ValueError("radial_cut needs a plane profile")
    mid = profile.coords.size // 2
    return IntensityProfile(
        profile.domain, profile.coords[mid:], profile.values[mid:, mid], profile.cell, geometry="radial"
    )
