"""What the apparatus records: detector coordinates, fiber and filter responses, scans, counting noise."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.ndimage import convolve1d

from .crystal import CrystalConfig, wavenumber
from .errors import DomainError, ResolutionError
from .field import (
    FAR,
    NEAR,
    IntensityProfile,
    PumpBeam,
    TransverseGrid,
    coincidence_slice,
    farfield_image,
    farfield_radial_profile,
    marginals_2d,
    radial_cut,
)
from .phasematch import SpectralCurve, WDM_IDLER_UM, WDM_SIGNAL_UM, idler_wavelength, spectral_density

#: Angular dispersion of the grating filter, nm of centre wavelength per mrad of rotation.
GRATING_DISPERSION_NM_PER_MRAD = 1.46
FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))


@dataclass(frozen=True)
class DetectionGeometry:
    f1_mm: float = 200.0
    m_ff: float = 0.03
    m_nf: float = 0.75
    mfd_um: float = 10.4
    quantum_efficiency: float = 0.8

    def __post_init__(self):
        for name in ("f1_mm", "m_ff", "m_nf", "mfd_um", "quantum_efficiency"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.quantum_efficiency > 1:
            raise ValueError("quantum_efficiency must not exceed 1")

    @property
    def f1_um(self) -> float:
        return self.f1_mm * 1e3


@dataclass(frozen=True)
class ScanProtocol:
    """Fiber raster: ``points`` per axis centred on the optical axis, ``step_um`` apart."""

    points: int = 21
    step_um: float = 10.0
    dwell_s: float = 1.0
    window_ps: float = 200.0
    dark_rate_hz: float = 100.0
    peak_singles_hz: float = 5e4
    peak_coincidence_hz: float = 2e3

    def __post_init__(self):
        if self.points < 1 or self.points % 2 == 0:
            raise ValueError(f"scan points per axis must be odd, got {self.points}")
        if not self.step_um > 0:
            raise ValueError("scan step must be positive")
        if not self.dwell_s > 0 or self.window_ps < 0 or self.dark_rate_hz < 0:
            raise ValueError("dwell must be positive; window and dark rate non-negative")
        if self.peak_singles_hz < 0 or self.peak_coincidence_hz < 0:
            raise ValueError("peak rates must be non-negative")

    @property
    def positions_um(self) -> np.ndarray:
        half = (self.points - 1) // 2
        return np.arange(-half, half + 1) * self.step_um


@dataclass(frozen=True)
class FilterSpec:
    center_nm: float
    fwhm_nm: float
    shape: str = "gaussian"

    def __post_init__(self):
        if not self.fwhm_nm > 0:
            raise ValueError("filter FWHM must be positive")
        if self.shape not in ("gaussian", "rectangular"):
            raise ValueError(f"unknown filter shape {self.shape!r}")


def q_to_detector_ff(q, wavelength_um: float, temperature_c: float, geom: DetectionGeometry, crystal: CrystalConfig | None = None):
    """Far-field detector position x = M_FF·f1·q/k (µm) for transverse wavevector q (rad/µm)."""
    sm = (crystal or CrystalConfig()).sellmeier
    k = wavenumber(wavelength_um, temperature_c, sm)
    qa = np.asarray(q, dtype=float)
    if np.any(np.abs(qa) >= k):
        raise DomainError(f"|q| = {np.abs(qa).max():.6g} rad/µm is evanescent (k = {k:.6g} rad/µm)")
    x = geom.m_ff * geom.f1_um * qa / k
    return float(x) if x.ndim == 0 else x


def detector_to_q_ff(x, wavelength_um: float, temperature_c: float, geom: DetectionGeometry, crystal: CrystalConfig | None = None):
    """Inverse of :func:`q_to_detector_ff`."""
    sm = (crystal or CrystalConfig()).sellmeier
    k = wavenumber(wavelength_um, temperature_c, sm)
    q = np.asarray(x, dtype=float) * k / (geom.m_ff * geom.f1_um)
    return float(q) if q.ndim == 0 else q


def r_to_detector_nf(r, geom: DetectionGeometry):
    return np.asarray(r, dtype=float) * geom.m_nf if np.ndim(r) else float(r) * geom.m_nf


def detector_to_r_nf(x, geom: DetectionGeometry):
    return np.asarray(x, dtype=float) / geom.m_nf if np.ndim(x) else float(x) / geom.m_nf


def _fiber_kernel(step_um: float, mfd_um: float) -> np.ndarray:
    # fiber-mode intensity exp(−2x²/(MFD/2)²): σ = MFD/4
    sigma = mfd_um / 4
    half = int(math.ceil(5 * sigma / step_um))
    x = np.arange(-half, half + 1) * step_um
    kern = np.exp(-0.5 * (x / sigma) ** 2)
    return kern / kern.sum()


def fiber_blur(profile: IntensityProfile, geom: DetectionGeometry) -> IntensityProfile:
    """Convolve a detector-plane intensity with the single-mode fiber's mode intensity.

    The kernel is normalized to unit sum and edges are reflected, so the
    total is preserved and a constant input stays constant.
    """
    if profile.geometry == "radial":
        raise ValueError("fiber_blur needs line or plane sampling, not radial")
    steps = (profile.cell, profile.cell_y) if profile.geometry == "plane" else (profile.cell,)
    if max(steps) > geom.mfd_um / 2:
        raise ResolutionError(f"sample step {max(steps)} µm is coarser than MFD/2 = {geom.mfd_um / 2} µm")
    out = np.asarray(profile.values, dtype=float)
    for axis, step in enumerate(steps):
        out = convolve1d(out, _fiber_kernel(step, geom.mfd_um), axis=axis, mode="reflect")
    return replace(profile, values=np.clip(out, 0, None))


def wdm_weight(wavelength_nm, filt: FilterSpec):
    """Filter transmission at ``wavelength_nm``."""
    d = np.asarray(wavelength_nm, dtype=float) - filt.center_nm
    if filt.shape == "gaussian":
        w = np.exp(-4 * math.log(2) * d**2 / filt.fwhm_nm**2)
    else:
        w = (np.abs(d) <= filt.fwhm_nm / 2).astype(float)
    return float(w) if w.ndim == 0 else w


def _detector_axis(protocol: ScanProtocol, geom: DetectionGeometry, pixel_um: float) -> np.ndarray:
    reach = protocol.positions_um[-1] + 3 * geom.mfd_um
    half = int(math.ceil(reach / pixel_um))
    return np.arange(-half, half + 1) * pixel_um


def _maybe_blur(domain, axis, image, pixel_um, geom, blur):
    if not blur:
        return image
    return fiber_blur(IntensityProfile(domain, axis, image, pixel_um, "plane"), geom).values


def _sample(image: np.ndarray, axis: np.ndarray, protocol: ScanProtocol) -> np.ndarray:
    pos = protocol.positions_um
    interp = RegularGridInterpolator((axis, axis), image)
    pts = np.stack(np.meshgrid(pos, pos, indexing="ij"), axis=-1)
    return interp(pts)


@dataclass(frozen=True)
class ScanMaps:
    """Simulated fiber-scan maps, normalized to max 1, with detector positions in µm.

    ``singles[a, b]`` is the idler rate at (x = positions[a], y = positions[b]);
    ``coincidences[a, b]`` is the rate at (x_i = positions[a], x_s = positions[b]).
    """

    positions_um: np.ndarray
    singles: np.ndarray
    coincidences: np.ndarray
    temperature_c: float
    plane: str


def simulate_far_field_scan(
    temperature_c: float,
    crystal: CrystalConfig,
    pump: PumpBeam,
    geom: DetectionGeometry,
    protocol: ScanProtocol,
    grid: TransverseGrid,
    channels: tuple[float, float] = (WDM_SIGNAL_UM, WDM_IDLER_UM),
    pixel_um: float = 1.0,
    blur: bool = True,
) -> ScanMaps:
    """Noise-free far-field singles (idler plane scan) and coincidence (x_i, x_s) maps.

    The field is evaluated at the signal channel wavelength; the idler
    detector coordinates use the energy-conserving idler wavelength.
    ``blur=False`` skips the fiber-mode convolution (ideal point detector).
    """
    signal_um, idler_um = channels
    lam_i = idler_wavelength(signal_um, pump)
    axis = _detector_axis(protocol, geom, pixel_um)
    sm = crystal.sellmeier
    k_i = wavenumber(lam_i, temperature_c, sm)
    k_s = wavenumber(signal_um, temperature_c, sm)
    to_q_i = k_i / (geom.m_ff * geom.f1_um)
    to_q_s = k_s / (geom.m_ff * geom.f1_um)

    q_reach = axis[-1] * math.sqrt(2) * to_q_i
    radial = farfield_radial_profile(signal_um, temperature_c, crystal, pump, n_radial=512, q_extent=q_reach)
    det_radial = IntensityProfile(FAR, radial.coords / to_q_i, radial.values, radial.cell / to_q_i, "radial")
    image = farfield_image(det_radial, axis.size, extent=axis[-1])
    blurred = _maybe_blur(FAR, axis, image, pixel_um, geom, blur)
    singles = _sample(blurred, axis, protocol)

    needed = axis[-1] * max(to_q_i, to_q_s)
    if needed > grid.q_max:
        grid = TransverseGrid(grid.n, needed * 1.05)
    c = coincidence_slice(signal_um, idler_um, temperature_c, crystal, pump, grid)
    q = grid.q
    # c[j, k]: signal at q_j, idler at q_k; resample to (x_i, x_s)
    interp = RegularGridInterpolator((q, q), c)
    xi, xs = np.meshgrid(axis, axis, indexing="ij")
    cmap = interp(np.stack([xs * to_q_s, xi * to_q_i], axis=-1))
    cblur = _maybe_blur(FAR, axis, cmap, pixel_um, geom, blur)
    coinc = _sample(cblur, axis, protocol)
    return ScanMaps(protocol.positions_um, singles / singles.max(), coinc / coinc.max(), temperature_c, FAR)


def simulate_near_field_scan(
    temperature_c: float,
    crystal: CrystalConfig,
    pump: PumpBeam,
    geom: DetectionGeometry,
    protocol: ScanProtocol,
    grid: TransverseGrid,
    channels: tuple[float, float] = (WDM_SIGNAL_UM, WDM_IDLER_UM),
    pixel_um: float = 1.0,
    blur: bool = True,
) -> ScanMaps:
    """Noise-free near-field singles map (crystal plane imaged with magnification M_NF).

    The coincidence map of this plane is not simulated and is returned as zeros.
    """
    signal_um = channels[0]
    axis = _detector_axis(protocol, geom, pixel_um)
    nf, _ = marginals_2d(signal_um, temperature_c, crystal, pump, grid.n, 2 * grid.q_max)
    cut = radial_cut(nf)
    reach = axis[-1] * math.sqrt(2) / geom.m_nf
    if cut.coords[-1] < reach:
        raise DomainError(f"near-field grid reaches {cut.coords[-1]:.1f} µm, scan needs {reach:.1f} µm")
    det_radial = IntensityProfile(NEAR, cut.coords * geom.m_nf, cut.values, cut.cell * geom.m_nf, "radial")
    image = farfield_image(det_radial, axis.size, extent=axis[-1])
    blurred = _maybe_blur(NEAR, axis, image, pixel_um, geom, blur)
    singles = _sample(blurred, axis, protocol)
    zeros = np.zeros_like(singles)
    return ScanMaps(protocol.positions_um, singles / singles.max(), zeros, temperature_c, NEAR)


def poisson_counts(rate_map, dwell_s: float, dark_rate_hz: float, seed: int) -> np.ndarray:
    """Independent Poisson draws with mean (rate + dark)·dwell.

    Uses a counter-based Philox stream, so the result depends only on ``seed``.
    """
    rates = np.asarray(rate_map, dtype=float)
    if np.any(rates < 0):
        raise ValueError("rates must be non-negative")
    rng = np.random.Generator(np.random.Philox(seed))
    return rng.poisson((rates + dark_rate_hz) * dwell_s)


def accidental_rate(singles_1_hz, singles_2_hz, window_ps: float):
    """Accidental coincidence rate s1·s2·τ (Hz)."""
    return singles_1_hz * singles_2_hz * window_ps * 1e-12


def grating_center_shift(rotation_mrad: float, dispersion_nm_per_mrad: float = GRATING_DISPERSION_NM_PER_MRAD) -> float:
    """Change of the selected centre wavelength (nm) for a grating rotation (mrad)."""
    return rotation_mrad * dispersion_nm_per_mrad


def instrument_convolve(wavelengths_nm: np.ndarray, density: np.ndarray, filt: FilterSpec) -> np.ndarray:
    """Convolve a uniformly sampled spectrum with the filter response (unit-area kernel)."""
    wl = np.asarray(wavelengths_nm, dtype=float)
    step = wl[1] - wl[0]
    if step > filt.fwhm_nm / 2:
        raise ResolutionError(f"sample step {step} nm exceeds half the filter FWHM {filt.fwhm_nm} nm")
    half = int(math.ceil(3 * filt.fwhm_nm / step))
    offsets = np.arange(-half, half + 1) * step
    kern = wdm_weight(offsets + filt.center_nm, filt)
    kern = kern / kern.sum()
    return convolve1d(np.asarray(density, dtype=float), kern, mode="constant")


def simulate_spectrum_scan(
    temperature_c: float,
    crystal: CrystalConfig,
    pump: PumpBeam,
    grating: FilterSpec,
    lambda_range_nm: tuple[float, float] = (1400.0, 1750.0),
    step_nm: float = 0.25,
    oversample: int = 10,
    normalize: bool = True,
) -> SpectralCurve:
    """Collinear spectrum as recorded through the grating filter, normalized to max 1.

    The theory density is evaluated ``oversample`` times finer than the
    requested bins, convolved with the filter response, then read at the bins.
    ``normalize=False`` keeps the convolved sinc² values.
    """
    if step_nm > grating.fwhm_nm / 2:
        raise ResolutionError(f"bin step {step_nm} nm exceeds half the grating FWHM {grating.fwhm_nm} nm")
    lo, hi = lambda_range_nm
    nbins = int(round((hi - lo) / step_nm)) + 1
    bins = lo + step_nm * np.arange(nbins)
    fine_step = step_nm / oversample
    fine = lo + fine_step * np.arange((nbins - 1) * oversample + 1)
    dens = spectral_density(fine * 1e-3, temperature_c, crystal, pump)
    conv = instrument_convolve(fine, dens, grating)[::oversample]
    if normalize:
        conv = conv / conv.max()
    return SpectralCurve(bins * 1e-3, conv, temperature_c, step_nm * 1e-3, {"filter_fwhm_nm": grating.fwhm_nm})
