"""Collinear phase mismatch, tuning curves, emission angles and spectra.

The mismatch is the dimensionless sinc argument

    φ(λ_s, T) = (L/2)·[k_p(λ_p) − k_s(λ_s) − k_i(λ_i) − k_m(T)]

with λ_i fixed by energy conservation. The phase-matching function is
sinc(x) = sin(x)/x throughout (unnormalized, first zeros at ±π).

Signal always denotes the shorter of the two down-converted wavelengths.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect

from .crystal import CrystalConfig, grating_wavevector, wavenumber
from .errors import AnalysisError, DomainError, EvanescentError, SolverError

log = logging.getLogger(__name__)

#: Pump wavelength (µm) calibrated so the default crystal is collinear and
#: degenerate near 84 °C; see README "Calibration".
DEFAULT_PUMP_UM = 0.77520

#: Wavelength-division-multiplexing channel pair used for the spatial scans (µm).
WDM_SIGNAL_UM = 1.54852
WDM_IDLER_UM = 1.55172

ROOT_XTOL_UM = 1e-10
TEMP_XTOL_C = 1e-6
ROOT_TOL_RAD = 1e-4


@dataclass(frozen=True)
class PumpSpec:
    """Monochromatic cw pump."""

    wavelength_um: float = DEFAULT_PUMP_UM

    def __post_init__(self):
        if not self.wavelength_um > 0:
            raise ValueError(f"pump wavelength must be positive, got {self.wavelength_um} µm")

    @property
    def degenerate_um(self) -> float:
        return 2 * self.wavelength_um


@dataclass(frozen=True)
class TuningPoint:
    temperature_c: float
    signal_um: float
    idler_um: float
    residual_rad: float


@dataclass(frozen=True)
class SpectralCurve:
    """Relative emission spectrum, normalized to a maximum of one unless requested raw."""

    wavelengths_um: np.ndarray
    intensity: np.ndarray
    temperature_c: float
    step_um: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        wl = np.asarray(self.wavelengths_um, dtype=float)
        if wl.ndim != 1 or wl.size != np.asarray(self.intensity).size:
            raise ValueError("wavelengths and intensity must be 1-D arrays of equal length")
        if wl.size > 1 and np.any(np.diff(wl) <= 0):
            raise ValueError("wavelengths must be strictly increasing")


def idler_wavelength(signal_um, pump: PumpSpec):
    """Energy-conserving partner wavelength: 1/λ_i = 1/λ_p − 1/λ_s."""
    ls = np.asarray(signal_um, dtype=float)
    if np.any(ls <= pump.wavelength_um):
        raise DomainError(
            f"signal wavelength {ls.min():.6g} µm must exceed the pump wavelength "
            f"{pump.wavelength_um} µm (idler frequency would be non-positive)"
        )
    li = 1.0 / (1.0 / pump.wavelength_um - 1.0 / ls)
    return float(li) if li.ndim == 0 else li


def collinear_mismatch(signal_um, temperature_c: float, crystal: CrystalConfig, pump: PumpSpec):
    """Collinear phase mismatch φ (rad) at signal wavelength(s) ``signal_um``."""
    sm = crystal.sellmeier
    li = idler_wavelength(signal_um, pump)
    dk = (
        wavenumber(pump.wavelength_um, temperature_c, sm)
        - wavenumber(signal_um, temperature_c, sm)
        - wavenumber(li, temperature_c, sm)
        - grating_wavevector(crystal, temperature_c)
    )
    phi = 0.5 * crystal.length_um * dk
    return float(phi) if np.ndim(phi) == 0 else phi


def _bracketed_root(fn, lo: float, hi: float, xtol: float, what: str) -> float:
    try:
        f_lo, f_hi = fn(lo), fn(hi)
    except DomainError as exc:
        raise SolverError(f"{what}: cannot evaluate bracket [{lo}, {hi}]: {exc}") from exc
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if np.sign(f_lo) == np.sign(f_hi):
        raise SolverError(
            f"{what}: no sign change on [{lo}, {hi}] (f(lo)={f_lo:.6g}, f(hi)={f_hi:.6g})"
        )
    return bisect(fn, lo, hi, xtol=xtol, maxiter=200)


def collinear_temperature(
    signal_um: float,
    crystal: CrystalConfig,
    pump: PumpSpec,
    bracket: tuple[float, float] = (60.0, 110.0),
) -> float:
    """Temperature at which emission at ``signal_um`` becomes collinear (φ = 0)."""
    return _bracketed_root(
        lambda t: collinear_mismatch(signal_um, t, crystal, pump),
        bracket[0],
        bracket[1],
        TEMP_XTOL_C,
        f"collinear temperature at {signal_um} µm",
    )


def degeneracy_temperature(
    crystal: CrystalConfig,
    pump: PumpSpec,
    bracket: tuple[float, float] = (60.0, 110.0),
) -> float:
    """Temperature of collinear degenerate emission, λ_s = λ_i = 2λ_p, by bisection."""
    return collinear_temperature(pump.degenerate_um, crystal, pump, bracket)


def tuning_curve(
    crystal: CrystalConfig,
    pump: PumpSpec,
    t_range: tuple[float, float] = (80.0, 90.0),
    t_step: float = 0.5,
    diagnostics: list[str] | None = None,
    search_step_um: float = 1e-3,
) -> list[TuningPoint]:
    """Collinear phase-matched (T, λ_s, λ_i) triples.

    Above degeneracy the signal branch is bracketed by walking from 2λ_p
    towards shorter wavelength in ``search_step_um`` increments until φ
    changes sign, then bisected; the idler follows from energy conservation
    (φ is symmetric under signal/idler exchange, so it is the other root).
    Temperatures without a collinear root are skipped and described in
    ``diagnostics``.
    """
    lo, hi = t_range
    if hi < lo:
        raise ValueError(f"inverted temperature range {t_range}")
    count = int(round((hi - lo) / t_step)) + 1 if hi > lo else 1
    lam_deg = pump.degenerate_um
    lam_floor = max(crystal.sellmeier.lambda_range_um[0], pump.wavelength_um * 1.05)
    points = []
    for i in range(count):
        t = lo + i * t_step
        phi_deg = collinear_mismatch(lam_deg, t, crystal, pump)
        if abs(phi_deg) < ROOT_TOL_RAD:
            points.append(TuningPoint(t, lam_deg, lam_deg, abs(phi_deg)))
            continue
        if phi_deg < 0:
            msg = f"T={t:g} °C: no collinear phase matching (φ at 2λ_p = {phi_deg:.4g} rad < 0)"
            log.info(msg)
            if diagnostics is not None:
                diagnostics.append(msg)
            continue

        def fn(lam, t=t):
            return collinear_mismatch(lam, t, crystal, pump)

        inner, outer = lam_deg, lam_deg - search_step_um
        while outer > lam_floor and fn(outer) > 0:
            inner, outer = outer, outer - search_step_um
        if outer <= lam_floor:
            msg = f"T={t:g} °C: signal branch not bracketed above {lam_floor:.4g} µm"
            log.warning(msg)
            if diagnostics is not None:
                diagnostics.append(msg)
            continue
        ls = bisect(fn, outer, inner, xtol=ROOT_XTOL_UM, maxiter=200)
        li = idler_wavelength(ls, pump)
        residual = max(abs(fn(ls)), abs(fn(li)))
        points.append(TuningPoint(t, ls, li, residual))
    return points


def ring_from_mismatch(phi: float, kp: float, length_um: float) -> float | None:
    """Ring wavevector |q| = sqrt(−φ·k_p/L); ``None`` when φ > 0."""
    if phi > 0:
        return None
    return math.sqrt(-phi * kp / length_um)


def ring_wavevector(signal_um: float, temperature_c: float, crystal: CrystalConfig, pump: PumpSpec):
    """Transverse wavevector (rad/µm) of the emission ring, or ``None`` for central-spot emission.

    Zeroes the sinc argument of the biphoton amplitude for opposite transverse
    wavevectors q_s = −q_i = q.
    """
    phi = collinear_mismatch(signal_um, temperature_c, crystal, pump)
    kp = wavenumber(pump.wavelength_um, temperature_c, crystal.sellmeier)
    return ring_from_mismatch(phi, kp, crystal.length_um)


def emission_angle(signal_um: float, temperature_c: float, crystal: CrystalConfig, pump: PumpSpec) -> float:
    """Internal emission angle θ = arctan(|q|/k_z) in rad; zero for collinear emission."""
    q = ring_wavevector(signal_um, temperature_c, crystal, pump)
    if not q:
        return 0.0
    ks = wavenumber(signal_um, temperature_c, crystal.sellmeier)
    if q >= ks:
        raise EvanescentError(f"|q| = {q:.6g} rad/µm exceeds k_s = {ks:.6g} rad/µm")
    return math.atan(q / math.sqrt(ks * ks - q * q))


def sinc(x):
    """Unnormalized sinc, sin(x)/x with sinc(0) = 1."""
    return np.sinc(np.asarray(x) / np.pi)


def spectral_density(wavelength_um, temperature_c: float, crystal: CrystalConfig, pump: PumpSpec):
    """Collinear spectral density sinc²(φ), in [0, 1]."""
    s = sinc(collinear_mismatch(wavelength_um, temperature_c, crystal, pump)) ** 2
    return float(s) if np.ndim(s) == 0 else s


def spectral_curve(
    temperature_c: float,
    crystal: CrystalConfig,
    pump: PumpSpec,
    lambda_range_um: tuple[float, float] = (1.40, 1.75),
    step_um: float = 1e-5,
) -> SpectralCurve:
    """Sample sinc²(φ) on a uniform wavelength grid and normalize to max 1."""
    lo, hi = lambda_range_um
    n = int(round((hi - lo) / step_um)) + 1
    wl = lo + step_um * np.arange(n)
    s = spectral_density(wl, temperature_c, crystal, pump)
    peak = s.max()
    if peak <= 0:
        raise AnalysisError(f"spectrum at {temperature_c} °C vanishes on the requested range")
    return SpectralCurve(wl, s / peak, temperature_c, step_um)


def _crossing(x0, y0, x1, y1, level):
    return x0 + (level - y0) * (x1 - x0) / (y1 - y0)


def spectrum_fwhm(curve: SpectralCurve) -> list[float]:
    """Full width at half maximum (nm) of every lobe, in ascending wavelength.

    Lobes are the contiguous runs above half the global maximum; each lobe's
    width is then measured at half of its own peak, with linear interpolation
    between samples.
    """
    wl = np.asarray(curve.wavelengths_um, dtype=float)
    y = np.asarray(curve.intensity, dtype=float)
    if y.size < 2 or not np.any(y > 0):
        raise AnalysisError("empty or all-zero spectrum")
    if np.ptp(y) == 0:
        raise AnalysisError("flat spectrum has no half-maximum crossings")
    above = y >= 0.5 * y.max()
    if above.sum() < 2:
        raise AnalysisError("fewer than two samples above half maximum")
    if above[0] or above[-1]:
        raise AnalysisError("lobe extends past the sampled wavelength range")
    edges = np.flatnonzero(np.diff(above.astype(np.int8)))
    widths = []
    for start, stop in zip(edges[::2] + 1, edges[1::2] + 1):
        peak_idx = start + int(np.argmax(y[start:stop]))
        half = 0.5 * y[peak_idx]
        left = peak_idx
        while left > 0 and y[left - 1] >= half:
            left -= 1
        right = peak_idx
        while right < y.size - 1 and y[right + 1] >= half:
            right += 1
        if left == 0 or right == y.size - 1:
            raise AnalysisError("lobe extends past the sampled wavelength range")
        x_lo = _crossing(wl[left - 1], y[left - 1], wl[left], y[left], half)
        x_hi = _crossing(wl[right], y[right], wl[right + 1], y[right + 1], half)
        widths.append((x_hi - x_lo) * 1e3)
    return widths
