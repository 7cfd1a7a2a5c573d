"""Schmidt number of the transverse biphoton state.

Three routes:

* :func:`schmidt_from_intensities`: the coherence-based estimator from
  near- and far-field single-photon intensities,
  K ≈ (2π)^−d · [(∫I_NF)²/∫I_NF²] · [(∫I_FF)²/∫I_FF²];
* :func:`schmidt_svd`: singular values of the measure-weighted 1-D joint
  amplitude (brute-force oracle, one transverse axis);
* :func:`schmidt_svd_radial`: exact 2-D oracle for amplitudes of the form
  E(|q_s + q_i|)·G(|q_s − q_i|), decomposed into angular harmonics.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .crystal import CrystalConfig, wavenumber
from .errors import AnalysisError, SolverError, SPDCError
from .field import (
    BiphotonMatrix,
    FAR,
    NEAR,
    IntensityProfile,
    PumpBeam,
    TransverseGrid,
    biphoton_matrix,
    farfield_marginal,
    marginals_2d,
    nearfield_marginal,
    nearfield_matrix,
    pump_angular_spectrum,
)
from .phasematch import WDM_SIGNAL_UM, collinear_mismatch, ring_wavevector, sinc

log = logging.getLogger(__name__)

EPS_NUM = 1e-9
ESTIMATOR = "intensity-estimator"
SVD = "svd-oracle"
PER_AXIS = "per-axis"
FULL_2D = "full-2D"


@dataclass(frozen=True)
class SchmidtResult:
    K: float
    method: str
    dimensionality: str
    fingerprint: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.method or not self.dimensionality:
            raise ValueError("method and dimensionality tags are required")
        if not self.K >= 1 - EPS_NUM:
            raise SolverError(f"Schmidt number {self.K} below one ({self.method}, {self.dimensionality})")


def participation(profile: IntensityProfile) -> float:
    """(Σ I·μ)² / (Σ I²·μ), the effective support of one intensity profile."""
    w = profile.weights()
    v = np.asarray(profile.values, dtype=float)
    s1 = float(np.sum(v * w))
    s2 = float(np.sum(v * v * w))
    if s1 <= 0 or s2 <= 0:
        raise AnalysisError(f"{profile.domain}-field intensity has zero total")
    return s1 * s1 / s2


def schmidt_from_intensities(
    nf: IntensityProfile, ff: IntensityProfile, dim: int | None = None, fingerprint: dict | None = None
) -> SchmidtResult:
    """Schmidt number from near- and far-field intensity profiles."""
    if nf.domain != NEAR or ff.domain != FAR:
        raise AnalysisError(f"expected near/far profiles, got {nf.domain}/{ff.domain}")
    if nf.dim != ff.dim:
        raise AnalysisError(f"near-field is {nf.dim}-D but far-field is {ff.dim}-D")
    if dim is not None and dim != nf.dim:
        raise AnalysisError(f"requested dim={dim} but profiles are {nf.dim}-D")
    d = nf.dim
    k = participation(nf) * participation(ff) / (2 * np.pi) ** d
    return SchmidtResult(k, ESTIMATOR, PER_AXIS if d == 1 else FULL_2D, dict(fingerprint or {}))


def _k_from_singular_values(s: np.ndarray) -> float:
    p = s**2
    total = p.sum()
    if not total > 0:
        raise AnalysisError("joint amplitude is identically zero")
    p = p / total
    return float(1.0 / np.sum(p**2))


def schmidt_svd(phi: BiphotonMatrix, fingerprint: dict | None = None) -> SchmidtResult:
    """K = 1/Σp_n² from the singular values of Φ·Δq."""
    try:
        s = np.linalg.svd(phi.values * phi.grid.dq, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"singular value decomposition failed: {exc}") from exc
    fp = {"T_c": phi.temperature_c, "signal_um": phi.signal_um, "n": phi.grid.n, "q_max": phi.grid.q_max}
    fp.update(fingerprint or {})
    return SchmidtResult(_k_from_singular_values(s), SVD, PER_AXIS, fp)


def schmidt_svd_radial(
    pump_amp: Callable[[np.ndarray], np.ndarray],
    pm_amp: Callable[[np.ndarray], np.ndarray],
    rho_max: float,
    n_rho: int = 200,
    n_angle: int = 128,
) -> SchmidtResult:
    """Exact 2-D Schmidt number of Φ = E(|q_s + q_i|²)·G(|q_s − q_i|²).

    ``pump_amp`` and ``pm_amp`` take squared magnitudes. Φ depends only on
    |q_s|, |q_i| and their relative angle, so it separates into angular
    harmonics exp(il(θ_s − θ_i)); each harmonic's radial kernel is
    decomposed with the annular measure ρ·dρ.
    """
    d_rho = rho_max / n_rho
    rho = (np.arange(n_rho) + 0.5) * d_rho
    delta = np.arange(n_angle) * 2 * np.pi / n_angle
    a = rho[:, None, None]
    bb = rho[None, :, None]
    cos = np.cos(delta)[None, None, :]
    cross = 2 * a * bb * cos
    amp = pump_amp(a**2 + bb**2 + cross) * pm_amp(a**2 + bb**2 - cross)
    harmonics = np.fft.fft(amp, axis=2) / n_angle
    w = np.sqrt(rho * d_rho)
    s2 = []
    for l in range(n_angle):
        m = 2 * np.pi * harmonics[:, :, l] * w[:, None] * w[None, :]
        s2.append(np.linalg.svd(m, compute_uv=False) ** 2)
    s = np.sqrt(np.concatenate(s2))
    return SchmidtResult(_k_from_singular_values(s), SVD, FULL_2D, {"n_rho": n_rho, "n_angle": n_angle})


def double_gaussian_matrix(grid: TransverseGrid, sigma_plus: float, sigma_minus: float) -> BiphotonMatrix:
    """exp(−(q_s+q_i)²/(4σ₊²) − (q_s−q_i)²/(4σ₋²)) on ``grid``; the canonical test field."""
    q = grid.q
    qs, qi = q[:, None], q[None, :]
    v = np.exp(-((qs + qi) ** 2) / (4 * sigma_plus**2) - (qs - qi) ** 2 / (4 * sigma_minus**2))
    return BiphotonMatrix(v.astype(complex), grid, float("nan"), float("nan"), float("nan"))


def per_axis_estimate(phi: BiphotonMatrix) -> SchmidtResult:
    """Intensity estimator applied to the 1-D marginals of Φ and of its near-field transform."""
    psi = nearfield_matrix(phi)
    fp = {"T_c": phi.temperature_c, "signal_um": phi.signal_um, "n": phi.grid.n, "q_max": phi.grid.q_max}
    return schmidt_from_intensities(nearfield_marginal(psi), farfield_marginal(phi), 1, fp)


def default_grid(
    crystal: CrystalConfig,
    pump: PumpBeam,
    signal_um: float = WDM_SIGNAL_UM,
    t_range: tuple[float, float] = (80.0, 90.0),
    n: int = 512,
    t_step: float = 0.5,
) -> TransverseGrid:
    """Grid reaching four times the largest ring wavevector over ``t_range``.

    Falls back to the first-zero scale of the collinear sinc when no
    temperature in the range has a ring.
    """
    lo, hi = t_range
    temps = np.linspace(lo, hi, max(2, int(round((hi - lo) / t_step)) + 1))
    rings = [ring_wavevector(signal_um, t, crystal, pump) or 0.0 for t in temps]
    q_ring = max(rings)
    if q_ring == 0.0:
        kp = wavenumber(pump.wavelength_um, lo, crystal.sellmeier)
        q_ring = math.sqrt(math.pi * kp / crystal.length_um) / 2
    return TransverseGrid(n, 4 * q_ring)


@dataclass(frozen=True)
class SweepRow:
    temperature_c: float
    k_per_axis: float
    k_full2d: float
    k_svd_per_axis: float
    error: str | None = None


def schmidt_at(
    temperature_c: float,
    crystal: CrystalConfig,
    pump: PumpBeam,
    grid: TransverseGrid,
    signal_um: float = WDM_SIGNAL_UM,
) -> SweepRow:
    """Per-axis estimate, per-axis SVD and full-2D value at one temperature.

    The full-2D value is the square of the per-axis estimate, treating the
    rotationally symmetric state as two independent, identical transverse
    axes. :func:`schmidt_2d_marginals` gives the estimator on the exact 2-D
    marginals instead.
    """
    phi = biphoton_matrix(signal_um, temperature_c, crystal, pump, grid)
    k_axis = per_axis_estimate(phi).K
    k_svd = schmidt_svd(phi).K
    return SweepRow(temperature_c, k_axis, k_axis * k_axis, k_svd)


def schmidt_2d_marginals(
    temperature_c: float,
    crystal: CrystalConfig,
    pump: PumpBeam,
    grid: TransverseGrid,
    signal_um: float = WDM_SIGNAL_UM,
) -> SchmidtResult:
    """Intensity estimator on the exact 2-D single-photon marginals.

    The marginals are built on an (N+1)² grid spanning |q_s − q_i| ≤ 2·q_max.
    This is what a 2-D near/far-field scan of the state measures, so it is the
    reference for analysing simulated scans.
    """
    nf, ff = marginals_2d(signal_um, temperature_c, crystal, pump, grid.n, 2 * grid.q_max)
    fp = {"T_c": temperature_c, "signal_um": signal_um, "n": grid.n, "q_max": grid.q_max}
    return schmidt_from_intensities(nf, ff, 2, fp)


def schmidt_sweep(
    crystal: CrystalConfig,
    pump: PumpBeam,
    grid: TransverseGrid,
    t_range: tuple[float, float] = (80.0, 90.0),
    t_step: float = 0.5,
    signal_um: float = WDM_SIGNAL_UM,
) -> list[SweepRow]:
    """Schmidt number versus crystal temperature at a fixed wavelength pair.

    A failure at one temperature is recorded in that row's ``error`` and the
    sweep continues.
    """
    lo, hi = t_range
    if hi < lo:
        raise ValueError(f"inverted temperature range {t_range}")
    count = int(round((hi - lo) / t_step)) + 1 if hi > lo else 1
    rows = []
    for i in range(count):
        t = lo + i * t_step
        try:
            rows.append(schmidt_at(t, crystal, pump, grid, signal_um))
        except SPDCError as exc:
            log.warning("Schmidt number at %g °C failed: %s", t, exc)
            nan = float("nan")
            rows.append(SweepRow(t, nan, nan, nan, str(exc)))
    return rows


def sinc_field_amplitudes(
    signal_um: float, temperature_c: float, crystal: CrystalConfig, pump: PumpBeam
) -> tuple[Callable, Callable]:
    """Pump and phase-matching amplitudes as functions of squared wavevector, for the radial oracle."""
    kp = wavenumber(pump.wavelength_um, temperature_c, crystal.sellmeier)
    b = crystal.length_um / (4 * kp)
    phi = collinear_mismatch(signal_um, temperature_c, crystal, pump)
    return (
        lambda s2: pump_angular_spectrum(np.sqrt(s2), pump),
        lambda d2: sinc(b * d2 + phi),
    )
