"""Schmidt number and its counting uncertainty from measured near/far-field scans."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .crystal import CrystalConfig, wavenumber
from .errors import AnalysisError
from .field import FAR, NEAR, IntensityProfile
from .instrument import DetectionGeometry
from .io import FF_TAG, NF_TAG, MeasuredScan, axis_steps
from .schmidt import SchmidtResult, schmidt_from_intensities


@dataclass(frozen=True)
class ScanAnalysis:
    result: SchmidtResult
    sigma_K: float
    participation_nf: float
    participation_ff: float

    def to_dict(self) -> dict:
        return {
            "K": self.result.K,
            "sigma_K": self.sigma_K,
            "method": self.result.method,
            "dimensionality": self.result.dimensionality,
            "participation_nf": self.participation_nf,
            "participation_ff": self.participation_ff,
            "fingerprint": self.result.fingerprint,
        }


def physical_profile(
    scan: MeasuredScan,
    geom: DetectionGeometry,
    crystal: CrystalConfig,
    wavelength_um: float,
    background_cps: float = 0.0,
) -> tuple[IntensityProfile, np.ndarray]:
    """Plane profile in physical coordinates plus the raw counts behind it.

    Near field: r = x/M_NF. Far field: q = k·x/(M_FF·f1) with k at
    ``wavelength_um`` and the scan temperature. A constant background rate is
    subtracted and the result clipped at zero.
    """
    dx, dy = axis_steps(scan)
    x = np.asarray(scan.x_um, dtype=float)
    y = np.asarray(scan.y_um, dtype=float)
    if scan.detector_coordinates:
        if scan.domain == NF_TAG:
            factor = 1.0 / geom.m_nf
        else:
            if scan.temperature_c is None:
                raise AnalysisError("far-field scan in detector coordinates needs T_c to convert to wavevector")
            k = wavenumber(wavelength_um, scan.temperature_c, crystal.sellmeier)
            factor = k / (geom.m_ff * geom.f1_um)
        x, y, dx, dy = x * factor, y * factor, dx * factor, dy * factor
    counts = np.asarray(scan.counts, dtype=float)
    signal = np.clip(counts - background_cps * scan.dwell_s, 0, None)
    if not signal.sum() > 0:
        raise AnalysisError(f"{scan.domain} scan has zero total counts")
    domain = NEAR if scan.domain == NF_TAG else FAR
    return IntensityProfile(domain, x, signal, dx, "plane", y, dy), counts


def _participation_with_error(profile: IntensityProfile, variance: np.ndarray) -> tuple[float, float]:
    """P = μ·S1²/S2 and its first-order standard error for independent samples."""
    mu = profile.cell * profile.cell_y
    v = np.asarray(profile.values, dtype=float)
    s1 = v.sum()
    s2 = float(np.sum(v * v))
    p = mu * s1 * s1 / s2
    grad = mu * (2 * s1 / s2 - 2 * s1 * s1 * v / s2**2)
    return p, math.sqrt(float(np.sum(grad**2 * variance)))


def analyze_scan(
    nf: MeasuredScan,
    ff: MeasuredScan,
    geom: DetectionGeometry,
    crystal: CrystalConfig,
    wavelength_um: float,
    background_cps: float = 0.0,
) -> ScanAnalysis:
    """Schmidt number from a near-field and a far-field singles scan.

    The uncertainty propagates Poisson variance (σ² = raw counts per sample)
    to first order through both participation ratios.
    """
    if nf.domain != NF_TAG or ff.domain != FF_TAG:
        raise AnalysisError(f"expected NF and FF scans, got {nf.domain} and {ff.domain}")
    nf_prof, nf_counts = physical_profile(nf, geom, crystal, wavelength_um, background_cps)
    ff_prof, ff_counts = physical_profile(ff, geom, crystal, wavelength_um, background_cps)
    fp = {"T_c": ff.temperature_c, "wavelength_um": wavelength_um, "background_cps": background_cps}
    result = schmidt_from_intensities(nf_prof, ff_prof, 2, fp)
    p_nf, e_nf = _participation_with_error(nf_prof, nf_counts)
    p_ff, e_ff = _participation_with_error(ff_prof, ff_counts)
    sigma = result.K * math.hypot(e_nf / p_nf, e_ff / p_ff)
    return ScanAnalysis(result, sigma, p_nf, p_ff)
