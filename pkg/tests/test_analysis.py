import math

import numpy as np
import pytest

from ppln_spdc.analysis import analyze_scan, physical_profile
from ppln_spdc.crystal import CrystalConfig, wavenumber
from ppln_spdc.errors import AnalysisError
from ppln_spdc.instrument import DetectionGeometry
from ppln_spdc.io import MeasuredScan

GEOM = DetectionGeometry()
CRYSTAL = CrystalConfig()
LAM = 1.55172


def _scan(domain, counts, step=10.0, t_c=84.0, detector=True):
    n, m = np.shape(counts)
    x = (np.arange(n) - n // 2) * step
    y = (np.arange(m) - m // 2) * step
    return MeasuredScan(domain, x, y, np.asarray(counts, dtype=float), 1.0, detector, t_c)


def test_uniform_scans_follow_the_discrete_formula():
    n, step = 21, 10.0
    nf = _scan("NF", np.full((n, n), 50.0), step)
    ff = _scan("FF", np.full((n, n), 80.0), step)
    mu_r = (step / GEOM.m_nf) ** 2
    mu_q = (step * wavenumber(LAM, 84.0) / (GEOM.m_ff * GEOM.f1_um)) ** 2
    expected = (n * n * mu_r) * (n * n * mu_q) / (2 * math.pi) ** 2
    res = analyze_scan(nf, ff, GEOM, CRYSTAL, LAM)
    assert res.result.K == pytest.approx(expected, rel=1e-12)
    assert res.result.dimensionality == "full-2D"


def test_rectangular_grid_uses_cell_area():
    nf = MeasuredScan("NF", np.arange(5) * 2.0, np.arange(3) * 7.0, np.ones((5, 3)), 1.0, False)
    ff = MeasuredScan("FF", np.arange(4) * 1.0, np.arange(6) * 0.5, np.ones((4, 6)), 1.0, False)
    res = analyze_scan(nf, ff, GEOM, CRYSTAL, LAM)
    assert res.result.K == pytest.approx((15 * 14.0) * (24 * 0.5) / (2 * math.pi) ** 2, rel=1e-12)


def test_physical_coordinates():
    nf = _scan("NF", np.ones((3, 3)), 7.5)
    prof, _ = physical_profile(nf, GEOM, CRYSTAL, LAM)
    assert prof.coords.tolist() == pytest.approx([-10.0, 0.0, 10.0])
    ff = _scan("FF", np.ones((3, 3)), 6.0, t_c=85.0)
    prof, _ = physical_profile(ff, GEOM, CRYSTAL, LAM)
    assert prof.cell == pytest.approx(6.0 * wavenumber(LAM, 85.0) / 6000.0, rel=1e-14)


def test_far_field_needs_temperature():
    ff = _scan("FF", np.ones((3, 3)), t_c=None)
    with pytest.raises(AnalysisError, match="T_c"):
        physical_profile(ff, GEOM, CRYSTAL, LAM)


def test_all_zero_scan_is_an_error():
    with pytest.raises(AnalysisError, match="zero"):
        analyze_scan(_scan("NF", np.zeros((5, 5))), _scan("FF", np.ones((5, 5))), GEOM, CRYSTAL, LAM)


def test_domain_tags_must_match_roles():
    a = _scan("NF", np.ones((3, 3)))
    with pytest.raises(AnalysisError):
        analyze_scan(a, a, GEOM, CRYSTAL, LAM)


def _gaussian_map(width, peak, n=21):
    x = np.arange(n) - n // 2
    return peak * np.exp(-(x[:, None] ** 2 + x[None, :] ** 2) / (2 * width**2))


def test_background_subtraction_recovers_clean_value():
    nf, ff = _gaussian_map(3.0, 1e4), _gaussian_map(2.0, 1e4)
    clean = analyze_scan(_scan("NF", nf), _scan("FF", ff), GEOM, CRYSTAL, LAM).result.K
    dirty = analyze_scan(_scan("NF", nf + 100), _scan("FF", ff + 100), GEOM, CRYSTAL, LAM, background_cps=100.0)
    assert dirty.result.K == pytest.approx(clean, rel=1e-12)
    plain = analyze_scan(_scan("NF", nf + 100), _scan("FF", ff + 100), GEOM, CRYSTAL, LAM).result.K
    assert plain > clean


def test_uncertainty_matches_monte_carlo():
    nf_mean, ff_mean = _gaussian_map(3.0, 400.0), _gaussian_map(2.0, 400.0)
    est = analyze_scan(_scan("NF", nf_mean), _scan("FF", ff_mean), GEOM, CRYSTAL, LAM)
    rng = np.random.Generator(np.random.Philox(5))
    ks = [
        analyze_scan(_scan("NF", rng.poisson(nf_mean)), _scan("FF", rng.poisson(ff_mean)), GEOM, CRYSTAL, LAM).result.K
        for _ in range(400)
    ]
    assert est.sigma_K == pytest.approx(np.std(ks), rel=0.15)
    assert est.sigma_K > 0
