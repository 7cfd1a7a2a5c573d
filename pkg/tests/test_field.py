import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import curve_fit
from scipy.signal import argrelmax

from ppln_spdc.errors import DomainError
from ppln_spdc.field import (
    FAR,
    NEAR,
    BiphotonMatrix,
    IntensityProfile,
    PumpBeam,
    TransverseGrid,
    _sinc_coefficient,
    biphoton_matrix,
    coincidence_slice,
    farfield_image,
    farfield_marginal,
    farfield_radial_profile,
    marginal_intensity,
    marginals_2d,
    nearfield_marginal,
    nearfield_matrix,
    pump_angular_spectrum,
)
from ppln_spdc.phasematch import (
    collinear_mismatch,
    collinear_temperature,
    degeneracy_temperature,
    idler_wavelength,
    ring_wavevector,
    sinc,
)

SIGNAL = 1.54852


def test_pump_spectrum_values(pump):
    assert pump_angular_spectrum(0.0, pump) == 1.0
    assert pump_angular_spectrum(2 / pump.waist_um, pump) == pytest.approx(math.exp(-1), rel=1e-15)


def test_pump_spectrum_integral_matches_closed_form(pump):
    w = pump.waist_um
    line, _ = quad(lambda q: pump_angular_spectrum(q, pump) ** 2, -np.inf, np.inf, epsabs=0, epsrel=1e-12)
    assert line == pytest.approx(math.sqrt(2 * math.pi) / w, rel=1e-6)
    plane, _ = quad(lambda q: 2 * math.pi * q * pump_angular_spectrum(q, pump) ** 2, 0, np.inf, epsabs=0, epsrel=1e-12)
    assert plane == pytest.approx(2 * math.pi / w**2, rel=1e-6)


@pytest.mark.parametrize("kw", [{"n": 16}, {"n": 100}, {"q_max": 0.0}])
def test_grid_invariants(kw):
    with pytest.raises(ValueError):
        TransverseGrid(**kw)


def test_grid_is_symmetric():
    g = TransverseGrid(64, 0.3)
    assert np.allclose(g.q, -g.q[::-1], rtol=0, atol=1e-15)
    assert g.dq == pytest.approx(0.6 / 63)


def test_pump_waist_positive():
    with pytest.raises(ValueError):
        PumpBeam(waist_um=0.0)


def test_matrix_swap_symmetry_at_degeneracy(crystal, pump, grid):
    phi = biphoton_matrix(pump.degenerate_um, 82.0, crystal, pump, grid)
    assert np.array_equal(phi.values, phi.values.T)
    assert phi.idler_um == pytest.approx(phi.signal_um, rel=1e-15)


def _antidiagonal(values):
    return np.abs(np.fliplr(values).diagonal())


def test_antidiagonal_peak_follows_ring(crystal, pump, grid):
    q = grid.q
    t_deg = degeneracy_temperature(crystal, pump)
    at_deg = _antidiagonal(biphoton_matrix(pump.degenerate_um, t_deg, crystal, pump, grid).values)
    assert abs(q[np.argmax(at_deg)]) <= grid.dq
    ring = ring_wavevector(SIGNAL, 80.0, crystal, pump)
    at80 = _antidiagonal(biphoton_matrix(SIGNAL, 80.0, crystal, pump, grid).values)
    assert abs(abs(q[np.argmax(at80)]) - ring) <= grid.dq


def test_plane_wave_pump_is_anticorrelated(crystal, grid):
    wide = PumpBeam(waist_um=2000.0)
    intensity = np.abs(biphoton_matrix(SIGNAL, 80.0, crystal, wide, grid).values) ** 2
    q = grid.q
    off = np.abs(q[:, None] + q[None, :]) > grid.dq * 1.0001
    assert intensity[off].sum() / intensity.sum() < 0.05


def test_nearfield_parseval(crystal, pump, grid):
    for t in (80.0, 84.0, 88.0):
        phi = biphoton_matrix(SIGNAL, t, crystal, pump, grid)
        psi = nearfield_matrix(phi)
        far = np.sum(np.abs(phi.values) ** 2) * grid.dq**2
        near = np.sum(np.abs(psi.values) ** 2) * psi.dx**2
        assert near == pytest.approx(far, rel=1e-6)


def _gauss(x, a, s):
    return a * np.exp(-(x**2) / (2 * s**2))


def test_gaussian_transform_pair_widths():
    grid = TransverseGrid(256, 0.5)
    s_q = 0.05
    q = grid.q
    values = np.exp(-(q[:, None] ** 2 + q[None, :] ** 2) / (2 * s_q**2)).astype(complex)
    psi = nearfield_matrix(BiphotonMatrix(values, grid, math.nan, math.nan, math.nan))
    mid = grid.n // 2
    row = np.abs(psi.values[:, mid])
    (_, s_x), _ = curve_fit(_gauss, psi.x, row, p0=(row.max(), 10.0))
    assert abs(s_x) * s_q == pytest.approx(1.0, rel=1e-3)
    # separable in, separable out
    outer = np.outer(psi.values[:, mid], psi.values[mid, :]) / psi.values[mid, mid]
    assert np.allclose(outer, psi.values, atol=1e-10 * np.abs(psi.values).max())


def test_nearfield_swap(crystal, pump, grid):
    phi = biphoton_matrix(SIGNAL, 81.0, crystal, pump, grid)
    swapped = BiphotonMatrix(phi.values.T.copy(), grid, phi.signal_um, phi.idler_um, phi.temperature_c)
    assert np.allclose(nearfield_matrix(swapped).values, nearfield_matrix(phi).values.T, rtol=0, atol=1e-14)


def test_marginal_of_single_entry():
    m = np.zeros((8, 8), dtype=complex)
    m[3, 5] = 2.0
    prof = marginal_intensity(m, np.arange(8.0), 0.5, FAR)
    assert np.flatnonzero(prof.values).tolist() == [3]
    assert prof.values[3] == pytest.approx(4.0 * 0.5)
    assert prof.domain == FAR


def test_marginal_totals_agree(crystal, pump, grid):
    phi = biphoton_matrix(SIGNAL, 82.0, crystal, pump, grid)
    ff = farfield_marginal(phi)
    nf = nearfield_marginal(nearfield_matrix(phi))
    assert nf.domain == NEAR
    assert nf.total() == pytest.approx(ff.total(), rel=1e-6)


def test_plane_wave_marginal_peaks_at_ring(crystal, grid):
    wide = PumpBeam(waist_um=2000.0)
    ff = farfield_marginal(biphoton_matrix(SIGNAL, 80.0, crystal, wide, grid)).values
    ring = ring_wavevector(SIGNAL, 80.0, crystal, wide)
    q = grid.q
    half = grid.n // 2
    assert abs(q[half + np.argmax(ff[half:])] - ring) <= grid.dq
    assert abs(q[np.argmax(ff[:half])] + ring) <= grid.dq


def test_marginal_peak_stable_under_refinement(crystal, pump, grid):
    coarse = TransverseGrid(grid.n // 2, grid.q_max)
    peaks = []
    for g in (coarse, grid):
        ff = farfield_marginal(biphoton_matrix(SIGNAL, 80.0, crystal, pump, g)).values
        peaks.append(abs(g.q[np.argmax(ff)]))
    assert abs(peaks[0] - peaks[1]) < coarse.dq


def test_radial_profile_morphology(crystal, pump):
    spot = farfield_radial_profile(SIGNAL, 85.0, crystal, pump)
    assert np.argmax(spot.values) == 0
    ring = farfield_radial_profile(SIGNAL, 80.0, crystal, pump)
    q_ring = ring_wavevector(SIGNAL, 80.0, crystal, pump)
    peak = ring.coords[np.argmax(ring.values)]
    # ring blurred by the pump angular spectrum, half-width 1/(2w)
    assert abs(peak - q_ring) < 1 / (2 * pump.waist_um)
    assert ring.values[0] < 0.5
    multi = farfield_radial_profile(SIGNAL, 88.0, crystal, pump)
    padded = np.concatenate([[-1.0], multi.values])
    assert len(argrelmax(padded)[0]) >= 2


def test_radial_profile_monotone_at_collinear(crystal, pump):
    t = collinear_temperature(SIGNAL, crystal, pump)
    prof = farfield_radial_profile(SIGNAL, t, crystal, pump, n_radial=400)
    b = _sinc_coefficient(t, crystal, pump)
    first_zero = math.sqrt(math.pi / b) / 2
    inside = prof.values[prof.coords <= first_zero]
    assert np.all(np.diff(inside) <= 1e-12)


def test_image_of_constant_profile_is_constant():
    prof = IntensityProfile(FAR, np.linspace(0, 1, 50), np.full(50, 0.7), 1 / 49, "radial")
    img = farfield_image(prof, 31)
    assert np.all(img == 0.7)


def test_image_max_and_ring_radius():
    r = np.linspace(0, 20, 401)
    vals = np.exp(-((r - 8.0) ** 2) / 2)
    prof = IntensityProfile(FAR, r, vals, r[1] - r[0], "radial")
    img = farfield_image(prof, 25, extent=12.0)
    axis = np.linspace(-12, 12, 25)
    assert img.max() <= vals.max()
    centre = 12
    row = img[centre]
    radius = abs(axis[np.argmax(row)])
    assert abs(radius - r[np.argmax(vals)]) <= axis[1] - axis[0]
    spot = IntensityProfile(FAR, r, np.exp(-(r**2)), r[1] - r[0], "radial")
    assert farfield_image(spot, 25, extent=12.0).max() == spot.values.max()


def test_image_requires_profile_covering_diagonal():
    prof = IntensityProfile(FAR, np.linspace(0, 1, 10), np.ones(10), 1 / 9, "radial")
    with pytest.raises(DomainError):
        farfield_image(prof, 11, extent=1.0)


def test_coincidences(crystal, pump, grid):
    q = grid.q
    idler = idler_wavelength(SIGNAL, pump)
    blob = coincidence_slice(SIGNAL, idler, 85.0, crystal, pump, grid)
    j, k = np.unravel_index(np.argmax(blob), blob.shape)
    assert abs(q[j]) <= grid.dq and abs(q[k]) <= grid.dq
    assert blob.max() == 1.0
    for t in (80.0, 81.0, 82.0, 83.0):
        c = coincidence_slice(SIGNAL, idler, t, crystal, pump, grid)
        j, k = np.unravel_index(np.argmax(c), c.shape)
        assert abs(q[j] + q[k]) <= grid.dq
        assert abs(q[j]) > 2 * grid.dq


def test_coincidence_symmetry_at_degeneracy(crystal, pump, grid):
    lam = pump.degenerate_um
    c = coincidence_slice(lam, lam, 82.0, crystal, pump, grid)
    assert np.array_equal(c, c.T)


def test_coincidence_rejects_inconsistent_pair(crystal, pump, grid):
    with pytest.raises(DomainError):
        coincidence_slice(SIGNAL, 1.5600, 82.0, crystal, pump, grid)


def _exact_2d_total(t, crystal, pump):
    # ¼·∫|E|² d²u · ∫|G|² d²d with d²d = π·d(|d|²); sinc² tail past s_end ≈ 1/(2b²s_end)
    b = _sinc_coefficient(t, crystal, pump)
    phi = collinear_mismatch(SIGNAL, t, crystal, pump)
    edges = np.arange(0.0, 2.0 + 1e-12, 0.005)
    g = sum(quad(lambda s: sinc(b * s + phi) ** 2, lo, hi, limit=200)[0] for lo, hi in zip(edges[:-1], edges[1:]))
    g += 1 / (2 * b * b * edges[-1])
    return 0.25 * (2 * math.pi / pump.waist_um**2) * math.pi * g


def test_2d_marginal_totals(crystal, pump):
    nf, ff = marginals_2d(SIGNAL, 82.0, crystal, pump, n=256, u_max=0.36)
    assert nf.values.shape == ff.values.shape == (257, 257)
    # both transforms lose the same sinc tails beyond u_max
    assert nf.total() == pytest.approx(ff.total(), rel=1e-3)
    exact = _exact_2d_total(82.0, crystal, pump)
    assert nf.total() == pytest.approx(exact, rel=5e-3)
    assert ff.total() == pytest.approx(exact, rel=5e-3)


def test_profile_validation():
    with pytest.raises(ValueError):
        IntensityProfile("middle", np.arange(3.0), np.ones(3), 1.0)
    with pytest.raises(ValueError):
        IntensityProfile(FAR, np.array([0.0, 2.0, 1.0]), np.ones(3), 1.0)
    with pytest.raises(ValueError):
        IntensityProfile(FAR, np.arange(3.0), -np.ones(3), 1.0)
    with pytest.raises(ValueError):
        IntensityProfile(FAR, np.arange(3.0), np.ones(3), 0.0)


def test_rectangular_plane_measure():
    prof = IntensityProfile(NEAR, np.arange(3.0), np.ones((3, 5)), 2.0, "plane", np.arange(5.0), 0.5)
    assert prof.total() == pytest.approx(15.0)
