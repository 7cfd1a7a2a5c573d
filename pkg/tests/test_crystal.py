import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import oracle_index
from ppln_spdc.crystal import (
    MGO_CLN,
    CrystalConfig,
    SellmeierSet,
    grating_wavevector,
    load_sellmeier,
    poling_period,
    refractive_index,
    wavenumber,
)
from ppln_spdc.errors import DomainError

# frozen from the standalone expression in conftest
N_1550_84 = 2.147853130807243
N_775_84 = 2.1882465336451626


def test_index_matches_standalone_expression():
    n = refractive_index(1.5501, 84.0)
    assert 2.0 < n < 2.3
    assert n == pytest.approx(oracle_index(1.5501, 84.0), rel=1e-14)
    assert n == pytest.approx(N_1550_84, rel=1e-14)


def test_normal_dispersion_between_pump_and_telecom():
    assert refractive_index(0.775, 84.0) == pytest.approx(N_775_84, rel=1e-14)
    assert refractive_index(0.775, 84.0) > refractive_index(1.5501, 84.0)


def test_index_is_deterministic():
    assert refractive_index(1.5501, 84.0) == refractive_index(1.5501, 84.0)


def test_index_vectorizes():
    lam = np.linspace(1.4, 1.7, 7)
    out = refractive_index(lam, 84.0)
    assert out.shape == lam.shape
    assert out[3] == refractive_index(float(lam[3]), 84.0)


@pytest.mark.parametrize(
    "lam, t, bound",
    [(0.3, 84.0, "lower bound 0.5"), (5.0, 84.0, "upper bound 4"), (1.55, 10.0, "lower bound 20"), (1.55, 250.0, "upper bound 200")],
)
def test_out_of_range_names_the_bound(lam, t, bound):
    with pytest.raises(DomainError, match=bound):
        refractive_index(lam, t)


def test_wavenumber_definition():
    sm = SellmeierSet("flat", {**MGO_CLN.coefficients}, (0.5, 4.0), (20.0, 200.0))
    assert wavenumber(1.5501, 84.0, sm) == pytest.approx(2 * math.pi * oracle_index(1.5501, 84.0) / 1.5501, rel=1e-14)


def test_wavenumber_of_index_two_at_one_micron():
    # a constant-index set: a1 = 4 and every dispersive term zero gives n = 2
    coeffs = {k: 0.0 for k in MGO_CLN.coefficients}
    coeffs.update(a1=4.0, a5=12.52, t0=24.5, t1=570.82)
    sm = SellmeierSet("n=2", coeffs, (0.5, 4.0), (20.0, 200.0))
    assert refractive_index(1.0, 50.0, sm) == 2.0
    assert wavenumber(1.0, 50.0, sm) == pytest.approx(4 * math.pi, rel=1e-15)


def test_wavenumber_decreases_with_wavelength():
    lam = np.linspace(1.45, 1.65, 401)
    assert np.all(np.diff(wavenumber(lam, 84.0)) < 0)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.7, 1.7), st.floats(20.0, 200.0))
def test_index_bounds_and_wavenumber_identity(lam, t):
    n = refractive_index(lam, t)
    assert 1 < n < 3
    assert wavenumber(lam, t) * lam / (2 * math.pi) == pytest.approx(n, rel=1e-14)


def test_index_is_smooth_in_wavelength():
    lam = np.linspace(0.7, 1.7, 2001)
    n = refractive_index(lam, 84.0)
    d = np.diff(n)
    # each step stays within 10x the linear extrapolation from its neighbour
    assert np.all(np.abs(d[1:]) <= 10 * np.abs(d[:-1]))


def test_grating_wavevector():
    c = CrystalConfig()
    assert grating_wavevector(c, 84.0) == pytest.approx(2 * math.pi / 19.2, rel=1e-15)
    assert grating_wavevector(c, 84.0) == pytest.approx(0.327249, abs=1e-6)
    assert grating_wavevector(c, 30.0) == grating_wavevector(c, 150.0)


def test_thermal_expansion_lowers_grating_wavevector():
    c = CrystalConfig(thermal_expansion=True)
    assert grating_wavevector(c, 90.0) < grating_wavevector(c, 80.0)
    assert poling_period(c, 25.0) == 19.2


@pytest.mark.parametrize("kwargs", [{"length_mm": 0}, {"length_mm": -1}, {"period_um": 0}])
def test_crystal_rejects_nonpositive_geometry(kwargs):
    with pytest.raises(ValueError):
        CrystalConfig(**kwargs)


def test_sellmeier_set_is_immutable():
    with pytest.raises(TypeError):
        MGO_CLN.coefficients["a1"] = 1.0
    with pytest.raises(AttributeError):
        MGO_CLN.name = "other"


def test_sellmeier_json_round_trip(tmp_path):
    path = tmp_path / "set.json"
    path.write_text(json.dumps(MGO_CLN.to_dict()))
    loaded = load_sellmeier(path)
    assert loaded == MGO_CLN
    assert "Gayer" in loaded.name


def test_sellmeier_rejects_missing_and_unknown_coefficients():
    coeffs = dict(MGO_CLN.coefficients)
    del coeffs["a3"]
    with pytest.raises(ValueError, match="a3"):
        SellmeierSet("x", coeffs, (0.5, 4.0), (20.0, 200.0))
    with pytest.raises(ValueError, match="zz"):
        SellmeierSet("x", {**MGO_CLN.coefficients, "zz": 1.0}, (0.5, 4.0), (20.0, 200.0))
