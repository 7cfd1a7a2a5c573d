"""Temperature-dependent dispersion of MgO-doped congruent lithium niobate.

Only the extraordinary index is modelled: in type-0 phase matching pump,
signal and idler share that polarization.

Units: wavelengths in µm, temperatures in °C, wavevectors in rad/µm.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .errors import DomainError

_REQUIRED = ("a1", "a2", "a3", "a4", "a5", "a6", "b1", "b2", "b3", "b4", "t0", "t1")

#: Reference temperature for poling-period thermal expansion (°C).
EXPANSION_REF_C = 25.0


@dataclass(frozen=True)
class SellmeierSet:
    """Coefficients of the temperature-dependent Sellmeier expansion

    n² = a1 + b1·f + (a2 + b2·f)/(λ² − (a3 + b3·f)²) + (a4 + b4·f)/(λ² − a5²) − a6·λ²

    with f = (T − t0)(T + t1), λ in µm and T in °C.
    """

    name: str
    coefficients: Mapping[str, float]
    lambda_range_um: tuple[float, float]
    temp_range_c: tuple[float, float]

    def __post_init__(self):
        missing = [k for k in _REQUIRED if k not in self.coefficients]
        if missing:
            raise ValueError(f"Sellmeier set {self.name!r} lacks coefficients {missing}")
        extra = sorted(set(self.coefficients) - set(_REQUIRED))
        if extra:
            raise ValueError(f"Sellmeier set {self.name!r} has unknown coefficients {extra}")
        lo, hi = self.lambda_range_um
        tlo, thi = self.temp_range_c
        if not (0 < lo < hi) or not (tlo < thi):
            raise ValueError(f"Sellmeier set {self.name!r} has an empty validity range")
        frozen = MappingProxyType({k: float(self.coefficients[k]) for k in _REQUIRED})
        object.__setattr__(self, "coefficients", frozen)
        object.__setattr__(self, "lambda_range_um", (float(lo), float(hi)))
        object.__setattr__(self, "temp_range_c", (float(tlo), float(thi)))

    @classmethod
    def from_dict(cls, doc: Mapping) -> "SellmeierSet":
        return cls(
            name=str(doc["name"]),
            coefficients=dict(doc["coefficients"]),
            lambda_range_um=tuple(doc["lambda_range_um"]),
            temp_range_c=tuple(doc["temp_range_c"]),
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "coefficients": dict(self.coefficients),
            "lambda_range_um": list(self.lambda_range_um),
            "temp_range_c": list(self.temp_range_c),
        }


def load_sellmeier(path: str | Path) -> SellmeierSet:
    """Read a Sellmeier set from a JSON document."""
    with open(path, encoding="utf-8") as fh:
        return SellmeierSet.from_dict(json.load(fh))


def default_sellmeier() -> SellmeierSet:
    text = resources.files("ppln_spdc").joinpath("data/mgo_cln_gayer2008.json").read_text("utf-8")
    return SellmeierSet.from_dict(json.loads(text))


MGO_CLN = default_sellmeier()


@dataclass(frozen=True)
class CrystalConfig:
    """Periodically poled crystal: length, poling period and dispersion model."""

    length_mm: float = 40.0
    period_um: float = 19.2
    sellmeier: SellmeierSet = field(default=MGO_CLN)
    thermal_expansion: bool = False
    expansion_coeff_per_c: float = 1.54e-5

    def __post_init__(self):
        if not self.length_mm > 0:
            raise ValueError(f"crystal length must be positive, got {self.length_mm} mm")
        if not self.period_um > 0:
            raise ValueError(f"poling period must be positive, got {self.period_um} µm")

    @property
    def length_um(self) -> float:
        return self.length_mm * 1e3


def _check_domain(wavelength_um, temperature_c, sellmeier: SellmeierSet) -> None:
    lo, hi = sellmeier.lambda_range_um
    wl = np.asarray(wavelength_um, dtype=float)
    if np.any(wl < lo):
        raise DomainError(f"wavelength {wl.min():.6g} µm below lower bound {lo} µm of {sellmeier.name!r}")
    if np.any(wl > hi):
        raise DomainError(f"wavelength {wl.max():.6g} µm above upper bound {hi} µm of {sellmeier.name!r}")
    tlo, thi = sellmeier.temp_range_c
    t = np.asarray(temperature_c, dtype=float)
    if np.any(t < tlo):
        raise DomainError(f"temperature {t.min():.6g} °C below lower bound {tlo} °C of {sellmeier.name!r}")
    if np.any(t > thi):
        raise DomainError(f"temperature {t.max():.6g} °C above upper bound {thi} °C of {sellmeier.name!r}")


def refractive_index(wavelength_um, temperature_c, sellmeier: SellmeierSet = MGO_CLN):
    """Extraordinary refractive index n_e(λ, T).

    Accepts scalars or broadcastable arrays; returns a float for scalar input.

    Raises
    ------
    DomainError
        If λ or T falls outside the validity ranges of ``sellmeier``.
    """
    _check_domain(wavelength_um, temperature_c, sellmeier)
    c = sellmeier.coefficients
    lam2 = np.square(np.asarray(wavelength_um, dtype=float))
    t = np.asarray(temperature_c, dtype=float)
    f = (t - c["t0"]) * (t + c["t1"])
    n2 = (
        c["a1"]
        + c["b1"] * f
        + (c["a2"] + c["b2"] * f) / (lam2 - (c["a3"] + c["b3"] * f) ** 2)
        + (c["a4"] + c["b4"] * f) / (lam2 - c["a5"] ** 2)
        - c["a6"] * lam2
    )
    n = np.sqrt(n2)
    return float(n) if n.ndim == 0 else n


def wavenumber(wavelength_um, temperature_c, sellmeier: SellmeierSet = MGO_CLN):
    """Wavenumber k = 2π·n_e/λ inside the crystal, in rad/µm."""
    n = refractive_index(wavelength_um, temperature_c, sellmeier)
    k = 2 * np.pi * n / np.asarray(wavelength_um, dtype=float)
    return float(k) if np.ndim(k) == 0 else k


def poling_period(crystal: CrystalConfig, temperature_c: float) -> float:
    """Poling period in µm, linearly expanded from 25 °C when enabled."""
    if not crystal.thermal_expansion:
        return crystal.period_um
    return crystal.period_um * (1 + crystal.expansion_coeff_per_c * (temperature_c - EXPANSION_REF_C))


def grating_wavevector(crystal: CrystalConfig, temperature_c: float) -> float:
    """Grating wavevector magnitude k_m = 2π/Λ(T) in rad/µm."""
    return 2 * math.pi / poling_period(crystal, temperature_c)
