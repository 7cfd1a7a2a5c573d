"""Run configuration: strict JSON loading, defaults and the effective-config echo.

Every section and key has a default; a config file only lists overrides.
Unknown keys and wrongly typed values are rejected with the dotted name of
the offending field.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path

from .crystal import CrystalConfig, MGO_CLN, SellmeierSet, load_sellmeier
from .errors import ConfigError
from .field import PumpBeam, TransverseGrid
from .instrument import DetectionGeometry, FilterSpec, ScanProtocol
from .phasematch import DEFAULT_PUMP_UM, WDM_IDLER_UM, WDM_SIGNAL_UM

DEFAULTS: dict = {
    "crystal": {
        "length_mm": 40.0,
        "period_um": 19.2,
        "sellmeier_file": None,
        "thermal_expansion": False,
        "expansion_coeff_per_c": 1.54e-5,
    },
    "pump": {"wavelength_nm": round(DEFAULT_PUMP_UM * 1e3, 6), "waist_um": 80.0},
    "detection": {"f1_mm": 200.0, "m_ff": 0.03, "m_nf": 0.75, "mfd_um": 10.4, "quantum_efficiency": 0.8},
    "scan": {
        "points": 21,
        "step_um": 10.0,
        "dwell_s": 1.0,
        "window_ps": 200.0,
        "dark_rate_hz": 100.0,
        "peak_singles_hz": 5.0e4,
        "peak_coincidence_hz": 2.0e3,
        "fiber_blur": True,
        "pixel_um": 1.0,
    },
    "grid": {"n": 512, "q_max": None},
    "temperature": {"start_c": 80.0, "stop_c": 90.0, "step_c": 0.5},
    "wdm": {
        "signal_nm": round(WDM_SIGNAL_UM * 1e3, 6),
        "idler_nm": round(WDM_IDLER_UM * 1e3, 6),
        "fwhm_nm": 0.6,
        "shape": "gaussian",
    },
    "grating": {"fwhm_nm": 1.25, "dispersion_nm_per_mrad": 1.46, "shape": "gaussian"},
    "spectrum": {
        "start_nm": 1400.0,
        "stop_nm": 1750.0,
        "step_nm": 0.25,
        "temperatures_c": [82.5, 84.0, 86.0, 88.0, 90.0],
    },
    "farfield": {"temperatures_c": [80.0, 82.0, 85.0, 88.0], "n_radial": 256, "n_quad": 160, "image_px": 201, "pgm_bits": 8},
    "output_dir": "out",
    "seed": 0,
}

# value kinds for keys whose default is null
_NULLABLE = {"crystal.sellmeier_file": "string", "grid.q_max": "number"}
_POSITIVE = {
    "crystal.length_mm", "crystal.period_um", "pump.wavelength_nm", "pump.waist_um",
    "detection.f1_mm", "detection.m_ff", "detection.m_nf", "detection.mfd_um",
    "detection.quantum_efficiency", "scan.step_um", "scan.dwell_s", "scan.pixel_um",
    "grid.q_max", "temperature.step_c", "wdm.signal_nm", "wdm.idler_nm", "wdm.fwhm_nm",
    "grating.fwhm_nm", "grating.dispersion_nm_per_mrad", "spectrum.step_nm",
}
_NON_NEGATIVE = {"scan.window_ps", "scan.dark_rate_hz", "scan.peak_singles_hz", "scan.peak_coincidence_hz", "seed"}
_SHAPES = ("gaussian", "rectangular")


def _type_name(v) -> str:
    return "null" if v is None else type(v).__name__


def _kind(name: str, default) -> str:
    if name in _NULLABLE:
        return _NULLABLE[name]
    if isinstance(default, bool):
        return "boolean"
    if isinstance(default, int):
        return "integer"
    if isinstance(default, float):
        return "number"
    if isinstance(default, str):
        return "string"
    return "number list"


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _check_value(name: str, value, default):
    """Type-check one leaf against the kind of its default; returns the coerced value."""
    kind = _kind(name, default)
    if value is None:
        if name in _NULLABLE:
            return None
        raise ConfigError(name, "must not be null")
    if kind == "boolean" and isinstance(value, bool):
        return value
    if kind == "integer" and isinstance(value, int) and not isinstance(value, bool):
        return value
    if kind == "number" and _is_number(value):
        return float(value)
    if kind == "string" and isinstance(value, str):
        return value
    if kind == "number list" and isinstance(value, list) and value:
        for i, item in enumerate(value):
            if not _is_number(item):
                raise ConfigError(f"{name}[{i}]", f"expected a number, got {_type_name(item)}")
        return [float(x) for x in value]
    article = {"integer": "an", "number list": "a non-empty"}.get(kind, "a")
    raise ConfigError(name, f"expected {article} {kind}, got {_type_name(value)}")


def _merge(doc: dict) -> dict:
    if not isinstance(doc, dict):
        raise ConfigError("<root>", f"expected a JSON object, got {_type_name(doc)}")
    out = copy.deepcopy(DEFAULTS)
    for key, value in doc.items():
        if key not in DEFAULTS:
            raise ConfigError(key, "unknown key")
        default = DEFAULTS[key]
        if isinstance(default, dict):
            if not isinstance(value, dict):
                raise ConfigError(key, f"expected an object, got {_type_name(value)}")
            for sub, v in value.items():
                name = f"{key}.{sub}"
                if sub not in default:
                    raise ConfigError(name, "unknown key")
                out[key][sub] = _check_value(name, v, default[sub])
        else:
            out[key] = _check_value(key, value, default)
    return out


def _get(eff: dict, name: str):
    section, _, key = name.partition(".")
    return eff[section][key] if key else eff[section]


def _validate(eff: dict) -> None:
    for name in sorted(_POSITIVE):
        v = _get(eff, name)
        if v is not None and not v > 0:
            raise ConfigError(name, f"must be positive, got {v}")
    for name in sorted(_NON_NEGATIVE):
        v = _get(eff, name)
        if v < 0:
            raise ConfigError(name, f"must be non-negative, got {v}")
    if eff["scan"]["points"] < 1 or eff["scan"]["points"] % 2 == 0:
        raise ConfigError("scan.points", f"must be odd and positive, got {eff['scan']['points']}")
    n = eff["grid"]["n"]
    if n < 32 or n & (n - 1):
        raise ConfigError("grid.n", f"must be a power of two >= 32, got {n}")
    t = eff["temperature"]
    if t["stop_c"] < t["start_c"]:
        raise ConfigError("temperature.stop_c", f"below start_c ({t['stop_c']} < {t['start_c']})")
    s = eff["spectrum"]
    if s["stop_nm"] <= s["start_nm"]:
        raise ConfigError("spectrum.stop_nm", "must exceed start_nm")
    for section in ("wdm", "grating"):
        if eff[section]["shape"] not in _SHAPES:
            raise ConfigError(f"{section}.shape", f"must be one of {_SHAPES}")
    for key in ("n_radial", "n_quad", "image_px"):
        if eff["farfield"][key] < 2:
            raise ConfigError(f"farfield.{key}", "must be at least 2")
    if eff["farfield"]["pgm_bits"] not in (8, 16):
        raise ConfigError("farfield.pgm_bits", "must be 8 or 16")
    if eff["wdm"]["signal_nm"] > eff["wdm"]["idler_nm"]:
        raise ConfigError("wdm.signal_nm", "signal is the shorter wavelength of the pair")


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration with model objects built from it."""

    effective: dict
    crystal: CrystalConfig
    pump: PumpBeam
    detection: DetectionGeometry
    scan: ScanProtocol
    wdm: tuple[FilterSpec, FilterSpec]
    grating: FilterSpec
    source: str = "<defaults>"

    @property
    def signal_um(self) -> float:
        return self.effective["wdm"]["signal_nm"] / 1e3

    @property
    def idler_um(self) -> float:
        return self.effective["wdm"]["idler_nm"] / 1e3

    @property
    def t_range(self) -> tuple[float, float]:
        t = self.effective["temperature"]
        return t["start_c"], t["stop_c"]

    @property
    def t_step(self) -> float:
        return self.effective["temperature"]["step_c"]

    @property
    def seed(self) -> int:
        return self.effective["seed"]

    @property
    def output_dir(self) -> Path:
        return Path(self.effective["output_dir"])

    def grid(self) -> TransverseGrid:
        """Configured grid; q_max defaults to four times the largest ring over the temperature range."""
        from .schmidt import default_grid

        g = self.effective["grid"]
        if g["q_max"] is not None:
            return TransverseGrid(g["n"], g["q_max"])
        return default_grid(self.crystal, self.pump, self.signal_um, self.t_range, g["n"], self.t_step)

    def to_json(self) -> str:
        return json.dumps(self.effective, indent=2, sort_keys=True) + "\n"


def _build(eff: dict, source: str) -> RunConfig:
    c = eff["crystal"]
    sellmeier: SellmeierSet = MGO_CLN
    if c["sellmeier_file"] is not None:
        try:
            sellmeier = load_sellmeier(c["sellmeier_file"])
        except (OSError, KeyError, ValueError, TypeError) as exc:
            raise ConfigError("crystal.sellmeier_file", f"cannot load: {exc}") from exc
    crystal = CrystalConfig(
        c["length_mm"], c["period_um"], sellmeier, c["thermal_expansion"], c["expansion_coeff_per_c"]
    )
    pump = PumpBeam(eff["pump"]["wavelength_nm"] / 1e3, eff["pump"]["waist_um"])
    detection = DetectionGeometry(**eff["detection"])
    s = eff["scan"]
    scan = ScanProtocol(
        s["points"], s["step_um"], s["dwell_s"], s["window_ps"], s["dark_rate_hz"],
        s["peak_singles_hz"], s["peak_coincidence_hz"],
    )
    w = eff["wdm"]
    wdm = (FilterSpec(w["signal_nm"], w["fwhm_nm"], w["shape"]), FilterSpec(w["idler_nm"], w["fwhm_nm"], w["shape"]))
    # the grating is tuned across the spectrum; its centre is set per bin
    grating = FilterSpec(0.0, eff["grating"]["fwhm_nm"], eff["grating"]["shape"])
    return RunConfig(eff, crystal, pump, detection, scan, wdm, grating, source)


def config_from_dict(doc: dict, source: str = "<dict>") -> RunConfig:
    eff = _merge(doc)
    _validate(eff)
    return _build(eff, source)


def default_config() -> RunConfig:
    return config_from_dict({}, "<defaults>")


def load_config(path: str | Path) -> RunConfig:
    """Load and validate a JSON config file.

    Raises
    ------
    ConfigError
        On unreadable files, JSON syntax errors (with line and column) and
        invalid fields (named by dotted path).
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return config_from_dict(doc, str(path))


def with_overrides(cfg: RunConfig, **overrides) -> RunConfig:
    """Copy of ``cfg`` with top-level keys (``output_dir``, ``seed``) replaced."""
    eff = copy.deepcopy(cfg.effective)
    for key, value in overrides.items():
        if value is not None:
            eff[key] = value
    return config_from_dict(eff, cfg.source)
