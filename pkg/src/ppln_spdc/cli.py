"""Command-line entry point: ``ppln-spdc <verb> [options]``.

Exit codes: 0 success, 1 usage, 2 invalid configuration/input or domain
error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import analyze_scan
from .config import RunConfig, default_config, load_config, with_overrides
from .errors import AnalysisError, ConfigError, DomainError, ResolutionError, SolverError
from .field import farfield_image, farfield_radial_profile
from .instrument import (
    ScanMaps,
    poisson_counts,
    simulate_far_field_scan,
    simulate_near_field_scan,
    simulate_spectrum_scan,
)
from .io import FF_TAG, NF_TAG, read_measured_scan, write_csv, write_pgm
from .phasematch import (
    degeneracy_temperature,
    idler_wavelength,
    spectral_curve,
    spectral_density,
    spectrum_fwhm,
    tuning_curve,
)
from .schmidt import schmidt_sweep

log = logging.getLogger("ppln_spdc")

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _tag(t: float) -> str:
    return f"T{t:.2f}"


def _header_config(cfg: RunConfig) -> dict:
    # output location is not part of the physics and would break cross-directory comparisons
    return {k: v for k, v in cfg.effective.items() if k != "output_dir"}


def _write_json(path: Path, doc: dict) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n", encoding="utf-8")
    return path


def echo_config(cfg: RunConfig) -> Path:
    """Write the effective configuration next to the outputs; loading it reproduces the run."""
    path = cfg.output_dir / "config.effective.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(cfg.to_json(), encoding="utf-8")
    return path


def _range(args, cfg: RunConfig) -> tuple[tuple[float, float], float]:
    lo, hi = args.range if args.range else cfg.t_range
    step = args.step if args.step is not None else cfg.t_step
    if hi < lo:
        raise UsageError(f"inverted temperature range [{lo}, {hi}]")
    if not step > 0:
        raise UsageError(f"temperature step must be positive, got {step}")
    return (lo, hi), step


def cmd_tuning_curve(cfg: RunConfig, t_range: tuple[float, float], t_step: float) -> dict:
    diagnostics: list[str] = []
    points = tuning_curve(cfg.crystal, cfg.pump, t_range, t_step, diagnostics)
    rows = [(p.temperature_c, p.signal_um * 1e3, p.idler_um * 1e3, p.residual_rad) for p in points]
    out = cfg.output_dir
    write_csv(
        out / "tuning_curve.csv", "tuning_curve", ["T_c", "lambda_s_nm", "lambda_i_nm", "residual_rad"], rows,
        _header_config(cfg),
    )
    try:
        t_deg: float | None = degeneracy_temperature(cfg.crystal, cfg.pump)
    except SolverError as exc:
        diagnostics.append(str(exc))
        t_deg = None
    summary = {
        "degeneracy_temperature_c": t_deg,
        "pump_nm": cfg.pump.wavelength_um * 1e3,
        "points": len(rows),
        "diagnostics": diagnostics,
    }
    _write_json(out / "tuning_summary.json", summary)
    return summary


def cmd_spectrum(cfg: RunConfig, temperatures: list[float], instrument: bool = False, raw: bool = False) -> dict:
    s = cfg.effective["spectrum"]
    lo, hi, step = s["start_nm"], s["stop_nm"], s["step_nm"]
    out = cfg.output_dir
    summary = {}
    for t in temperatures:
        curve = spectral_curve(t, cfg.crystal, cfg.pump, (lo * 1e-3, hi * 1e-3), step * 1e-3)
        values = spectral_density(curve.wavelengths_um, t, cfg.crystal, cfg.pump) if raw else curve.intensity
        wl_nm = curve.wavelengths_um * 1e3
        meta = {"T_c": t, "normalized": not raw}
        write_csv(out / f"spectrum_{_tag(t)}.csv", "spectrum", ["lambda_nm", "intensity"],
                  zip(wl_nm, values), _header_config(cfg), meta)
        entry = {"lobes": len(spectrum_fwhm(curve)), "fwhm_nm": spectrum_fwhm(curve)}
        if instrument:
            measured = simulate_spectrum_scan(t, cfg.crystal, cfg.pump, cfg.grating, (lo, hi), step, normalize=not raw)
            write_csv(out / f"spectrum_{_tag(t)}_instrument.csv", "spectrum_instrument", ["lambda_nm", "counts"],
                      zip(measured.wavelengths_um * 1e3, measured.intensity), _header_config(cfg),
                      {**meta, "grating_fwhm_nm": cfg.grating.fwhm_nm})
            entry["instrument_fwhm_nm"] = spectrum_fwhm(measured)
        summary[f"{t:g}"] = entry
    _write_json(out / "spectrum_summary.json", summary)
    return summary


def cmd_farfield(cfg: RunConfig, temperatures: list[float], raw: bool = False) -> dict:
    f = cfg.effective["farfield"]
    out = cfg.output_dir
    summary = {}
    for t in temperatures:
        prof = farfield_radial_profile(
            cfg.signal_um, t, cfg.crystal, cfg.pump, f["n_radial"], f["n_quad"], normalize=not raw
        )
        write_csv(out / f"farfield_{_tag(t)}.csv", "farfield_radial", ["q_rad_per_um", "intensity"],
                  zip(prof.coords, prof.values), _header_config(cfg), {"T_c": t, "normalized": not raw})
        image = farfield_image(prof, f["image_px"])
        write_pgm(out / f"farfield_{_tag(t)}.pgm", image, f["pgm_bits"])
        summary[f"{t:g}"] = {"peak_q_rad_per_um": float(prof.coords[int(np.argmax(prof.values))])}
    _write_json(out / "farfield_summary.json", summary)
    return summary


def scan_maps(cfg: RunConfig, temperature_c: float, plane: str) -> ScanMaps:
    """Noise-free normalized maps exactly as the instrument layer produces them."""
    grid = cfg.grid()
    channels = (cfg.signal_um, cfg.idler_um)
    s = cfg.effective["scan"]
    sim = simulate_far_field_scan if plane == "ff" else simulate_near_field_scan
    return sim(temperature_c, cfg.crystal, cfg.pump, cfg.detection, cfg.scan, grid, channels,
               s["pixel_um"], s["fiber_blur"])


def _rates_to_output(norm_map, peak_hz, qe_factor, dark_hz, dwell, seed, noise, raw):
    """Return (stored values, scale) where stored·scale is the rate in counts per second."""
    rate = norm_map * peak_hz * qe_factor
    if noise:
        rate = poisson_counts(rate, dwell, dark_hz, seed) / dwell
    if raw:
        return rate, 1.0
    peak = float(rate.max())
    if peak == 0:
        return rate, 1.0
    return rate / peak, peak


def cmd_scan(cfg: RunConfig, temperature_c: float, plane: str = "ff", noise: bool = False, raw: bool = False) -> dict:
    maps = scan_maps(cfg, temperature_c, plane)
    proto = cfg.scan
    qe = cfg.detection.quantum_efficiency
    pos = maps.positions_um
    xx, yy = np.meshgrid(pos, pos, indexing="ij")
    out = cfg.output_dir
    domain = FF_TAG if plane == "ff" else NF_TAG
    base = {"domain": domain, "T_c": temperature_c, "dwell_s": proto.dwell_s, "detector_coordinates": True,
            "noise": noise, "seed": cfg.seed if noise else "none", "normalized": not raw}

    # distinct streams per map so NF and FF noise stay independent for one seed
    singles_seed = cfg.seed if plane == "ff" else cfg.seed + 2
    singles, s_scale = _rates_to_output(
        maps.singles, proto.peak_singles_hz, qe, proto.dark_rate_hz, proto.dwell_s, singles_seed, noise, raw
    )
    paths = [write_csv(
        out / f"scan_{plane}_{_tag(temperature_c)}_singles.csv", "scan_singles", ["x_um", "y_um", "singles_cps"],
        zip(xx.ravel(), yy.ravel(), singles.ravel()), _header_config(cfg), {**base, "scale": s_scale},
    )]
    if plane == "ff":
        # accidentals are excluded; coincidences have no dark floor
        coinc, c_scale = _rates_to_output(
            maps.coincidences, proto.peak_coincidence_hz, qe * qe, 0.0, proto.dwell_s, cfg.seed + 1, noise, raw
        )
        paths.append(write_csv(
            out / f"scan_{plane}_{_tag(temperature_c)}_coincidences.csv", "scan_coincidences",
            ["xi_um", "xs_um", "coincidences_cps"], zip(xx.ravel(), yy.ravel(), coinc.ravel()),
            _header_config(cfg), {**base, "scale": c_scale},
        ))
    return {"files": [str(p) for p in paths]}


def cmd_schmidt(cfg: RunConfig, t_range: tuple[float, float], t_step: float) -> dict:
    grid = cfg.grid()
    rows = schmidt_sweep(cfg.crystal, cfg.pump, grid, t_range, t_step, cfg.signal_um)
    out = cfg.output_dir
    write_csv(
        out / "schmidt.csv", "schmidt", ["T_c", "K_per_axis", "K_full2d", "K_svd_per_axis"],
        [(r.temperature_c, r.k_per_axis, r.k_full2d, r.k_svd_per_axis) for r in rows],
        _header_config(cfg), {"grid_n": grid.n, "grid_q_max": grid.q_max},
    )
    good = [r for r in rows if r.error is None]
    best = min(good, key=lambda r: r.k_full2d) if good else None
    summary = {
        "min_T_c": best.temperature_c if best else None,
        "min_K_full2d": best.k_full2d if best else None,
        "failures": {f"{r.temperature_c:g}": r.error for r in rows if r.error is not None},
    }
    _write_json(out / "schmidt_summary.json", summary)
    return summary


def cmd_analyze_scan(cfg: RunConfig, nf_path, ff_path, background_cps: float = 0.0) -> dict:
    nf = read_measured_scan(nf_path)
    ff = read_measured_scan(ff_path)
    # the far-field scan records the idler partner of the signal channel
    lam = idler_wavelength(cfg.signal_um, cfg.pump)
    res = analyze_scan(nf, ff, cfg.detection, cfg.crystal, lam, background_cps).to_dict()
    _write_json(cfg.output_dir / "analyze_scan.json", res)
    return res


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", default=argparse.SUPPRESS, help="JSON configuration file")
    common.add_argument("--out", metavar="DIR", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--seed", type=int, metavar="N", default=argparse.SUPPRESS, help="noise seed")
    common.add_argument("--raw", action="store_true", default=argparse.SUPPRESS, help="skip normalization")
    common.add_argument("--instrument", action="store_true", default=argparse.SUPPRESS,
                        help="add the grating-filter response to spectra")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    p = _Parser(prog="ppln-spdc", description="Type-0 PPLN photon-pair simulator", parents=[common])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    def temps(sp):
        sp.add_argument("--range", nargs=2, type=float, metavar=("LO", "HI"), help="temperature range (°C)")
        sp.add_argument("--step", type=float, help="temperature step (°C)")

    sp = sub.add_parser("tuning-curve", parents=[common], help="collinear signal/idler wavelengths vs T")
    temps(sp)
    sp = sub.add_parser("spectrum", parents=[common], help="collinear emission spectra")
    sp.add_argument("--temps", nargs="+", type=float, metavar="T", help="temperatures (°C)")
    sp = sub.add_parser("farfield", parents=[common], help="far-field radial profiles and images")
    sp.add_argument("--temps", nargs="+", type=float, metavar="T", help="temperatures (°C)")
    sp = sub.add_parser("scan", parents=[common], help="simulated fiber-scan maps")
    sp.add_argument("--temp", type=float, required=True, metavar="T", help="crystal temperature (°C)")
    sp.add_argument("--plane", choices=("ff", "nf"), default="ff")
    sp.add_argument("--noise", action="store_true", help="draw Poisson counts with the seed")
    sp = sub.add_parser("schmidt", parents=[common], help="Schmidt number vs temperature")
    temps(sp)
    sp = sub.add_parser("analyze-scan", parents=[common], help="Schmidt number from measured NF/FF scans")
    sp.add_argument("nf_file")
    sp.add_argument("ff_file")
    sp.add_argument("--background", type=float, default=0.0, metavar="CPS",
                    help="constant background rate subtracted from every sample")
    return p


def _run(args) -> dict:
    cfg = load_config(args.config) if getattr(args, "config", None) else default_config()
    cfg = with_overrides(cfg, output_dir=getattr(args, "out", None), seed=getattr(args, "seed", None))
    raw = getattr(args, "raw", False)
    echo_config(cfg)
    if args.verb == "tuning-curve":
        return cmd_tuning_curve(cfg, *_range(args, cfg))
    if args.verb == "spectrum":
        return cmd_spectrum(cfg, args.temps or cfg.effective["spectrum"]["temperatures_c"],
                            getattr(args, "instrument", False), raw)
    if args.verb == "farfield":
        return cmd_farfield(cfg, args.temps or cfg.effective["farfield"]["temperatures_c"], raw)
    if args.verb == "scan":
        return cmd_scan(cfg, args.temp, args.plane, args.noise, raw)
    if args.verb == "schmidt":
        return cmd_schmidt(cfg, *_range(args, cfg))
    if args.verb == "analyze-scan":
        if args.background < 0:
            raise UsageError("background rate must be non-negative")
        return cmd_analyze_scan(cfg, args.nf_file, args.ff_file, args.background)
    raise UsageError(f"unknown verb {args.verb!r}")  # pragma: no cover


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        summary = _run(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"ppln-spdc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, DomainError, AnalysisError, ResolutionError, OSError, ValueError) as exc:
        print(f"ppln-spdc: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SolverError, FloatingPointError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"ppln-spdc: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(json.dumps(summary, indent=2, sort_keys=True, default=_json_default))
    return EXIT_OK


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(type(obj).__name__)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
