"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 I/O or format error, 3 fit did not
converge, 4 numerical or singular-model error.  Diagnostics go to stderr;
data goes to files, or to stdout when no output file is given.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import __version__, dataio, presets, reporting
from .dataio.tables import fmt
from .errors import (DataFormatError, FitError, InputError, NumericalError,
                     SingularModelError)
from .fitcore import FitOptions, fit_map, fit_scaling, fit_sweep, fit_temperature
from .heatmap import export_heatmap
from .synthlab import (MapScenario, NoiseSpec, SweepScenario, gen_map, gen_scaling_series,
                       gen_temperature_series, simulate as simulate_sweep)

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NOT_CONVERGED, EXIT_NUMERICAL = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class NotConverged(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _log(message):
    print(message, file=sys.stderr)


def _manifest(argv, inputs=(), seeds=()):
    return dataio.RunManifest.for_inputs(["magcav", *argv], inputs, seeds)


def _finish(manifest, out):
    if out is not None:
        manifest.write(f"{out}.manifest.json")


def _emit_report(doc, out):
    if out is None:
        sys.stdout.write(dataio.documents.dumps(doc))
    else:
        dataio.write_report(out, doc)


def _fit_options(args) -> FitOptions:
    changes = {k: getattr(args, k) for k in ("max_iterations", "cost_tolerance",
                                             "gradient_tolerance", "initial_damping")
               if getattr(args, k) is not None}
    return replace(FitOptions(), **changes)


def _noise_override(noise: NoiseSpec, args) -> NoiseSpec:
    return NoiseSpec(noise.sigma if args.sigma is None else args.sigma,
                     noise.seed if args.seed is None else args.seed)


# subcommands

def cmd_simulate(args, argv):
    if args.preset == "fig3":
        sigma = 0.0 if args.sigma is None else args.sigma
        seed = args.seed or 0
        pts = gen_scaling_series(presets.SCALING_DIAMETERS_M, presets.REF_G0, NoiseSpec(sigma, seed))
        dataio.write_series(args.out, dataio.SCALING_COLUMNS, pts,
                            {"g0_hz": fmt(presets.REF_G0), "noise_sigma": fmt(sigma),
                             "seed": seed})
        _finish(_manifest(argv, seeds=[seed]), args.out)
        return EXIT_OK
    if args.preset == "fig4":
        sigma = 0.0 if args.sigma is None else args.sigma
        seed = args.seed or 0
        m = presets.REF_TEMP_MODEL
        pts = gen_temperature_series(presets.TEMPERATURES_K, m, NoiseSpec(sigma, seed))
        dataio.write_series(args.out, dataio.TEMPERATURE_COLUMNS, pts,
                            {"f_fmr_hz": fmt(m.f_fmr), "gamma_tls0_hz": fmt(m.gamma_tls0),
                             "gamma_mm_hz": fmt(m.gamma_mm),
                             "noise_sigma_hz": fmt(sigma), "seed": seed})
        _finish(_manifest(argv, seeds=[seed]), args.out)
        return EXIT_OK

    inputs = []
    if args.scenario is not None:
        scenario = dataio.read_scenario(args.scenario)
        inputs.append(args.scenario)
        if not isinstance(scenario, SweepScenario):
            raise UsageError("simulate needs a sweep scenario; use 'map' for map scenarios")
        if args.current is not None:
            raise UsageError("--current only applies to --preset fig2")
        scenario = replace(scenario, noise=_noise_override(scenario.noise, args))
    else:
        current = 0.0 if args.current is None else args.current
        scenario = presets.fig2_sweep(current=current, spurious=args.spurious)
        scenario = replace(scenario, noise=_noise_override(scenario.noise, args))
    sweep = simulate_sweep(scenario)
    dataio.write_sweep(args.out, sweep)
    _finish(_manifest(argv, inputs, [scenario.noise.seed]), args.out)
    return EXIT_OK


def _load_map_scenario(args):
    if args.scenario is not None:
        scenario = dataio.read_scenario(args.scenario)
        if not isinstance(scenario, MapScenario):
            raise UsageError("map needs a map scenario")
    else:
        scenario = presets.fig2_map()
    return replace(scenario, noise=_noise_override(scenario.noise, args))


def cmd_map(args, argv):
    if args.input is not None:
        if args.scenario or args.preset:
            raise UsageError("--input exports an existing map; do not combine with a scenario")
        data = dataio.read_map(args.input)
        inputs, seeds = [args.input], []
    else:
        scenario = _load_map_scenario(args)
        data = gen_map(scenario, workers=args.workers)
        inputs = [args.scenario] if args.scenario else []
        seeds = [scenario.noise.seed]
        if args.out is None:
            raise UsageError("map: --out is required when generating a map")
    if args.out is not None and args.input is None:
        dataio.write_map(args.out, data)
    lo, hi = args.range if args.range else (None, None)
    if args.matrix or args.pgm:
        lo, hi = export_heatmap(data, args.matrix, args.pgm, lo, hi)
        _log(f"heatmap range for Re(S21): [{lo:.6g}, {hi:.6g}]")
    _finish(_manifest(argv, inputs, seeds), args.out or args.pgm or args.matrix)
    return EXIT_OK


def _port_couplings(args):
    if (args.kappa1 is None) != (args.kappa2 is None):
        raise UsageError("give both --kappa1 and --kappa2, or neither")
    return None if args.kappa1 is None else (args.kappa1, args.kappa2)


def cmd_fit(args, argv):
    sweep = dataio.read_sweep(args.sweep)
    res = fit_sweep(sweep, opts=_fit_options(args), port_couplings=_port_couplings(args),
                    magnitude_only=args.magnitude_only, fit_delay=not args.no_delay,
                    fit_background=args.background)
    manifest = _manifest(argv, [args.sweep], [] if sweep.seed is None else [sweep.seed])
    doc = reporting.sweep_report(res, sweep.power_dbm, sweep.temperature_k, manifest)
    _emit_report(doc, args.out)
    _finish(manifest, args.out)
    if not res.converged:
        raise NotConverged(f"fit stopped without converging ({res.stop_reason})")
    return EXIT_OK


def cmd_fit_map(args, argv):
    data = dataio.read_map(args.map)
    res = fit_map(data, _fit_options(args), port_couplings=_port_couplings(args),
                  magnitude_only=args.magnitude_only)
    manifest = _manifest(argv, [args.map], [] if data.seed is None else [data.seed])
    doc = reporting.map_report(res, data.power_dbm, data.temperature_k, manifest)
    _emit_report(doc, args.out)
    _finish(manifest, args.out)
    if res.failed:
        _log(f"{len(res.failed)} column(s) excluded: " + ", ".join(f"{c:g} mA" for c in res.failed))
    return EXIT_OK


def cmd_scaling(args, argv):
    inputs = []
    if args.series is not None:
        points, _ = dataio.read_series(args.series, dataio.SCALING_COLUMNS)
        inputs.append(args.series)
        seeds = []
    elif args.preset == "fig3":
        seed = args.seed or 0
        sigma = 0.0 if args.sigma is None else args.sigma
        points = gen_scaling_series(presets.SCALING_DIAMETERS_M, presets.REF_G0, NoiseSpec(sigma, seed))
        seeds = [seed]
    else:
        raise UsageError("scaling needs a series file or --preset fig3")
    fit = fit_scaling(points, relative=args.relative)
    manifest = _manifest(argv, inputs, seeds)
    doc = reporting.scaling_report(fit, manifest, presets.REF_CAVITY, presets.REF_HYBRID.f_c)
    _emit_report(doc, args.out)
    _finish(manifest, args.out)
    return EXIT_OK


def cmd_tempfit(args, argv):
    inputs, seeds = [], []
    f_fmr = args.f_fmr
    if args.series is not None:
        points, meta = dataio.read_series(args.series, dataio.TEMPERATURE_COLUMNS)
        inputs.append(args.series)
        if f_fmr is None and "f_fmr_hz" in meta:
            try:
                f_fmr = float(meta["f_fmr_hz"])
            except ValueError:
                raise DataFormatError(f"{args.series}: f_fmr_hz metadata is not a number") from None
    elif args.preset == "fig4":
        seed = args.seed or 0
        sigma = 0.0 if args.sigma is None else args.sigma
        points = gen_temperature_series(presets.TEMPERATURES_K, presets.REF_TEMP_MODEL,
                                        NoiseSpec(sigma, seed))
        seeds = [seed]
        f_fmr = presets.REF_TEMP_MODEL.f_fmr if f_fmr is None else f_fmr
    else:
        raise UsageError("tempfit needs a series file or --preset fig4")
    if f_fmr is None:
        raise UsageError("tempfit: --f-fmr is required (the series has no f_fmr_hz metadata)")
    fit = fit_temperature(points, f_fmr, cutoff=args.cutoff)
    manifest = _manifest(argv, inputs, seeds)
    doc = reporting.temperature_report(fit, manifest)
    _emit_report(doc, args.out)
    _finish(manifest, args.out)
    return EXIT_OK


def cmd_report(args, argv):
    doc = dataio.read_report(args.report)
    text = reporting.render_text(doc)
    if args.out is None:
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return EXIT_OK


def _add_fit_options(p):
    p.add_argument("--kappa1", type=float, help="input port coupling, Hz (held fixed)")
    p.add_argument("--kappa2", type=float, help="output port coupling, Hz (held fixed)")
    p.add_argument("--magnitude-only", action="store_true", help="fit |S21| instead of Re/Im")
    p.add_argument("--max-iterations", type=int)
    p.add_argument("--cost-tolerance", type=float)
    p.add_argument("--gradient-tolerance", type=float)
    p.add_argument("--initial-damping", type=float)


def _add_noise_options(p):
    p.add_argument("--seed", type=int, help="noise seed (overrides scenario)")
    p.add_argument("--sigma", type=float, help="noise level (overrides scenario)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="magcav", description="Cavity-magnon spectroscopy toolkit.")
    parser.add_argument("--version", action="version", version=f"magcav {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="synthetic sweep (or fig3/fig4 series)")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", help="sweep scenario document (JSON)")
    src.add_argument("--preset", choices=presets.PRESETS)
    _add_noise_options(p)
    p.add_argument("--current", type=float, help="bias current in mA for --preset fig2")
    p.add_argument("--spurious", action="store_true", help="include the weak extra modes (fig2)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("map", help="synthetic current x frequency map and heatmap exports")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--scenario", help="map scenario document (JSON)")
    src.add_argument("--preset", choices=("fig2",))
    src.add_argument("--input", help="existing map CSV to export")
    _add_noise_options(p)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="map CSV to write")
    p.add_argument("--matrix", help="gnuplot nonuniform matrix of Re(S21)")
    p.add_argument("--pgm", "--ppm", dest="pgm", help="8-bit grayscale raster of Re(S21)")
    p.add_argument("--range", type=float, nargs=2, metavar=("LO", "HI"),
                   help="Re(S21) mapped to gray 0 and 255")
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("fit", help="fit one sweep")
    p.add_argument("sweep")
    _add_fit_options(p)
    p.add_argument("--no-delay", action="store_true", help="hold the electrical delay at zero")
    p.add_argument("--background", action="store_true", help="fit an additive complex background")
    p.add_argument("--out", help="report document (default: stdout)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("fit-map", help="fit every column of a map and calibrate the field")
    p.add_argument("map")
    _add_fit_options(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit_map)

    p = sub.add_parser("scaling", help="single-spin coupling from a diameter series")
    p.add_argument("series", nargs="?")
    p.add_argument("--preset", choices=("fig3",))
    _add_noise_options(p)
    p.add_argument("--relative", action="store_true",
                   help="weight for scatter proportional to g (multiplicative noise)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("tempfit", help="tanh linewidth model from a temperature series")
    p.add_argument("series", nargs="?")
    p.add_argument("--preset", choices=("fig4",))
    _add_noise_options(p)
    p.add_argument("--f-fmr", type=float, help="magnon frequency in Hz")
    p.add_argument("--cutoff", type=float, default=1.0, help="highest temperature fitted, K")
    p.add_argument("--out")
    p.set_defaults(func=cmd_tempfit)

    p = sub.add_parser("report", help="render a report document as text")
    p.add_argument("report")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "preset", None) and args.command == "map" and args.preset != "fig2":
            raise UsageError("map supports only --preset fig2")
        return args.func(args, argv)
    except SystemExit as exc:  # --help and --version
        return int(exc.code or 0)
    except UsageError as exc:
        _log(str(exc))
        return EXIT_USAGE
    except NotConverged as exc:
        _log(f"magcav: {exc}")
        return EXIT_NOT_CONVERGED
    except FitError as exc:
        _log(f"magcav: fit failed: {exc}")
        return EXIT_NOT_CONVERGED
    except (NumericalError, SingularModelError) as exc:
        _log(f"magcav: numerical error: {exc}")
        return EXIT_NUMERICAL
    except (OSError, DataFormatError) as exc:
        _log(f"magcav: {exc}")
        return EXIT_IO
    except InputError as exc:
        _log(f"magcav: invalid input: {exc}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
