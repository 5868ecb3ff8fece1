"""Command-line entry point.

Exit codes: 0 success, 2 input error, 3 computation error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from importlib.resources import files
from pathlib import Path

import numpy as np

from . import __version__
from .apf import ApfConfig, run_apf
from .emd import EmdConfig, EmdError, decompose, reconstruct
from .emd import to_csv as decomposition_to_csv
from .metrics import UndefinedMetricError, compare, cycle_metrics, metrics_to_csv
from .plant import ConfigError, load_scenario, synthesize
from .pq import VoltageCollapseError
from .signal import AlignmentError, WindowError, read_csv, series_from_columns

log = logging.getLogger("emdapf")

EXIT_OK, EXIT_INPUT, EXIT_COMPUTE, EXIT_IO = 0, 2, 3, 4

MODE_ALIASES = {"baseline": ("baseline",), "emd": ("emd_enhanced",), "both": ("baseline", "emd_enhanced")}


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def default_scenario_path() -> Path:
    return Path(str(files("emdapf") / "scenarios" / "default.yaml"))


def _load(path):
    try:
        cfg = load_scenario(path)
        text = Path(path).read_text()
    except ConfigError as exc:
        raise CliError(EXIT_INPUT, str(exc)) from None
    return cfg, text


def _prepare_out(out: str) -> Path:
    d = Path(out)
    try:
        d.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot create output directory {out}: {exc.strerror}") from None
    return d


def _write_manifest(out: Path, manifest: dict) -> None:
    manifest["files"] = sorted(manifest["files"]) + ["manifest.json"]
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _simulate(cfg, modes):
    try:
        plant = synthesize(cfg)
        traces = {m: run_apf(plant, ApfConfig(mode=m)) for m in modes}
    except (VoltageCollapseError, EmdError, UndefinedMetricError, ArithmeticError) as exc:
        raise CliError(EXIT_COMPUTE, f"simulation failed: {exc}") from None
    return plant, traces


def cmd_run(scenario: str, mode: str, out: str) -> int:
    cfg, text = _load(scenario)
    modes = MODE_ALIASES[mode]
    plant, traces = _simulate(cfg, modes)
    d = _prepare_out(out)
    written = ["plant.csv"]
    try:
        plant.to_csv(d / "plant.csv")
        for m, tr in traces.items():
            tr.to_csv(d / f"trace_{m}.csv")
            metrics_to_csv(d / f"metrics_{m}.csv", cycle_metrics(tr))
            written += [f"trace_{m}.csv", f"metrics_{m}.csv"]
        _write_manifest(
            d,
            {
                "command": "run",
                "scenario": str(scenario),
                "modes": list(modes),
                "out_dir": str(out),
                "files": written,
                "config": text,
                "version": __version__,
                "scenario_fingerprint": cfg.fingerprint(),
            },
        )
    except OSError as exc:
        raise CliError(EXIT_IO, f"write failed: {exc}") from None
    return EXIT_OK


def _parse_stop(stop: str, sd: float) -> EmdConfig:
    try:
        if stop == "monotone":
            return EmdConfig(sd_threshold=sd)
        if stop.startswith("f0="):
            return EmdConfig.fundamental_locked(float(stop[3:]), sd_threshold=sd)
    except ValueError as exc:
        raise CliError(EXIT_INPUT, str(exc)) from None
    raise CliError(EXIT_INPUT, f"--stop must be 'monotone' or 'f0=<hz>', got {stop!r}")


def cmd_decompose(csv_in: str, sd: float, stop: str, out: str) -> int:
    cfg = _parse_stop(stop, sd)
    try:
        header, data = read_csv(csv_in)
    except OSError as exc:
        raise CliError(EXIT_INPUT, f"cannot read {csv_in}: {exc.strerror}") from None
    except ValueError as exc:
        raise CliError(EXIT_INPUT, str(exc)) from None
    if len(header) != 2 or header[0] != "time":
        raise CliError(EXIT_INPUT, f"{csv_in}: expected columns 'time,<value>', got {','.join(header)}")
    try:
        x = series_from_columns(data[:, 0], data[:, 1])
    except (AlignmentError, ValueError) as exc:
        raise CliError(EXIT_INPUT, f"{csv_in}: {exc}") from None
    try:
        d = decompose(x, cfg)
    except EmdError as exc:
        raise CliError(EXIT_COMPUTE, f"decomposition failed: {exc}") from None
    err = float(np.max(np.abs(reconstruct(d).samples - x.samples)))
    rel = err / x.peak() if x.peak() else err
    out_dir = _prepare_out(out)
    try:
        decomposition_to_csv(d, out_dir / "decomposition.csv")
        (out_dir / "summary.txt").write_text(
            f"imfs: {len(d.imfs)}\n"
            f"converged: {','.join(str(int(i.converged)) for i in d.imfs)}\n"
            f"reconstruction max abs error: {err!r}\n"
            f"reconstruction error relative to peak: {rel!r}\n"
        )
        _write_manifest(
            out_dir,
            {
                "command": "decompose",
                "input": str(csv_in),
                "out_dir": str(out),
                "files": ["decomposition.csv", "summary.txt"],
                "config": {"sd_threshold": sd, "stop": stop},
                "version": __version__,
                "source_fingerprint": d.source_fingerprint,
            },
        )
    except OSError as exc:
        raise CliError(EXIT_IO, f"write failed: {exc}") from None
    return EXIT_OK


PLOT_SCRIPT = """\
# gnuplot script: source-side comparison, baseline (left) and EMD-enhanced (right)
set datafile separator ","
set key autotitle columnhead
set terminal pngcairo size 1400,1200
set output "compare.png"
set multiplot layout 4,2
set xlabel "time [s]"
do for [m in "baseline emd_enhanced"] {{
  set title "load currents (".m.")"
  plot for [c=2:4] "trace_".m.".csv" using 1:c with lines
}}
do for [m in "baseline emd_enhanced"] {{
  set title "source currents (".m.")"
  plot for [c=13:15] "trace_".m.".csv" using 1:c with lines
}}
do for [m in "baseline emd_enhanced"] {{
  set title "p and q (".m.")"
  set xrange [{w0}:{w1}]
  plot "trace_".m.".csv" using 1:17 with lines, "" using 1:18 with lines
  unset xrange
}}
set xlabel "cycle"
set title "power factor per cycle"
plot "comparison.csv" using (strcol(1) eq "baseline" ? $2 : 1/0):9 with linespoints title "baseline", \\
     "comparison.csv" using (strcol(1) eq "emd_enhanced" ? $2 : 1/0):9 with linespoints title "emd_enhanced"
set title "line 3 THD per cycle"
plot "comparison.csv" using (strcol(1) eq "baseline" ? $2 : 1/0):12 with linespoints title "baseline", \\
     "comparison.csv" using (strcol(1) eq "emd_enhanced" ? $2 : 1/0):12 with linespoints title "emd_enhanced"
unset multiplot
"""


def cmd_compare(scenario: str, out: str) -> int:
    cfg, text = _load(scenario)
    plant, traces = _simulate(cfg, ("baseline", "emd_enhanced"))
    try:
        report = compare(traces["baseline"], traces["emd_enhanced"])
    except (UndefinedMetricError, WindowError) as exc:
        raise CliError(EXIT_COMPUTE, f"comparison failed: {exc}") from None
    d = _prepare_out(out)
    files_ = ["plant.csv", "comparison.csv", "comparison.txt", "plot_compare.gp"]
    try:
        plant.to_csv(d / "plant.csv")
        for m, tr in traces.items():
            tr.to_csv(d / f"trace_{m}.csv")
            files_.append(f"trace_{m}.csv")
        report.to_csv(d / "comparison.csv")
        (d / "comparison.txt").write_text(report.summary())
        w0, w1 = report.window
        (d / "plot_compare.gp").write_text(PLOT_SCRIPT.format(w0=w0, w1=w1))
        _write_manifest(
            d,
            {
                "command": "compare",
                "scenario": str(scenario),
                "modes": ["baseline", "emd_enhanced"],
                "out_dir": str(out),
                "files": files_,
                "config": text,
                "version": __version__,
                "scenario_fingerprint": cfg.fingerprint(),
            },
        )
    except OSError as exc:
        raise CliError(EXIT_IO, f"write failed: {exc}") from None
    print(report.summary(), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="emdapf", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a scenario in one or both modes")
    run.add_argument("--scenario", default=str(default_scenario_path()))
    run.add_argument("--mode", choices=sorted(MODE_ALIASES), default="both")
    run.add_argument("--out", required=True)

    dec = sub.add_parser("decompose", help="EMD of a time,value CSV")
    dec.add_argument("--in", dest="csv_in", required=True)
    dec.add_argument("--sd", type=float, default=0.25)
    dec.add_argument("--stop", default="monotone", help="'monotone' or 'f0=<hz>'")
    dec.add_argument("--out", required=True)

    cmp_ = sub.add_parser("compare", help="run both modes and compare them")
    cmp_.add_argument("--scenario", default=str(default_scenario_path()))
    cmp_.add_argument("--out", required=True)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "run":
            return cmd_run(args.scenario, args.mode, args.out)
        if args.command == "decompose":
            return cmd_decompose(args.csv_in, args.sd, args.stop, args.out)
        return cmd_compare(args.scenario, args.out)
    except CliError as exc:
        print(f"emdapf: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
