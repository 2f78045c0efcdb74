"""Command-line front end.

Five subcommands sharing one option surface:

  simulate   one path -> path.csv
  estimate   stored path -> report.json
  detect     stored path -> detection.csv + report.json
  mc         repeated paths -> summary.json + hist.csv
  compare    estimator efficiency -> efficiency.csv

Every run also writes manifest.json: the resolved configuration, seed, RNG
id, and sha256 of each output. replay_manifest() re-executes a manifest and
must reproduce the other files byte-for-byte.

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys

from . import __version__
from .config import RunSettings, load_config_file, merge_settings, resolve_seed
from .errors import ConfigError, JumpsiftError
from .estimators import detect_jumps, estimation_report
from .models import CustomModel
from .montecarlo import efficiency_comparison, run_experiment
from .serialize import (
    build_manifest,
    config_to_dict,
    file_sha256,
    read_path_csv,
    report_to_dict,
    summary_to_dict,
    write_detection_csv,
    write_efficiency_csv,
    write_histogram_csv,
    write_json,
    write_path_csv,
)
from .simulate import RNG_ALGORITHM, path_seed, simulate

_NEEDS_INPUT = {"estimate", "detect"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jumpsift",
        description="Simulation and threshold estimation of integrated variance under jumps.")
    parser.add_argument("--version", action="version", version=f"jumpsift {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("simulate", "simulate one path and write it as CSV"),
        ("estimate", "estimate integrated variance from a stored path"),
        ("detect", "flag jump intervals in a stored path"),
        ("mc", "repeated-path experiment with normality diagnostics"),
        ("compare", "threshold vs bipower efficiency on a jump-free model"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--preset", help="named preset, e.g. model1-desk")
        p.add_argument("--config", help="key-value config file")
        p.add_argument("--seed", type=int, help="base seed (else $JUMPSIFT_SEED, else default)")
        p.add_argument("--n", type=int, help="observation intervals per path")
        p.add_argument("--paths", type=int, help="number of Monte Carlo paths")
        p.add_argument("--beta", type=float, help="threshold exponent in r(h) = c * h^beta")
        p.add_argument("--scale-c", type=float, dest="scale_c", help="threshold scale c")
        p.add_argument("--substeps", type=int, help="simulation substeps per interval")
        p.add_argument("--jitter", type=float, help="grid irregularity in [0, 1)")
        p.add_argument("--parallelism", type=int, help="worker processes (results unaffected)")
        p.add_argument("--out", default=".", help="output directory (default: current)")
        if name in _NEEDS_INPUT:
            p.add_argument("--in", dest="input", help="path CSV to read")
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return int(code) if isinstance(code, int) else 2
    try:
        settings = _settings_from_args(args)
        out_dir = args.out
        os.makedirs(out_dir, exist_ok=True)
        outputs = _dispatch(args.command, settings, out_dir,
                            getattr(args, "input", None))
    except ConfigError as exc:
        print(f"jumpsift: config error: {exc}", file=sys.stderr)
        return 2
    except (JumpsiftError, OSError) as exc:
        print(f"jumpsift: error: {exc}", file=sys.stderr)
        return 3
    for name in outputs:
        print(os.path.join(out_dir, name))
    return 0


def _settings_from_args(args) -> RunSettings:
    if args.command in _NEEDS_INPUT and not getattr(args, "input", None):
        raise ConfigError(f"{args.command} requires --in")
    file_values = load_config_file(args.config) if args.config else None
    default_preset = None
    if args.config is None and args.preset is None:
        default_preset = "diffusion-desk" if args.command == "compare" else "model1-desk"
    overrides = {
        "n": args.n,
        "paths": args.paths,
        "beta": args.beta,
        "scale_c": args.scale_c,
        "substeps": args.substeps,
        "jitter": args.jitter,
        "parallelism": args.parallelism,
    }
    settings = merge_settings(file_values, overrides,
                              preset=args.preset or default_preset)
    seed = resolve_seed(args.seed if args.seed is not None else settings.seed)
    return settings.with_seed(seed)


def _dispatch(command: str, settings: RunSettings, out_dir: str,
              input_path: str | None) -> list[str]:
    if command == "simulate":
        return _run_simulate(settings, out_dir)
    if command == "estimate":
        return _run_estimate(settings, out_dir, input_path)
    if command == "detect":
        return _run_detect(settings, out_dir, input_path)
    if command == "mc":
        return _run_mc(settings, out_dir)
    if command == "compare":
        return _run_compare(settings, out_dir)
    raise ConfigError(f"unknown command {command!r}")


def _run_simulate(settings: RunSettings, out_dir: str) -> list[str]:
    cfg = settings.experiment()
    path = simulate(cfg.model, cfg.build_grid(), cfg.substeps,
                    path_seed(cfg.base_seed, 0))
    write_path_csv(path, os.path.join(out_dir, "path.csv"))
    return _finish("simulate", settings, out_dir, ["path.csv"])


def _run_estimate(settings: RunSettings, out_dir: str, input_path: str) -> list[str]:
    path = read_path_csv(input_path)
    report = estimation_report(path, settings.threshold())
    write_json(os.path.join(out_dir, "report.json"), report_to_dict(report, path))
    return _finish("estimate", settings, out_dir, ["report.json"],
                   inputs=[input_path])


def _run_detect(settings: RunSettings, out_dir: str, input_path: str) -> list[str]:
    path = read_path_csv(input_path)
    spec = settings.threshold()
    det = detect_jumps(path, spec)
    report = estimation_report(path, spec)
    write_detection_csv(path, det, os.path.join(out_dir, "detection.csv"))
    write_json(os.path.join(out_dir, "report.json"), report_to_dict(report, path))
    return _finish("detect", settings, out_dir, ["detection.csv", "report.json"],
                   inputs=[input_path])


def _run_mc(settings: RunSettings, out_dir: str) -> list[str]:
    summary = run_experiment(settings.experiment())
    write_json(os.path.join(out_dir, "summary.json"), summary_to_dict(summary))
    names = ["summary.json"]
    if summary.histogram is not None:
        write_histogram_csv(summary.histogram, os.path.join(out_dir, "hist.csv"))
        names.append("hist.csv")
    return _finish("mc", settings, out_dir, names)


def _run_compare(settings: RunSettings, out_dir: str) -> list[str]:
    table = efficiency_comparison(settings.experiment())
    write_efficiency_csv(table, os.path.join(out_dir, "efficiency.csv"))
    return _finish("compare", settings, out_dir, ["efficiency.csv"])


def _finish(command: str, settings: RunSettings, out_dir: str,
            outputs: list[str], inputs: list[str] | None = None) -> list[str]:
    manifest = build_manifest(
        command=command,
        config=_settings_echo(settings),
        base_seed=settings.seed,
        rng_id=RNG_ALGORITHM,
        version=__version__,
        created_utc=datetime.datetime.now(datetime.timezone.utc)
                    .isoformat(timespec="seconds"),
        out_dir=out_dir,
        outputs=outputs,
    )
    if inputs:
        manifest["inputs"] = [{"file": name, "sha256": file_sha256(name)}
                              for name in inputs]
    write_json(os.path.join(out_dir, "manifest.json"), manifest)
    return outputs + ["manifest.json"]


def _settings_echo(settings: RunSettings) -> dict:
    """Scalar key-value echo; feeding it back through merge_settings yields
    the same RunSettings, which is what replay_manifest relies on."""
    model = settings.model
    out: dict = {}
    if isinstance(model, CustomModel):
        out["model"] = "custom"
        out["drift"] = model.drift
        out["spot_vol"] = model.spot_vol
        out["jumps"] = model.jumps
    else:
        out["model"] = {"Model1": "model1", "Model2": "model2",
                        "Model3": "model3"}[type(model).__name__]
    out.update(
        n=settings.n,
        t=settings.t_end,
        paths=settings.n_paths,
        beta=settings.beta,
        scale_c=settings.scale_c,
        substeps=settings.substeps,
        jitter=settings.jitter,
        parallelism=settings.parallelism,
        seed=settings.seed,
    )
    return out


def replay_manifest(manifest_path: str, out_dir: str) -> list[str]:
    """Re-executes the run a manifest describes, writing into out_dir.

    All outputs except the manifest's created_utc field are byte-identical
    to the original run.
    """
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    for key in ("command", "config", "base_seed"):
        if key not in manifest:
            raise ConfigError(f"{manifest_path}: manifest lacks {key!r}")
    echo = manifest["config"]
    raw = {k: _scalar_to_str(v) for k, v in echo.items()}
    settings = merge_settings(file_values=None, overrides=raw)
    settings = settings.with_seed(int(manifest["base_seed"]))
    inputs = manifest.get("inputs") or []
    input_path = inputs[0]["file"] if inputs else None
    os.makedirs(out_dir, exist_ok=True)
    return _dispatch(manifest["command"], settings, out_dir, input_path)


def _scalar_to_str(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


if __name__ == "__main__":
    sys.exit(main())
