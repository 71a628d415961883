"""Simulate and bound retraining of linear classifiers on noisy labels.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import os
import sys

from . import __version__
from .bounds import BOUNDS_CSV_HEADER, bound_table_row
from .config import Config, ConfigError
from .datagen import sample_dataset, write_dataset_csv
from .experiments import (
    phase_diagram,
    reproduce_figure1,
    run_sweep,
    write_figure1_outputs,
    write_phase_csv,
    write_phase_svg,
    write_sweep_csv,
)

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _write_manifest(path, command, config, seed, started, outputs, extra=None):
    manifest = {
        "command": command,
        "version": __version__,
        "seed": seed,
        "config": dict(sorted(config.values.items())),
        "started": started,
        "finished": _now(),
        "outputs": outputs,
    }
    if extra:
        manifest.update(extra)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _with_seed(config, seed):
    # the resolved seed is echoed into the config so the manifest reruns as-is
    values = dict(config.values)
    values["seed"] = str(seed)
    return Config(values)


def _load(args, required=True):
    if args.config is None:
        if required:
            raise UsageError("--config is required for this command")
        return Config({})
    return Config.load(args.config)


def _require_out(args):
    if not args.out:
        raise UsageError("--out is required")
    return args.out


def _ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path


def _ensure_parent(path):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def _check_csv_format(args):
    if args.format not in (None, "csv"):
        raise UsageError(f"--format {args.format} is not supported by this command")


def cmd_generate(args):
    _check_csv_format(args)
    config = _load(args)
    seed = config.seed(args.seed)
    config = _with_seed(config, seed)
    spec, noise = config.problem(), config.noise()
    n = config.get_int("data.n")
    if n < 1:
        raise ConfigError("data.n must be >= 1")
    out = _require_out(args)
    started = _now()
    _ensure_parent(out)
    data = sample_dataset(spec, noise, n, seed)
    write_dataset_csv(data, out)
    _write_manifest(out + ".manifest.json", "generate", config, seed, started, [out], {"flags": list(data.flags)})
    return EXIT_OK


def cmd_bounds(args):
    _check_csv_format(args)
    config = _load(args)
    grid = config.bound_grid()
    out = _require_out(args)
    started = _now()
    _ensure_parent(out)
    c1, c2 = config.get_float("window.c1", 1.0), config.get_float("window.c2", 1.0)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(BOUNDS_CSV_HEADER.split(","))
        for inputs in grid:
            writer.writerow(bound_table_row(inputs, c1, c2))
    _write_manifest(out + ".manifest.json", "bounds", config, config.seed(args.seed), started, [out])
    return EXIT_OK


def _trials(args, config, default=50):
    trials = args.trials if args.trials is not None else config.get_int("sweep.trials", default)
    if trials < 1:
        raise UsageError("--trials must be >= 1")
    return trials


def cmd_sweep(args):
    _check_csv_format(args)
    config = _load(args)
    seed = config.seed(args.seed)
    trials = _trials(args, config)
    values = dict(config.values, **{"sweep.trials": str(trials)})
    config = _with_seed(Config(values), seed)
    grid = config.sweep_grid(seed)
    out = _ensure_dir(_require_out(args))
    started = _now()
    report = run_sweep(grid, trials, args.threads)
    path = os.path.join(out, "sweep.csv")
    write_sweep_csv(report, path)
    _write_manifest(os.path.join(out, "manifest.json"), "sweep", config, seed, started, [path])
    return EXIT_OK


def cmd_figure1(args):
    _check_csv_format(args)
    config = _load(args, required=False)
    seed = config.seed(args.seed)
    trials = _trials(args, config)
    config = _with_seed(Config(dict(config.values, **{"sweep.trials": str(trials)})), seed)
    out = _ensure_dir(_require_out(args))
    started = _now()
    result = reproduce_figure1(seed, trials, args.threads)
    paths = write_figure1_outputs(result, out)
    _write_manifest(
        os.path.join(out, "manifest.json"), "figure1", config, seed, started,
        [paths["large_sep"], paths["small_sep"], paths["summary"]],
    )
    with open(paths["summary"], encoding="utf-8") as fh:
        sys.stdout.write(fh.read())
    return EXIT_OK


def cmd_phase(args):
    fmt = args.format or "svg"
    if fmt not in ("csv", "svg"):
        raise UsageError(f"--format must be csv or svg, got {fmt}")
    config = _load(args)
    seed = config.seed(args.seed)
    trials = _trials(args, config)
    config = _with_seed(Config(dict(config.values, **{"sweep.trials": str(trials)})), seed)
    grid = config.sweep_grid(seed)
    if len(grid.d_axis) != 1 or len(grid.gamma_axis) != 1 or len(grid.noise_axis) != 1:
        raise ConfigError("phase diagrams need single values for grid.d, grid.p (or grid.epsilon) and grid.gamma")
    out = _ensure_dir(_require_out(args))
    started = _now()
    phase = phase_diagram(
        grid.d_axis[0],
        grid.noise_axis[0].flip_probability,
        grid.gamma_axis[0],
        grid.n_axis,
        trials,
        margin_dist=grid.margin_dist,
        master_seed=seed,
        threads=args.threads,
        c1=grid.window_c1,
        c2=grid.window_c2,
        level=config.get_float("phase.level", 0.99),
        test_mode=grid.test_mode,
    )
    outputs = [os.path.join(out, "phase.csv"), os.path.join(out, "sweep.csv")]
    write_phase_csv(phase, outputs[0])
    write_sweep_csv(phase.report, outputs[1])
    if fmt == "svg":
        outputs.append(os.path.join(out, "phase.svg"))
        write_phase_svg(phase, outputs[-1])
    _write_manifest(os.path.join(out, "manifest.json"), "phase", config, seed, started, outputs)
    return EXIT_OK


COMMANDS = {
    "generate": (cmd_generate, "sample a dataset and write it as CSV"),
    "bounds": (cmd_bounds, "tabulate every closed-form bound over a grid"),
    "sweep": (cmd_sweep, "run seeded trials over a parameter grid"),
    "figure1": (cmd_figure1, "reproduce the two-panel retraining illustration"),
    "phase": (cmd_phase, "accuracy gain of retraining vs. n, with the analytic window"),
}


def build_parser():
    parser = _Parser(prog="retrainlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"retrainlab {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="key = value config file, or a manifest.json from an earlier run")
        p.add_argument("--out", help="output file (generate, bounds) or directory (others)")
        p.add_argument("--seed", type=int, help="master seed; overrides the config (default 42)")
        p.add_argument("--trials", type=int, help="trials per grid cell (default 50)")
        p.add_argument("--threads", type=int, default=1, help="worker threads, 0 = all cores; outputs do not depend on it")
        p.add_argument("--format", choices=("csv", "svg"), help="output format; svg is only meaningful for phase")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = COMMANDS[args.command][0]
    try:
        return handler(args)
    except (ConfigError, UsageError) as exc:
        print(f"retrainlab {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - any runtime failure maps to exit 2
        print(f"retrainlab {args.command}: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
