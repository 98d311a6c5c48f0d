"""Command-line surface: config parsing, experiment orchestration, artifact
emission.

Configs are INI-style key/value text (one assignment per line, bracketed
section headers).  Every run writes its artifacts plus a manifest.json
into the output directory; CSV output is deterministic given the seed.

Exit codes: 0 success, 2 config error, 3 numerical failure,
4 inconclusive experiment.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import configparser
import csv
import json
import os
import sys
import time
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import __version__
from .errors import (
    ConfigurationError,
    ConvergenceError,
    EstimationError,
    InstabilityError,
    OracleError,
)
from .grid import GridSpec, save_checkpoint
from .ground_state import solve_petviashvili
from .multiplier import MultiplierProfile, run_all_audits
from .dynamics import SolverConfig, evolve
from .diagnostics import almost_conservation_experiment, concentration_scan
from .initial_data import make_initial
from .theory import DEFAULT_PARAMS, p_of_s, s_q, n_exponent

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_INCONCLUSIVE = 4

EXPERIMENTS = (
    "ground_state",
    "evolve",
    "concentrate",
    "almost_conservation",
    "multiplier_audit",
    "theory",
)

# section -> allowed keys; anything else is rejected by name
_SCHEMA = {
    "run": {"experiment", "s", "seed", "output_dir"},
    "grid": {"extent", "points"},
    "initial": {"kind", "amplitude", "width", "path", "seed", "decay", "l2norm"},
    "solver": {
        "dt_initial",
        "dt_floor",
        "cfl_safety",
        "gradient_ceiling",
        "tail_threshold",
        "record_stride",
        "checkpoint_growth",
    },
    "multiplier": {"cutoff", "cutoffs", "transition"},
    "experiment": {
        "t_end",
        "threshold",
        "c0",
        "samples",
        "s_min",
        "s_max",
        "s_points",
    },
}


@dataclass
class RunConfig:
    experiment: str = "theory"
    s: float = 0.9
    seed: int = 0
    output_dir: str = "."
    grid: GridSpec = dc_field(default_factory=lambda: GridSpec(16.0, 256))
    initial_kind: str = "gaussian"
    initial_params: dict = dc_field(default_factory=dict)
    cutoff: float = 32.0
    cutoffs: tuple = (8.0, 16.0, 32.0, 64.0)
    transition: str = "hermite"
    solver: SolverConfig = dc_field(default_factory=SolverConfig)
    t_end: float = 1.0
    threshold: float = 0.9
    c0: float | None = None
    samples: int = 100000
    s_min: float = 0.87
    s_max: float = 0.99
    s_points: int = 100

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "s": self.s,
            "seed": self.seed,
            "output_dir": self.output_dir,
            "grid": {"extent": self.grid.extent, "points": self.grid.points},
            "initial": {"kind": self.initial_kind, **self.initial_params},
            "multiplier": {
                "cutoff": self.cutoff,
                "cutoffs": list(self.cutoffs),
                "transition": self.transition,
            },
            "solver": {
                "dt_initial": self.solver.dt_initial,
                "dt_floor": self.solver.dt_floor,
                "cfl_safety": self.solver.cfl_safety,
                "gradient_ceiling": self.solver.gradient_ceiling,
                "tail_threshold": self.solver.tail_threshold,
                "record_stride": self.solver.record_stride,
                "checkpoint_growth": self.solver.checkpoint_growth,
            },
            "t_end": self.t_end,
            "threshold": self.threshold,
            "c0": self.c0,
            "samples": self.samples,
            "s_grid": [self.s_min, self.s_max, self.s_points],
        }


def _get(parser, section, key, cast, default):
    if not parser.has_option(section, key):
        return default
    raw = parser.get(section, key)
    try:
        return cast(raw)
    except (TypeError, ValueError):
        raise ConfigurationError(
            f"value {raw!r} for key `{key}` in [{section}] is not a valid "
            f"{cast.__name__}"
        )


def parse_config(text: str) -> RunConfig:
    """Structured key/value text -> validated RunConfig with defaults."""
    parser = configparser.ConfigParser(
        delimiters=("=",), comment_prefixes=("#", ";"), interpolation=None
    )
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"config parse error: {exc}")

    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigurationError(f"unknown config section [{section}]")
        for key in parser.options(section):
            if key not in _SCHEMA[section]:
                raise ConfigurationError(
                    f"unknown key `{key}` in section [{section}]"
                )

    cfg = RunConfig()
    cfg.experiment = _get(parser, "run", "experiment", str, cfg.experiment)
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigurationError(
            f"key `experiment` must be one of {', '.join(EXPERIMENTS)}; "
            f"got {cfg.experiment!r}"
        )
    cfg.s = _get(parser, "run", "s", float, cfg.s)
    if not (0.0 < cfg.s < 1.0):
        raise ConfigurationError(f"key `s` must lie in (0, 1); got {cfg.s}")
    cfg.seed = _get(parser, "run", "seed", int, cfg.seed)
    if cfg.seed < 0:
        raise ConfigurationError(f"key `seed` must be >= 0; got {cfg.seed}")
    cfg.output_dir = _get(parser, "run", "output_dir", str, cfg.output_dir)

    extent = _get(parser, "grid", "extent", float, cfg.grid.extent)
    points = _get(parser, "grid", "points", int, cfg.grid.points)
    try:
        cfg.grid = GridSpec(extent, points)
    except (ConfigurationError, ValueError) as exc:
        raise ConfigurationError(f"invalid [grid] section: {exc}")

    cfg.initial_kind = _get(parser, "initial", "kind", str, cfg.initial_kind)
    if cfg.initial_kind not in ("gaussian", "townes", "file", "random_seeded"):
        raise ConfigurationError(
            f"key `kind` must be gaussian, townes, file or random_seeded; "
            f"got {cfg.initial_kind!r}"
        )
    params = {}
    if cfg.initial_kind == "gaussian":
        params["amplitude"] = _get(parser, "initial", "amplitude", float, 1.0)
        params["width"] = _get(parser, "initial", "width", float, 1.0)
        if params["width"] <= 0:
            raise ConfigurationError(
                f"key `width` must be positive; got {params['width']}"
            )
    elif cfg.initial_kind == "random_seeded":
        params["seed"] = _get(parser, "initial", "seed", int, cfg.seed)
        params["decay"] = _get(parser, "initial", "decay", float, 1.9)
        params["l2norm"] = _get(parser, "initial", "l2norm", float, 2.0)
    elif cfg.initial_kind == "file":
        path = _get(parser, "initial", "path", str, None)
        if path is None:
            raise ConfigurationError("initial kind `file` requires key `path`")
        if not os.path.exists(path):
            raise ConfigurationError(f"key `path`: no such file {path!r}")
        params["path"] = path
    cfg.initial_params = params

    cfg.cutoff = _get(parser, "multiplier", "cutoff", float, cfg.cutoff)
    if cfg.cutoff <= 0:
        raise ConfigurationError(f"key `cutoff` must be positive; got {cfg.cutoff}")
    raw_cutoffs = _get(parser, "multiplier", "cutoffs", str, None)
    if raw_cutoffs is not None:
        try:
            cfg.cutoffs = tuple(float(x) for x in raw_cutoffs.split(","))
        except ValueError:
            raise ConfigurationError(
                f"key `cutoffs` must be a comma-separated list of numbers; "
                f"got {raw_cutoffs!r}"
            )
    cfg.transition = _get(parser, "multiplier", "transition", str, cfg.transition)
    if cfg.transition not in ("hermite", "linear"):
        raise ConfigurationError(
            f"key `transition` must be hermite or linear; got {cfg.transition!r}"
        )

    try:
        cfg.solver = SolverConfig(
            dt_initial=_get(parser, "solver", "dt_initial", float, 1e-3),
            dt_floor=_get(parser, "solver", "dt_floor", float, 1e-9),
            cfl_safety=_get(parser, "solver", "cfl_safety", float, 0.1),
            gradient_ceiling=_get(parser, "solver", "gradient_ceiling", float, 1e4),
            tail_threshold=_get(parser, "solver", "tail_threshold", float, 1e-6),
            record_stride=_get(parser, "solver", "record_stride", int, 10),
            checkpoint_growth=_get(parser, "solver", "checkpoint_growth", float, 1.4),
        )
    except ConfigurationError as exc:
        raise ConfigurationError(f"invalid [solver] section: {exc}")

    cfg.t_end = _get(parser, "experiment", "t_end", float, cfg.t_end)
    if cfg.t_end <= 0:
        raise ConfigurationError(f"key `t_end` must be positive; got {cfg.t_end}")
    cfg.threshold = _get(parser, "experiment", "threshold", float, cfg.threshold)
    cfg.c0 = _get(parser, "experiment", "c0", float, cfg.c0)
    cfg.samples = _get(parser, "experiment", "samples", int, cfg.samples)
    if cfg.samples < 1:
        raise ConfigurationError(f"key `samples` must be >= 1; got {cfg.samples}")
    cfg.s_min = _get(parser, "experiment", "s_min", float, cfg.s_min)
    cfg.s_max = _get(parser, "experiment", "s_max", float, cfg.s_max)
    cfg.s_points = _get(parser, "experiment", "s_points", int, cfg.s_points)
    if not (s_q() < cfg.s_min < cfg.s_max < 1.0):
        raise ConfigurationError(
            "keys `s_min`/`s_max` must satisfy "
            f"s_Q < s_min < s_max < 1; got {cfg.s_min}, {cfg.s_max}"
        )
    if cfg.s_points < 2:
        raise ConfigurationError(f"key `s_points` must be >= 2; got {cfg.s_points}")
    return cfg


def serialize_config(cfg: RunConfig) -> str:
    """Config text that parse_config maps back to the same RunConfig."""
    lines = [
        "[run]",
        f"experiment = {cfg.experiment}",
        f"s = {cfg.s:.17g}",
        f"seed = {cfg.seed}",
        f"output_dir = {cfg.output_dir}",
        "",
        "[grid]",
        f"extent = {cfg.grid.extent:.17g}",
        f"points = {cfg.grid.points}",
        "",
        "[initial]",
        f"kind = {cfg.initial_kind}",
    ]
    for key, val in cfg.initial_params.items():
        if isinstance(val, float):
            lines.append(f"{key} = {val:.17g}")
        else:
            lines.append(f"{key} = {val}")
    lines += [
        "",
        "[multiplier]",
        f"cutoff = {cfg.cutoff:.17g}",
        "cutoffs = " + ",".join(f"{n:.17g}" for n in cfg.cutoffs),
        f"transition = {cfg.transition}",
        "",
        "[solver]",
        f"dt_initial = {cfg.solver.dt_initial:.17g}",
        f"dt_floor = {cfg.solver.dt_floor:.17g}",
        f"cfl_safety = {cfg.solver.cfl_safety:.17g}",
        f"gradient_ceiling = {cfg.solver.gradient_ceiling:.17g}",
        f"tail_threshold = {cfg.solver.tail_threshold:.17g}",
        f"record_stride = {cfg.solver.record_stride}",
        f"checkpoint_growth = {cfg.solver.checkpoint_growth:.17g}",
        "",
        "[experiment]",
        f"t_end = {cfg.t_end:.17g}",
        f"threshold = {cfg.threshold:.17g}",
        f"samples = {cfg.samples}",
        f"s_min = {cfg.s_min:.17g}",
        f"s_max = {cfg.s_max:.17g}",
        f"s_points = {cfg.s_points}",
    ]
    if cfg.c0 is not None:
        lines.append(f"c0 = {cfg.c0:.17g}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# experiment runners; each returns an exit code and writes into out_dir


def _run_ground_state(cfg: RunConfig, out):
    ground = solve_petviashvili(grid=cfg.grid)
    ground.write_profile_csv(os.path.join(out, "profile.csv"))
    with open(os.path.join(out, "ground_state.json"), "w") as fh:
        fh.write(ground.to_json())
    return EXIT_OK


def _evolve_once(cfg: RunConfig, out):
    u0 = make_initial(cfg.initial_kind, cfg.grid, **cfg.initial_params)
    profile = MultiplierProfile(cfg.cutoff, cfg.s, transition=cfg.transition)
    record, report = evolve(u0, cfg.solver, cfg.t_end, s=cfg.s, profile=profile)
    record.write_csv(os.path.join(out, "series.csv"))
    with open(os.path.join(out, "report.json"), "w") as fh:
        fh.write(report.to_json())
    t_last, last = record.checkpoints[-1]
    save_checkpoint(os.path.join(out, "final.nls"), last, t_last)
    return record, report


def _run_evolve(cfg: RunConfig, out):
    _evolve_once(cfg, out)
    return EXIT_OK


def _run_concentrate(cfg: RunConfig, out):
    record, report = _evolve_once(cfg, out)
    if report.t_star is None:
        raise EstimationError(
            "no blowup detected; concentration scan needs a finite t_star"
        )
    ground = solve_petviashvili(grid=cfg.grid)
    scan = concentration_scan(record, report.t_star, cfg.s, ground.l2norm)
    scan.write_csv(os.path.join(out, "concentration.csv"))
    with open(os.path.join(out, "concentration.json"), "w") as fh:
        fh.write(scan.to_json())
    return EXIT_OK


def _run_almost_conservation(cfg: RunConfig, out):
    u0 = make_initial(cfg.initial_kind, cfg.grid, **cfg.initial_params)
    fit = almost_conservation_experiment(
        u0, cfg.s, list(cfg.cutoffs), cfg.solver, c0=cfg.c0,
        transition=cfg.transition,
    )
    with open(os.path.join(out, "decay.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["N", "window", "increment"])
        for n, w, inc in zip(fit.cutoffs, fit.windows, fit.increments):
            writer.writerow([f"{n:.17g}", f"{w:.17g}", f"{inc:.17g}"])
    with open(os.path.join(out, "decay.json"), "w") as fh:
        fh.write(fit.to_json())
    return EXIT_INCONCLUSIVE if fit.inconclusive else EXIT_OK


def _run_multiplier_audit(cfg: RunConfig, out):
    results = []
    failed = False
    for n in cfg.cutoffs:
        profile = MultiplierProfile(float(n), cfg.s, transition=cfg.transition)
        for report in run_all_audits(profile, cfg.samples, cfg.seed):
            results.append({"cutoff": float(n), **json.loads(report.to_json())})
            failed = failed or report.violations > 0
    with open(os.path.join(out, "audits.json"), "w") as fh:
        json.dump(results, fh, indent=1)
    return EXIT_NUMERICAL if failed else EXIT_OK


def _run_theory(cfg: RunConfig, out):
    svals = np.linspace(cfg.s_min, cfg.s_max, cfg.s_points)
    with open(os.path.join(out, "theory.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["s", "p", "n_exponent"])
        for s in svals:
            writer.writerow(
                [f"{s:.17g}", f"{p_of_s(s):.17g}", f"{n_exponent(s):.17g}"]
            )
    with open(os.path.join(out, "theory.json"), "w") as fh:
        json.dump(
            {
                "s_q": s_q(),
                "alpha4": DEFAULT_PARAMS.alpha4,
                "alpha6": DEFAULT_PARAMS.alpha6,
                "epsilon": DEFAULT_PARAMS.epsilon,
            },
            fh,
        )
    return EXIT_OK


_RUNNERS = {
    "ground_state": _run_ground_state,
    "evolve": _run_evolve,
    "concentrate": _run_concentrate,
    "almost_conservation": _run_almost_conservation,
    "multiplier_audit": _run_multiplier_audit,
    "theory": _run_theory,
}


def run(cfg: RunConfig) -> int:
    """Execute cfg's experiment, write artifacts + manifest, return exit code."""
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    start = time.monotonic()
    code = _RUNNERS[cfg.experiment](cfg, out)
    manifest = {
        "version": __version__,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "config_text": serialize_config(cfg),
        "wall_time_s": time.monotonic() - start,
        "exit_code": code,
    }
    with open(os.path.join(out, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=1)
    return code


# ---------------------------------------------------------------------------
# plots

_PLOTS = {
    "series.csv": (
        "plot_series.gp",
        "set datafile separator ','\n"
        "set logscale y\n"
        "set xlabel 't'\n"
        "set ylabel 'diagnostics'\n"
        "plot 'series.csv' using 1:4 with lines title 'kinetic', \\\n"
        "     'series.csv' using 1:5 with lines title 'lambda', \\\n"
        "     'series.csv' using 1:7 with lines title 'sigma'\n",
    ),
    "concentration.csv": (
        "plot_concentration.gp",
        "set datafile separator ','\n"
        "set xlabel 't'\n"
        "set ylabel 'mass in window'\n"
        "plot 'concentration.csv' using 1:3 with linespoints title 'ball mass', \\\n"
        "     'concentration.csv' using 1:4 with linespoints title 'cube sup'\n",
    ),
    "decay.csv": (
        "plot_decay.gp",
        "set datafile separator ','\n"
        "set logscale xy\n"
        "set xlabel 'N'\n"
        "set ylabel 'modified energy increment'\n"
        "plot 'decay.csv' using 1:3 with linespoints title 'sup increment'\n",
    ),
    "theory.csv": (
        "plot_theory.gp",
        "set datafile separator ','\n"
        "set xlabel 's'\n"
        "set ylabel 'p(s)'\n"
        "plot 'theory.csv' using 1:2 with lines title 'p(s)'\n",
    ),
}


def emit_plots(run_dir) -> list:
    """Write gnuplot scripts for whichever artifacts are present.

    Regeneration is byte-identical.  Raises FileNotFoundError naming the
    expected artifacts when none are present.
    """
    written = []
    for artifact, (name, body) in _PLOTS.items():
        if not os.path.exists(os.path.join(run_dir, artifact)):
            continue
        path = os.path.join(run_dir, name)
        header = f"# generated by critnls {__version__}; input: {artifact}\n"
        with open(path, "w") as fh:
            fh.write(header + body)
        written.append(path)
    if not written:
        expected = ", ".join(sorted(_PLOTS))
        raise FileNotFoundError(
            f"no plottable artifacts in {run_dir!r}; expected one of: {expected}"
        )
    return written


# ---------------------------------------------------------------------------
# entry point


def _error_json(exc) -> str:
    return json.dumps({"error": type(exc).__name__, "message": str(exc)})


def _run_one(path: str, experiment, out, seed) -> int:
    try:
        with open(path) as fh:
            cfg = parse_config(fh.read())
    except FileNotFoundError as exc:
        print(_error_json(exc), file=sys.stderr)
        return EXIT_CONFIG
    except ConfigurationError as exc:
        print(_error_json(exc), file=sys.stderr)
        return EXIT_CONFIG
    if experiment is not None:
        cfg.experiment = experiment
    if out is not None:
        cfg.output_dir = out
    if seed is not None:
        cfg.seed = seed
        if cfg.initial_kind == "random_seeded":
            cfg.initial_params["seed"] = seed
    try:
        return run(cfg)
    except (ConfigurationError, ValueError) as exc:
        print(_error_json(exc), file=sys.stderr)
        return EXIT_CONFIG
    except (
        InstabilityError,
        ConvergenceError,
        EstimationError,
        OracleError,
        FloatingPointError,
    ) as exc:
        print(_error_json(exc), file=sys.stderr)
        return EXIT_NUMERICAL


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="critnls",
        description="I-method experiments for the 2D critical focusing NLS",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    runnable = {
        "ground-state": "ground_state",
        "evolve": "evolve",
        "concentrate": "concentrate",
        "almost-conservation": "almost_conservation",
        "multiplier-audit": "multiplier_audit",
        "theory": "theory",
    }
    for name in runnable:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", nargs="+", required=True,
                       help="config file(s); several run as independent jobs")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--seed", type=int, help="seed override")
        p.add_argument("--jobs", type=int, default=1,
                       help="parallel workers for multi-config sweeps")
    p = sub.add_parser("plots", help="emit gnuplot scripts for a run directory")
    p.add_argument("run_dir")

    args = parser.parse_args(argv)

    if args.command == "plots":
        try:
            for path in emit_plots(args.run_dir):
                print(path)
        except FileNotFoundError as exc:
            print(_error_json(exc), file=sys.stderr)
            return EXIT_CONFIG
        return EXIT_OK

    experiment = runnable[args.command]
    if args.jobs < 1:
        print(_error_json(ValueError("--jobs must be >= 1")), file=sys.stderr)
        return EXIT_CONFIG
    configs = args.config
    if len(configs) == 1:
        return _run_one(configs[0], experiment, args.out, args.seed)

    # sweep: each config is an independent run; --out becomes a parent dir
    def out_for(path):
        if args.out is None:
            return None
        stem = os.path.splitext(os.path.basename(path))[0]
        return os.path.join(args.out, stem)

    if args.jobs == 1:
        codes = [_run_one(p, experiment, out_for(p), args.seed) for p in configs]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [
                pool.submit(_run_one, p, experiment, out_for(p), args.seed)
                for p in configs
            ]
            codes = [f.result() for f in futures]
    return max(codes)


if __name__ == "__main__":
    sys.exit(main())
