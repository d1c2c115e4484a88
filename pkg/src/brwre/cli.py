"""Command-line front end.

Every subcommand reads its parameters from flags and/or a flat JSON config
file (``--config``; keys are flag names, dashes or underscores); flags take
precedence.  Results go to stdout or ``--out`` and always embed the fully
resolved configuration.  Exit status: 0 success, 2 configuration error,
3 numerical or consistency error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import brw_sim, evolver, probability, spectral
from .env import (EnvironmentSpec, EnvironmentWindow, MuDistribution, constant_environment,
                  island_environment, sample_environment, two_point_environment)
from .errors import ConfigurationError, NumericError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

COMMANDS = ("env-sample", "spectrum", "bounds", "estimate-p", "evolve", "simulate", "sweep")
STOCHASTIC = {"estimate-p", "bounds", "simulate", "sweep"}

DEFAULTS = {
    "lambda": 1.0, "kappa": 1.0, "c": 1.0,
    "p0": 0.5, "pc": None, "p_cont": 0.0, "family": "uniform", "beta_a": 1.0, "beta_b": 1.0,
    "env": "random", "c1": 0.0, "mu1": 0.0, "mu_m1": 0.0, "island_l": 0,
    "seed": None, "half_width": spectral.DEFAULT_HALF_WIDTH, "tol": spectral.POSITIVITY_TOL,
    "threads": None, "window": None, "out": None, "format": None, "confidence": 0.95,
    "n_envs": 2000, "a_grid": "0.25,0.5,1,2,4", "l_max": 60, "n_pairs": 100000,
    "thm3_half_width": 100, "lambda_grid": None,
    "y": 0, "site": 0, "t_end": 10.0, "dt": None, "n_records": 201,
    "n_replicas": 1000, "n_times": 101, "cap": brw_sim.DEFAULT_CAP, "keep": 0,
    "replica_out": None,
}

DEFAULT_FORMAT = {"evolve": "csv", "simulate": "csv", "sweep": "csv"}


@dataclass
class RunConfig:
    command: str
    spec: EnvironmentSpec
    params: dict = field(default_factory=dict)
    output_format: str = "json"

    def to_dict(self) -> dict:
        """Flat echo; feeding it back through ``--config`` reproduces the run."""
        d = self.spec.mu_dist
        out = {"command": self.command, "lambda": self.spec.lambda_source,
               "kappa": self.spec.kappa, "c": self.spec.c, "p0": d.atom_at_zero_prob,
               "pc": d.atom_at_c_prob, "p_cont": d.continuous_weight,
               "family": d.continuous_density, "beta_a": d.beta_a, "beta_b": d.beta_b}
        out.update(self.params)
        out["format"] = self.output_format
        return out


def _fmt(x) -> str:
    return format(float(x), ".17g")


def dumps(obj) -> str:
    """JSON with every float written to 17 significant digits."""
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return json.dumps(v) if not math.isfinite(v) else _fmt(v)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigurationError(message)


def _add_common(p: argparse.ArgumentParser, stochastic_env: bool = True) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--config", default=S, help="flat JSON config file; flags override it")
    p.add_argument("--lambda", dest="lambda", type=float, default=S, help="source intensity")
    p.add_argument("--kappa", type=float, default=S, help="walk intensity")
    p.add_argument("--c", type=float, default=S, help="upper bound of killing rates")
    p.add_argument("--p0", type=float, default=S, help="mass of the atom at 0")
    p.add_argument("--pc", type=float, default=S, help="mass of the atom at c (default 1-p0-p_cont)")
    p.add_argument("--p-cont", type=float, default=S, help="mass of the continuous part")
    p.add_argument("--family", choices=["uniform", "beta"], default=S)
    p.add_argument("--beta-a", type=float, default=S)
    p.add_argument("--beta-b", type=float, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--threads", type=int, default=S, help="worker threads (env BRW_THREADS)")
    p.add_argument("--out", default=S, help="output path (default stdout)")
    p.add_argument("--format", choices=["csv", "json"], default=S)
    if stochastic_env:
        p.add_argument("--env", choices=["random", "constant", "two-point", "island"], default=S)
        p.add_argument("--c1", type=float, default=S, help="rate of a constant environment")
        p.add_argument("--mu1", type=float, default=S, help="two-point rate at x=1")
        p.add_argument("--mu-m1", type=float, default=S, help="two-point rate at x=-1")
        p.add_argument("--island-l", type=int, default=S, help="island radius")
        p.add_argument("--window", default=S, help="load the environment window from JSON")
        p.add_argument("--half-width", type=int, default=S)


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    parser = _ArgumentParser(prog="brwre", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_ArgumentParser)

    p = sub.add_parser("env-sample", help="sample or construct an environment window")
    _add_common(p)

    p = sub.add_parser("spectrum", help="top eigenvalue report of one environment")
    _add_common(p)
    p.add_argument("--tol", type=float, default=S)

    for name in ("estimate-p", "bounds", "sweep"):
        p = sub.add_parser(name, help={"estimate-p": "Monte Carlo probability of growth",
                                       "bounds": "estimate plus analytic bounds",
                                       "sweep": "bounds over a grid of source intensities"}[name])
        _add_common(p, stochastic_env=False)
        p.add_argument("--half-width", type=int, default=S)
        p.add_argument("--n-envs", type=int, default=S)
        p.add_argument("--tol", type=float, default=S)
        p.add_argument("--confidence", type=float, default=S)
        if name != "estimate-p":
            p.add_argument("--a-grid", default=S, help="comma-separated decay exponents")
            p.add_argument("--l-max", type=int, default=S)
            p.add_argument("--n-pairs", type=int, default=S)
            p.add_argument("--thm3-half-width", type=int, default=S)
        if name == "sweep":
            p.add_argument("--lambda-grid", default=S, help="start:stop:step (inclusive)")

    p = sub.add_parser("evolve", help="integrate the first-moment equation")
    _add_common(p)
    p.add_argument("--y", type=int, default=S, help="initial particle site")
    p.add_argument("--site", type=int, default=S, help="site for the growth-rate fit")
    p.add_argument("--t-end", type=float, default=S)
    p.add_argument("--dt", type=float, default=S)
    p.add_argument("--n-records", type=int, default=S)

    p = sub.add_parser("simulate", help="particle simulation, replica averages")
    _add_common(p)
    p.add_argument("--site", type=int, default=S, help="start site and growth-rate site")
    p.add_argument("--t-end", type=float, default=S)
    p.add_argument("--n-replicas", type=int, default=S)
    p.add_argument("--n-times", type=int, default=S)
    p.add_argument("--cap", type=int, default=S)
    p.add_argument("--keep", type=int, default=S, help="replicas written to --replica-out")
    p.add_argument("--replica-out", default=S)
    return parser


def _load_config_file(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigurationError("config file must hold a flat JSON object")
    return {k.replace("-", "_"): v for k, v in data.items()}


def _command_keys(parser: argparse.ArgumentParser, command: str) -> set:
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    return {a.dest for a in sub.choices[command]._actions} - {"help", "config"}


def resolve(argv) -> tuple[RunConfig, dict]:
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.command is None:
        raise ConfigurationError(f"a command is required: {', '.join(COMMANDS)}")
    flags = {k: v for k, v in vars(ns).items() if k not in ("command", "config")}
    merged = dict(DEFAULTS)
    if getattr(ns, "config", None):
        file_vals = _load_config_file(ns.config)
        if file_vals.pop("command", ns.command) != ns.command:
            raise ConfigurationError("config file was written for a different command")
        unknown = set(file_vals) - set(DEFAULTS)
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        merged.update(file_vals)
    merged.update(flags)
    if merged["threads"] is None:
        merged["threads"] = probability.default_threads()
    fmt = merged.pop("format") or DEFAULT_FORMAT.get(ns.command, "json")

    p0, p_cont = float(merged["p0"]), float(merged["p_cont"])
    pc = merged["pc"]
    pc = 1.0 - p0 - p_cont if pc is None else float(pc)
    mu_dist = MuDistribution(p0, pc, p_cont, merged["family"], float(merged["beta_a"]),
                             float(merged["beta_b"]))
    spec = EnvironmentSpec(float(merged["lambda"]), float(merged["kappa"]), float(merged["c"]),
                           mu_dist)
    needs_seed = ns.command in STOCHASTIC or (
        ns.command in ("env-sample", "spectrum", "evolve", "simulate")
        and merged["env"] == "random" and merged["window"] is None)
    if needs_seed and merged["seed"] is None:
        raise ConfigurationError(f"--seed is required for '{ns.command}'")
    keys = _command_keys(parser, ns.command) - {"format"}
    params = {k: v for k, v in merged.items()
              if k in keys and k not in ("lambda", "kappa", "c", "p0", "pc", "p_cont",
                                         "family", "beta_a", "beta_b")}
    return RunConfig(ns.command, spec, params, fmt), merged


def _window(cfg: RunConfig) -> EnvironmentWindow:
    p = cfg.params
    if p["window"]:
        with open(p["window"]) as fh:
            return EnvironmentWindow.from_json(fh.read())
    L = int(p["half_width"])
    kind = p["env"]
    if kind == "random":
        return sample_environment(cfg.spec, L, int(p["seed"]))
    if kind == "constant":
        return constant_environment(float(p["c1"]), L)
    if kind == "two-point":
        return two_point_environment(float(p["mu1"]), float(p["mu_m1"]), L)
    return island_environment(int(p["island_l"]), cfg.spec.c, L)


def _parse_grid(text: str) -> list[float]:
    try:
        start, stop, step = (float(t) for t in text.split(":"))
    except ValueError as exc:
        raise ConfigurationError(f"grid must be start:stop:step, got {text!r}") from exc
    if step <= 0 or stop < start:
        raise ConfigurationError(f"bad grid {text!r}")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [start + i * step for i in range(n)]


def _bounds_config(cfg: RunConfig) -> probability.BoundsConfig:
    p = cfg.params
    try:
        a_grid = tuple(float(a) for a in str(p["a_grid"]).split(","))
    except ValueError as exc:
        raise ConfigurationError(f"bad a_grid {p['a_grid']!r}") from exc
    return probability.BoundsConfig(
        n_envs=int(p["n_envs"]), seed=int(p["seed"]), half_width=int(p["half_width"]),
        tol=float(p["tol"]), a_grid=a_grid, thm3_half_width=int(p["thm3_half_width"]),
        n_pairs=int(p["n_pairs"]), l_max=int(p["l_max"]), confidence=float(p["confidence"]),
        threads=int(p["threads"]))


def _csv_text(cfg: RunConfig, header, rows) -> str:
    buf = io.StringIO()
    buf.write("# config: " + dumps(cfg.to_dict()) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _json_text(cfg: RunConfig, result: dict) -> str:
    return dumps({"config": cfg.to_dict(), "result": result}) + "\n"


def run(cfg: RunConfig) -> str:
    p, spec = cfg.params, cfg.spec
    cmd = cfg.command
    if cmd == "env-sample":
        w = _window(cfg)
        return _json_text(cfg, json.loads(w.to_json()))
    if cmd == "spectrum":
        report = spectral.eigen_report(_window(cfg), spec, float(p["tol"]))
        return _json_text(cfg, report.to_dict())
    if cmd == "estimate-p":
        est = probability.estimate_p_spectral(spec, int(p["n_envs"]), int(p["seed"]),
                                              int(p["half_width"]), float(p["tol"]),
                                              float(p["confidence"]), threads=int(p["threads"]))
        return _json_text(cfg, est.to_dict())
    if cmd == "bounds":
        report = probability.bounds_report(spec, _bounds_config(cfg))
        if cfg.output_format == "csv":
            return _csv_text(cfg, probability.CSV_HEADER, [report.csv_row()])
        return _json_text(cfg, report.to_dict())
    if cmd == "sweep":
        if not p["lambda_grid"]:
            raise ConfigurationError("sweep needs --lambda-grid start:stop:step")
        bc = _bounds_config(cfg)
        reports = [probability.bounds_report(spec.with_lambda(lam), bc)
                   for lam in _parse_grid(p["lambda_grid"])]
        if cfg.output_format == "json":
            return _json_text(cfg, {"rows": [dict(zip(probability.CSV_HEADER, r.csv_row()))
                                             for r in reports]})
        return _csv_text(cfg, probability.CSV_HEADER, [r.csv_row() for r in reports])
    if cmd == "evolve":
        w = _window(cfg)
        dt = None if p["dt"] is None else float(p["dt"])
        traj = evolver.integrate_moments(w, spec, int(p["y"]), float(p["t_end"]), dt,
                                         int(p["n_records"]))
        if cfg.output_format == "json":
            return _json_text(cfg, {"growth_rate": evolver.growth_rate(traj, int(p["site"])),
                                     "t_end": float(traj.times[-1]),
                                     "m1_final_at_site": float(traj.at_site(int(p["site"]))[-1])})
        return "# config: " + dumps(cfg.to_dict()) + "\n" + traj.to_csv()
    if cmd == "simulate":
        w = _window(cfg)
        times = np.linspace(0.0, float(p["t_end"]), int(p["n_times"]))
        summary = brw_sim.run_replicas(w, spec, times, int(p["n_replicas"]), int(p["seed"]),
                                       start=int(p["site"]), cap=int(p["cap"]),
                                       n_keep=int(p["keep"]), threads=int(p["threads"]))
        if p["replica_out"]:
            with open(p["replica_out"], "w") as fh:
                fh.write(summary.replica_csv())
        if cfg.output_format == "json":
            site = int(p["site"])
            return _json_text(cfg, {
                "growth_rate": evolver.fit_log_slope(times, summary.site_mean(site)),
                "n_replicas": summary.n_replicas, "n_aborted": summary.n_aborted,
                "mean_at_site_final": float(summary.site_mean(site)[-1])})
        return "# config: " + dumps(cfg.to_dict()) + "\n" + summary.aggregate_csv()
    raise ConfigurationError(f"unknown command {cmd!r}")


def dispatch(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg, _ = resolve(argv)
        text = run(cfg)
    except SystemExit as exc:        # --help
        return int(exc.code or 0)
    except (ConfigurationError, ValueError, OSError) as exc:
        print(f"brwre: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"brwre: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    out = cfg.params.get("out")
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
