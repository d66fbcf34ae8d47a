"""Command-line entry point.

Subcommands: ``spin-predict``, ``laser-posterior``, ``laser-predict``,
``simulate`` and ``verify``.  Every option may also come from a JSON file
given with ``--config``; flags on the command line override it.

Exit codes: 0 success, 1 usage or input error, 2 impossible conditioning
event, 3 verification failure.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io as qio
from .errors import ConditioningNeverSampledError, ImpossibleConditioningError
from .laser_phase import BeamParams, phase_posterior, predict_counts, predict_joint_table
from .montecarlo import SeededStream, simulate_detections, simulate_spin_record
from .numerics import DEFAULT_NODES
from .spin_bayes import BlochPrior, SpinRecord, conditional_record, posterior_bloch_density
from .verification import DEFAULT_REPLICAS, DEFAULT_SEED, run_suite

EXIT_OK, EXIT_USAGE, EXIT_IMPOSSIBLE, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _beam_options(p):
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--delta-omega", type=float)
    p.add_argument("--nodes", type=int, help=f"starting grid size (default {DEFAULT_NODES})")


def _output_options(p):
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--output", help="output file (default: stdout)")
    p.add_argument("--config", help="JSON file of option values")


def build_parser():
    parser = _Parser(prog="qbayes", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("spin-predict", help="conditional probability of a future spin record")
    p.add_argument("--record", help="past record JSON {x: [plus, minus], y: ..., z: ...}")
    p.add_argument("--query", help="future record JSON (same schema)")
    p.add_argument("--prior", help="'sphere', 'ball' or a tabulated-prior JSON file")
    p.add_argument("--posterior", action="store_true", default=None,
                   help="write the tabulated posterior density instead")
    _output_options(p)

    p = sub.add_parser("laser-posterior", help="phase-difference posterior on a grid")
    p.add_argument("--history", help="JSON array or CSV of time,m_c,m_d")
    _beam_options(p)
    _output_options(p)

    p = sub.add_parser("laser-predict", help="count distribution for the next package")
    p.add_argument("--history")
    p.add_argument("--detector", choices=("c", "d", "joint"))
    p.add_argument("--time", type=float)
    p.add_argument("--n-max", type=int)
    _beam_options(p)
    _output_options(p)

    p = sub.add_parser("simulate", help="sample a spin record or a detection history")
    p.add_argument("--kind", choices=("spin", "laser"))
    p.add_argument("--bloch", type=float, nargs=3)
    p.add_argument("--plan", type=int, nargs=3, help="measurements along x y z")
    p.add_argument("--phi", type=float)
    p.add_argument("--times", type=float, nargs="+")
    p.add_argument("--seed", type=int)
    p.add_argument("--stream", type=int)
    _beam_options(p)
    _output_options(p)

    p = sub.add_parser("verify", help="run the oracle and Monte Carlo verification suites")
    p.add_argument("--suite", choices=("spin", "laser", "oracle", "all"))
    p.add_argument("--replicas", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--output")
    p.add_argument("--config")
    return parser


DEFAULTS = {
    "prior": "sphere",
    "posterior": False,
    "format": None,
    "delta_omega": 0.0,
    "nodes": DEFAULT_NODES,
    "detector": "c",
    "time": 0.0,
    "seed": DEFAULT_SEED,
    "stream": 0,
    "suite": "all",
    "replicas": DEFAULT_REPLICAS,
    "workers": None,
}


def resolve_config(args):
    """Merge defaults, the --config file and explicit flags (in that order)."""
    opts = {k: v for k, v in vars(args).items() if k not in ("config", "command")}
    merged = {k: DEFAULTS.get(k) for k in opts}
    if args.config:
        data = json.loads(Path(args.config).read_text())
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
        data = {k.replace("-", "_"): v for k, v in data.items()}
        unknown = set(data) - set(opts)
        if unknown:
            raise UsageError(f"unknown config keys for {args.command}: {sorted(unknown)}")
        merged.update(data)
    merged.update({k: v for k, v in opts.items() if v is not None})
    return merged


def _require(cfg, *keys):
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + k.replace("_", "-") for k in missing))


def _beam(cfg):
    _require(cfg, "a", "b", "eta")
    return BeamParams(cfg["a"], cfg["b"], cfg["eta"], cfg["delta_omega"])


def _load_prior(choice):
    if choice == "sphere":
        return BlochPrior.uniform_sphere()
    if choice == "ball":
        return BlochPrior.uniform_ball()
    return BlochPrior.from_dict(json.loads(Path(choice).read_text()))


def _fmt_kind(cfg, default="csv"):
    if cfg.get("format"):
        return cfg["format"]
    out = cfg.get("output")
    if out and out.endswith(".json"):
        return "json"
    return default


def cmd_spin_predict(cfg):
    _require(cfg, "record")
    past = qio.read_record(cfg["record"])
    prior = _load_prior(cfg["prior"])
    kind = _fmt_kind(cfg)
    if cfg["posterior"]:
        post = posterior_bloch_density(past, prior)
        return qio.table_text(post.columns(), kind, cfg)
    _require(cfg, "query")
    future = qio.read_record(cfg["query"])
    p = conditional_record(future, past, prior)
    return qio.scalar_text({"probability": p}, kind, cfg)


def cmd_laser_posterior(cfg):
    _require(cfg, "history")
    post = phase_posterior(qio.read_history(cfg["history"]), _beam(cfg), cfg["nodes"])
    return qio.table_text(post.columns(), _fmt_kind(cfg), cfg)


def cmd_laser_predict(cfg):
    _require(cfg, "history")
    params = _beam(cfg)
    history = qio.read_history(cfg["history"])
    kind = _fmt_kind(cfg)
    if cfg["detector"] == "joint":
        n_max = cfg["n_max"] if cfg["n_max"] is not None else params.default_n_max()
        table = predict_joint_table(n_max, cfg["time"], history, params, cfg["nodes"])
        nc, nd = np.meshgrid(np.arange(n_max + 1), np.arange(n_max + 1), indexing="ij")
        return qio.table_text({"n_c": nc.ravel(), "n_d": nd.ravel(), "probability": table.ravel()},
                              kind, cfg)
    dist = predict_counts(cfg["detector"], cfg["time"], history, params, cfg["n_max"], cfg["nodes"])
    return qio.table_text(dist.columns(), kind, cfg, extra={"tail_bound": dist.tail_bound})


def cmd_simulate(cfg):
    _require(cfg, "kind")
    stream = SeededStream(cfg["seed"], cfg["stream"])
    if cfg["kind"] == "spin":
        _require(cfg, "bloch", "plan")
        record = simulate_spin_record(cfg["bloch"], cfg["plan"], stream)
        return qio.write_record(record)
    _require(cfg, "phi", "times")
    history = simulate_detections(cfg["phi"], _beam(cfg), cfg["times"], stream)
    return qio.history_text(history, _fmt_kind(cfg, "json"))


def cmd_verify(cfg):
    rows = run_suite(cfg["suite"], cfg["replicas"], cfg["seed"], cfg["workers"])
    ok = all(r["pass"] for r in rows)
    text = json.dumps({"config": cfg, "pass": ok, "cases": rows}, indent=1) + "\n"
    return text, (EXIT_OK if ok else EXIT_VERIFY)


COMMANDS = {
    "spin-predict": cmd_spin_predict,
    "laser-posterior": cmd_laser_posterior,
    "laser-predict": cmd_laser_predict,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        result = COMMANDS[args.command](cfg)
    except ImpossibleConditioningError as exc:
        print(f"qbayes: impossible conditioning event: {exc}", file=sys.stderr)
        return EXIT_IMPOSSIBLE
    except (UsageError, ValueError, OSError, KeyError, ConditioningNeverSampledError) as exc:
        print(f"qbayes: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text, code = result if isinstance(result, tuple) else (result, EXIT_OK)
    if cfg.get("output"):
        Path(cfg["output"]).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
