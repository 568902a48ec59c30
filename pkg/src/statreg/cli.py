"""Command line front end.

Every invocation reads one JSON config document::

    statreg generate --config gen.json --out runs/a
    statreg estimate --config est.json --out runs/a --plot

Relative paths inside a config are resolved against the config's
directory.  Exit codes: 0 success, 2 config error, 3 data error,
4 precondition rejection.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from statreg import decision, empirics, io, realization
from statreg.errors import ConfigError, DataError, StatregError
from statreg.measures import TestFunction
from statreg.realization import SEED_MAX, RealizationSchedule, SamplingNet, SymbolSequence

SCHEMAS = {
    "generate": {"mode", "regularity", "measure", "n", "total_length", "epsilon", "path",
                 "schedule", "seed", "output"},
    "estimate": {"stream", "stride", "epsilon", "windows", "tail_fraction", "test_function"},
    "equiv": {"streams", "stride", "epsilon", "windows", "tail_fraction", "battery", "seed"},
    "decide": {"loss", "measure", "regularity"},
    "verify": {"stream", "loss", "decision", "r1", "r2", "windows", "tail_fraction"},
}
SCHEDULE_KEYS = {"rounds", "eps0", "d0", "sweeps"}


class Config:
    """A validated config document with typed accessors."""

    def __init__(self, doc: dict, base: Path, command: str):
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(doc) - SCHEMAS[command]
        if unknown:
            raise ConfigError(f"unknown config keys for {command}: {sorted(unknown)}")
        self.doc = doc
        self.base = base

    def __contains__(self, key):
        return key in self.doc

    def get(self, key, kind, default=None, required=False, check=None, what=""):
        if key not in self.doc:
            if required:
                raise ConfigError(f"missing required config key {key!r}")
            return default
        value = self.doc[key]
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if not isinstance(value, kind) or (kind is not bool and isinstance(value, bool)):
            raise ConfigError(f"config key {key!r} has the wrong type")
        if check is not None and not check(value):
            raise ConfigError(f"config key {key!r} out of range: {what}")
        return value

    def path(self, key, value=None) -> Path:
        value = self.doc.get(key) if value is None else value
        if not isinstance(value, str):
            raise ConfigError(f"config key {key!r} must be a path")
        p = Path(value)
        p = p if p.is_absolute() else self.base / p
        if not p.exists():
            raise ConfigError(f"{key}: file does not exist: {p}")
        return p

    def document(self, key, loader_doc, loader_path):
        """Inline JSON object or path to a JSON file."""
        value = self.doc[key]
        if isinstance(value, dict):
            return loader_doc(value, key)
        return loader_path(self.path(key))


def _estimator_params(cfg: Config) -> dict:
    return {
        "epsilon": cfg.get("epsilon", float, empirics.DEFAULT_EPSILON, check=lambda v: v > 0, what="> 0"),
        "windows": cfg.get("windows", int, empirics.DEFAULT_WINDOWS, check=lambda v: v >= 1, what=">= 1"),
        "tail_fraction": cfg.get("tail_fraction", float, empirics.DEFAULT_TAIL_FRACTION,
                                 check=lambda v: 0 < v <= 1, what="in (0, 1]"),
    }


def _seed(cfg: Config, override):
    if override is not None:
        return override
    return cfg.get("seed", int, None, check=lambda v: 0 <= v <= SEED_MAX, what="unsigned 64-bit")


# commands; each returns a dict of output name -> written path

def cmd_generate(cfg: Config, out: Path, seed=None, plot=False) -> dict:
    mode = cfg.get("mode", str, required=True, check=lambda v: v in ("net", "sequence", "iid"),
                   what="net | sequence | iid")
    seed = _seed(cfg, seed)
    if mode == "iid":
        if "measure" not in cfg:
            raise ConfigError("iid mode needs 'measure'")
        mu = cfg.document("measure", io.measure_from_doc, io.load_measure)
        n = cfg.get("n", int, required=True, check=lambda v: v >= 1, what=">= 1")
        stream = realization.iid_generate(mu, n, 0 if seed is None else seed)
    else:
        if "regularity" not in cfg:
            raise ConfigError(f"{mode} mode needs 'regularity'")
        P = cfg.document("regularity", io.regularity_from_doc, io.load_regularity)
        if mode == "net":
            raw = cfg.get("schedule", dict, required=True)
            unknown = set(raw) - SCHEDULE_KEYS
            if unknown:
                raise ConfigError(f"unknown schedule keys: {sorted(unknown)}")
            if "rounds" not in raw:
                raise ConfigError("schedule needs 'rounds'")
            try:
                schedule = RealizationSchedule(**raw)
            except (DataError, TypeError) as exc:
                raise ConfigError(f"invalid schedule: {exc}") from None
            stream = realization.net_realize(P, schedule, seed)
        else:
            total = cfg.get("total_length", int, required=True, check=lambda v: v >= 1, what=">= 1")
            eps = cfg.get("epsilon", float, 0.1, check=lambda v: 0 < v < 1, what="in (0, 1)")
            stream = realization.sequence_realize(P, total, eps, cfg.get("path", bool, False))
    if isinstance(stream, SamplingNet):
        target = out / cfg.get("output", str, "stream.jsonl")
        io.save_net(stream, target)
        print(f"wrote net with {len(stream)} items to {target}")
    else:
        target = out / cfg.get("output", str, "sequence.json")
        io.save_sequence(stream, target)
        print(f"wrote sequence of {len(stream)} symbols to {target}")
    return {"stream": target}


def _gamma(cfg: Config, alphabet):
    rows = cfg.get("test_function", list)
    if rows is None:
        return None
    try:
        return TestFunction(alphabet, np.array(rows, dtype=float))
    except (DataError, ValueError) as exc:
        raise ConfigError(f"invalid test_function: {exc}") from None


def cmd_estimate(cfg: Config, out: Path, seed=None, plot=False) -> dict:
    stream = io.load_stream(cfg.path("stream"))
    stride = cfg.get("stride", int, 1, check=lambda v: v >= 1, what=">= 1")
    params = _estimator_params(cfg)
    gamma = _gamma(cfg, stream.alphabet)
    if gamma is None:
        traj = empirics.stream_trajectory(stream, stride)
        labels = list(stream.alphabet)
    elif isinstance(stream, SymbolSequence):
        prefix = empirics.prefix_trajectory(stream, stride)
        traj = empirics.Trajectory(prefix.indices, prefix.points @ gamma.values.T, "vector")
        labels = None
    else:
        traj = empirics.average_trajectory(stream, gamma)
        labels = None
    est = empirics.estimate_limit_set(traj, **params)
    written = {"estimate": out / "estimate.json", "trajectory": out / "trajectory.csv"}
    io.save_estimate(est, written["estimate"])
    io.save_trajectory(traj, written["trajectory"])
    if plot:
        from statreg.plotting import plot_trajectory

        written["figure"] = out / "trajectory.png"
        plot_trajectory(traj, written["figure"], est, labels)
    print(f"{len(est)} limit point(s) from {len(traj)} trajectory points")
    for center in est.centers:
        print("  " + "  ".join(f"{v:.6f}" for v in center))
    return written


def _witness_doc(verdict) -> dict:
    w = verdict.witness
    return {
        "gamma": w.gamma.values.tolist(),
        "best_row": w.best_row,
        "best_symbol": w.best_symbol,
        "separation": w.separation,
        "images": [w.images1.tolist(), w.images2.tolist()],
    }


def cmd_equiv(cfg: Config, out: Path, seed=None, plot=False) -> dict:
    paths = cfg.get("streams", list, required=True, check=lambda v: len(v) == 2, what="two paths")
    streams = [io.load_stream(cfg.path("streams", p)) for p in paths]
    verdict = empirics.s_equivalent(
        *streams, stride=cfg.get("stride", int, 1, check=lambda v: v >= 1, what=">= 1"),
        battery=cfg.get("battery", int, 0, check=lambda v: v >= 0, what=">= 0"),
        seed=_seed(cfg, seed) or 0, **_estimator_params(cfg))
    doc = {
        "equivalent": verdict.equivalent,
        "hausdorff": verdict.distance,
        "estimates": [verdict.estimate1.matrix.tolist(), verdict.estimate2.matrix.tolist()],
        "witness": None if verdict.equivalent else _witness_doc(verdict),
    }
    if verdict.battery_max is not None:
        doc["battery_max"] = verdict.battery_max
    written = {"verdict": out / "verdict.json"}
    io.atomic_write(written["verdict"], io.dumps(doc))
    if plot:
        from statreg.plotting import plot_estimates

        written["figure"] = out / "estimates.png"
        plot_estimates([verdict.estimate1.matrix, verdict.estimate2.matrix], written["figure"],
                       list(streams[0].alphabet))
    if verdict.equivalent:
        print(f"equivalent (Hausdorff {verdict.distance:.6f})")
    else:
        w = verdict.witness
        print(f"distinct (Hausdorff {verdict.distance:.6f}); indicator of {w.best_symbol!r} "
              f"separates images by {w.separation:.6f}")
    return written


def _print_table(report) -> None:
    width = max(len(u) for u in report.decision_labels)
    print(f"{report.kind} criterion")
    for u, v in zip(report.decision_labels, report.values):
        mark = "  *" if u in report.argmin else ""
        worst = report.worst_case.get(u)
        extra = f"  worst-case measures {list(worst)}" if worst is not None else ""
        print(f"  {u:<{width}}  {v: .6f}{mark}{extra}")


def cmd_decide(cfg: Config, out: Path, seed=None, plot=False) -> dict:
    L = io.load_loss(cfg.path("loss")) if "loss" in cfg else None
    if L is None:
        raise ConfigError("missing required config key 'loss'")
    if "measure" in cfg and "regularity" in cfg:
        raise ConfigError("give either 'measure' or 'regularity', not both")
    if "measure" in cfg:
        report = decision.bayes(L, cfg.document("measure", io.measure_from_doc, io.load_measure))
    elif "regularity" in cfg:
        P = cfg.document("regularity", io.regularity_from_doc, io.load_regularity)
        report = decision.regularity_criterion(L, P)
    else:
        report = decision.minimax(L)
    written = {"report": out / "report.json"}
    io.atomic_write(written["report"], io.dumps(report.as_dict()))
    if plot:
        from statreg.plotting import plot_criterion

        written["figure"] = out / "report.png"
        plot_criterion(report, written["figure"])
    _print_table(report)
    return written


def cmd_verify(cfg: Config, out: Path, seed=None, plot=False) -> dict:
    stream = io.load_stream(cfg.path("stream"))
    if not isinstance(stream, SamplingNet):
        raise DataError("verify needs a sampling net stream")
    L = io.load_loss(cfg.path("loss"))
    u = cfg.get("decision", str, required=True)
    r1 = cfg.get("r1", float, required=True)
    r2 = cfg.get("r2", float, required=True)
    params = _estimator_params(cfg)
    report = decision.verify_proposition3(stream, L, u, r1, r2, params["tail_fraction"],
                                          params["windows"])
    written = {"report": out / "thresholds.json", "trajectory": out / "running_average.csv"}
    io.atomic_write(written["report"], io.dumps(report.as_dict()))
    io.save_trajectory(report.trajectory, written["trajectory"])
    if plot:
        from statreg.plotting import plot_running_average

        written["figure"] = out / "running_average.png"
        plot_running_average(report, written["figure"])
    print(f"decision {u}: empirical limsup {report.empirical_limsup:.6f}; "
          f"r1 exceeded in every tail window: {report.r1_exceeded_cofinally}; "
          f"below r2 throughout the tail: {report.r2_respected_eventually}")
    return written


COMMANDS = {
    "generate": cmd_generate,
    "estimate": cmd_estimate,
    "equiv": cmd_equiv,
    "decide": cmd_decide,
    "verify": cmd_verify,
}


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value <= SEED_MAX:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="statreg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config document")
        p.add_argument("--seed", type=_u64, default=None, help="override the config seed")
        p.add_argument("--out", default=".", help="output directory (default: .)")
        p.add_argument("--plot", action="store_true", help="also render PNG figures")
    return parser


def load_config(path, command: str) -> Config:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return Config(doc, path.resolve().parent, command)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.command)
        COMMANDS[args.command](cfg, Path(args.out), seed=args.seed, plot=args.plot)
    except StatregError as exc:
        print(f"statreg {args.command}: error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
