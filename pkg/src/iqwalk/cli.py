"""Command line driver: ``iqwalk graph|evolve|spectrum``.

Every run is described by an :class:`ExperimentConfig` (a JSON file given with
``--config``); command line flags override the file. The resolved config is
written next to the outputs as ``config.json``.

Exit codes: 0 success, 2 configuration error, 3 guard refusal.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import graph as graphs
from .observables import mean_spin, run_trajectory, spin_fluctuation, time_average
from .ops import COINS, CZ_MODES, build_unitary
from .spectral import (
    diagonalize,
    ks_distance,
    level_spacings,
    poisson_cdf,
    quasienergy_histogram,
    thermalization_report,
    u_network,
    wigner_surmise_cdf,
)
from .state import LIMITS, GuardError, initial_state
from .stats import FLOAT_FMT, histogram

log = logging.getLogger("iqwalk")

EXIT_OK, EXIT_CONFIG, EXIT_GUARD = 0, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    family: str | None = "moebius_ladder"
    params: list = field(default_factory=lambda: [8])
    graph_path: str | None = None
    seed: int | None = None
    coin: str = "grover"
    cz_mode: str = "edge_list"
    initial: list = field(default_factory=lambda: [[0, 0, 0]])
    steps: int = 400
    t0: int | None = None
    out: str = "out"
    bins: int = 50
    spacing_range: list = field(default_factory=lambda: [0.0, 4.0])
    filter_degeneracy: bool = True
    eigenvectors: bool = True
    unetwork: bool = False
    limits: dict = field(default_factory=lambda: asdict(LIMITS))

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    def validate(self) -> None:
        if self.graph_path is None and self.family is None:
            raise ConfigError("config needs either 'family' or 'graph_path'")
        if self.coin not in COINS:
            raise ConfigError(f"coin must be one of {sorted(COINS)}")
        if self.cz_mode not in CZ_MODES:
            raise ConfigError(f"cz_mode must be one of {CZ_MODES}")
        if self.steps < 0:
            raise ConfigError("steps must be >= 0")
        if self.t0 is not None and not 0 <= self.t0 <= self.steps:
            raise ConfigError(f"t0={self.t0} outside [0, steps={self.steps}]")
        if self.bins < 1:
            raise ConfigError("bins must be >= 1")

    @property
    def window_start(self) -> int:
        return self.steps // 2 if self.t0 is None else self.t0

    def make_graph(self) -> graphs.Graph:
        try:
            if self.graph_path is not None:
                return graphs.load_graph(self.graph_path)
            if self.family in ("cube", "moebius"):
                return graphs.generate(self.family)
            kwargs = {"seed": self.seed} if self.family in ("random_regular", "erdos_renyi") else {}
            return graphs.generate(self.family, *self.params, **kwargs)
        except (graphs.GraphError, OSError) as exc:
            raise ConfigError(str(exc)) from None

    def make_initial(self, g: graphs.Graph):
        try:
            return initial_state(g, self.initial)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad initial kets: {exc}") from None

    def apply_limits(self) -> None:
        for key, value in self.limits.items():
            if not hasattr(LIMITS, key):
                raise ConfigError(f"unknown limit {key!r}")
            setattr(LIMITS, key, int(value))


class _Outputs:
    """Tracks files written by a run so a failed run leaves nothing behind."""

    def __init__(self, directory: str | Path):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.written: list[Path] = []

    def path(self, name: str) -> Path:
        p = self.dir / name
        self.written.append(p)
        return p

    def json(self, name: str, data) -> None:
        self.path(name).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")

    def rollback(self) -> None:
        for p in self.written:
            p.unlink(missing_ok=True)


def _write_column_csv(path: Path, header: list[str], columns: list) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*columns):
            fh.write(",".join(v if isinstance(v, str) else FLOAT_FMT.format(v) for v in row) + "\n")


def run_graph(config: ExperimentConfig) -> dict:
    g = config.make_graph()
    out = _Outputs(config.out)
    try:
        out.json("config.json", asdict(config))
        graphs.save_graph(g, out.path("graph.txt"))
        graphs.export_dot(g, out.path("graph.dot"))
    except BaseException:
        out.rollback()
        raise
    return {"n_nodes": g.n_nodes, "n_edges": len(g.edges)}


def run_evolve(config: ExperimentConfig) -> dict:
    g = config.make_graph()
    psi0 = config.make_initial(g)
    out = _Outputs(config.out)
    try:
        out.json("config.json", asdict(config))
        record, final = run_trajectory(psi0, config.steps, config.coin, config.cz_mode)
        record.to_csv(out.path("trajectory.csv"))
        t0 = config.window_start
        summary = {
            "graph": g.name,
            "n_nodes": g.n_nodes,
            "window": [t0, config.steps],
            "s_bar": mean_spin(record.s, t0),
            "s_final": mean_spin(record.s, t0, mode="snapshot"),
            "spin_mean": time_average(record.s, t0)[0].tolist(),
            "spin_fluctuation": (
                spin_fluctuation(record.s, t0).tolist() if config.steps - t0 >= 1 else None
            ),
            "p_mean": time_average(record.p, t0)[0].tolist(),
            "final_entropy": dict(zip(("S_x", "S_c", "S_s"), record.entropy[-1].tolist())),
            "mean_entropy": dict(
                zip(("S_x", "S_c", "S_s"), time_average(record.entropy, t0)[0].tolist())
            ),
            "final_norm": final.norm(),
        }
        out.json("summary.json", summary)
    except BaseException:
        out.rollback()
        raise
    return summary


def run_spectrum(config: ExperimentConfig) -> dict:
    g = config.make_graph()
    if g.packed_dim > LIMITS.max_unitary_dim:
        raise GuardError(f"packed dimension {g.packed_dim} exceeds the limit of {LIMITS.max_unitary_dim}")
    out = _Outputs(config.out)
    try:
        out.json("config.json", asdict(config))
        u = build_unitary(g, config.coin, config.cz_mode)
        log.info("diagonalizing U of dimension %d", u.dim)
        sd = diagonalize(u, vectors=config.eigenvectors)
        sd.to_csv(out.path("quasienergies.csv"))
        quasienergy_histogram(sd, config.bins).to_csv(out.path("quasienergy_hist.csv"))

        s = level_spacings(sd, filter_degeneracy=config.filter_degeneracy)
        _write_column_csv(out.path("spacings.csv"), ["n", "s"], [[str(i) for i in range(s.size)], s])
        histogram(s, config.bins, tuple(config.spacing_range)).to_csv(out.path("spacing_hist.csv"))
        report = {
            "graph": g.name,
            "dim": sd.dim,
            "n_classes": len(sd.classes),
            "n_spacings": int(s.size),
            "filter_degeneracy": config.filter_degeneracy,
            "ks_wigner": ks_distance(s, wigner_surmise_cdf),
            "ks_poisson": ks_distance(s, poisson_cdf),
        }
        report["closer_to"] = "wigner" if report["ks_wigner"] < report["ks_poisson"] else "poisson"

        if sd.vectors is not None:
            n = np.arange(sd.dim)
            _write_column_csv(
                out.path("entropies.csv"),
                ["n", "E", "shannon"],
                [[str(i) for i in n], sd.quasienergies, sd.entropies],
            )
            psi0 = config.make_initial(g)
            record, _ = run_trajectory(psi0, config.steps, config.coin, config.cz_mode, entropies=False)
            thermo = thermalization_report(sd, record, g, t0=config.window_start, initial=psi0)
            thermo.to_json(out.path("thermalization.json"))
            report["thermal"] = thermo.thermal
        if config.unetwork:
            net = u_network(u.matrix)
            net.to_dot(out.path("unetwork.dot"))
            report["unetwork_degrees"] = net.degree_set
        out.json("spectrum.json", report)
    except BaseException:
        out.rollback()
        raise
    return report


COMMANDS = {"graph": run_graph, "evolve": run_evolve, "spectrum": run_spectrum}


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iqwalk", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="JSON experiment config")
        p.add_argument("--out", help="output directory")
        p.add_argument("--family", choices=sorted(graphs.FAMILIES) + ["cube", "moebius"])
        p.add_argument("--params", type=int, nargs="*", help="family parameters")
        p.add_argument("--graph-file", dest="graph_path", help="edge-list file instead of a family")
        p.add_argument("--coin", choices=sorted(COINS))
        p.add_argument("--cz-mode", dest="cz_mode", choices=CZ_MODES)
        p.add_argument("--steps", type=int)
        p.add_argument("--t0", type=int)
        p.add_argument("--seed", type=int)
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    data = {}
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    for key in ("out", "family", "params", "graph_path", "coin", "cz_mode", "steps", "t0", "seed"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    if args.graph_path is not None:
        data["family"] = None
    config = ExperimentConfig.from_dict(data)
    config.validate()
    return config


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    saved = asdict(LIMITS)
    try:
        config = resolve_config(args)
        config.apply_limits()
        result = COMMANDS[args.command](config)
    except (ConfigError, TypeError) as exc:
        print(f"iqwalk: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GuardError as exc:
        print(f"iqwalk: refused: {exc}", file=sys.stderr)
        return EXIT_GUARD
    finally:
        for key, value in saved.items():
            setattr(LIMITS, key, value)
    print(json.dumps(result, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
