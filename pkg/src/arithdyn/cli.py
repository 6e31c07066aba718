"""Command-line interface: ``arithdyn <command> [flags]``.

Every command accepts ``--config FILE`` (INI text as written by
``--write-config``); flags given on the command line win over the file.
Exit status: 0 ok, 2 bad input or config, 3 a mathematical precondition
failed, 4 I/O error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from . import __version__
from .chebsweep import (
    SCHEMA_VERSION,
    TargetSystem,
    chunk_bounds,
    independence_report,
    load_cache,
    sweep,
)
from .dml import (
    SplitSystem,
    find_padic_certificate,
    fit_progressions,
    orbit_membership_scan,
)
from .errors import ConfigError, FitFailure, HeightOverflow, MathDomainError
from .forest import POSTCRITICAL_BOUND, build_forest_modp, completeness_report
from .lattes import order_divisibility_sweep
from .moddyn import nonperiodic_prime_scan, require_nonperiodic
from .parsing import (
    parse_curve,
    parse_ec_point,
    parse_map,
    parse_point,
    parse_points,
    parse_prime_range,
    parse_subvariety,
)

CACHE_ENV = "ARITHDYN_CACHE_DIR"
COMMANDS = ("sweep", "certify", "dml", "lattes", "forest", "independence")

EXIT_OK, EXIT_CONFIG, EXIT_DOMAIN, EXIT_IO = 0, 2, 3, 4


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    maps: tuple = ()
    targets: tuple = ()
    level: int = 1
    primes: str = ""
    options: tuple = ()  # sorted (key, value) string pairs
    out_dir: str = "."
    workers: int = 1
    cache_dir: str = ""
    max_chunks: int | None = None

    def option(self, key: str, default=None):
        return dict(self.options).get(key, default)

    def render(self, run_section: bool = True) -> str:
        cp = configparser.ConfigParser(delimiters=("=",), interpolation=None)
        cp.optionxform = str
        exp = {"command": self.command, "level": str(self.level), "primes": self.primes}
        for i, m in enumerate(self.maps):
            exp[f"map.{i}"] = m
        for i, t in enumerate(self.targets):
            exp[f"targets.{i}"] = t
        cp["experiment"] = dict(sorted(exp.items()))
        cp["options"] = dict(self.options)
        if run_section:
            run = {"out_dir": self.out_dir, "workers": str(self.workers),
                   "cache_dir": self.cache_dir}
            if self.max_chunks is not None:
                run["max_chunks"] = str(self.max_chunks)
            cp["run"] = run
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @property
    def config_hash(self) -> str:
        """Hash of everything that determines the outputs (run section excluded)."""
        return hashlib.sha256(self.render(run_section=False).encode()).hexdigest()[:16]

    @classmethod
    def parse(cls, text: str) -> "ExperimentConfig":
        cp = configparser.ConfigParser(delimiters=("=",), interpolation=None)
        cp.optionxform = str
        try:
            cp.read_string(text)
            exp = cp["experiment"]
            command = exp["command"]
        except (configparser.Error, KeyError) as exc:
            raise ConfigError(f"bad config: {exc}") from None
        if command not in COMMANDS:
            raise ConfigError(f"unknown command {command!r}")

        def indexed(prefix):
            keys = sorted((k for k in exp if k.startswith(prefix + ".")),
                          key=lambda k: int(k.split(".", 1)[1]))
            return tuple(exp[k] for k in keys)

        run = cp["run"] if cp.has_section("run") else {}
        try:
            mc = run.get("max_chunks")
            return cls(
                command=command,
                maps=indexed("map"),
                targets=indexed("targets"),
                level=int(exp.get("level", "1")),
                primes=exp.get("primes", ""),
                options=tuple(sorted(cp["options"].items())) if cp.has_section("options") else (),
                out_dir=run.get("out_dir", "."),
                workers=int(run.get("workers", "1")),
                cache_dir=run.get("cache_dir", ""),
                max_chunks=None if mc in (None, "") else int(mc),
            )
        except ValueError as exc:
            raise ConfigError(f"bad config value: {exc}") from None


@dataclass
class RunManifest:
    config_hash: str
    artifact_version: str
    started: float
    finished: float | None = None
    chunks: list = field(default_factory=list)

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(asdict(self), indent=1) + "\n")


_OPTION_KEYS = {
    "certify": ("alpha",),
    "dml": ("start", "equation", "equations_file", "N", "certify_prime_max",
            "certify_prime_min", "mode"),
    "lattes": ("curve", "point", "q", "n", "require_non_torsion"),
    "forest": ("p", "depth", "bound"),
}


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    if args.config:
        try:
            cfg = ExperimentConfig.parse(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        if cfg.command != args.command:
            raise ConfigError(f"config is for {cfg.command!r}, not {args.command!r}")
    else:
        cfg = ExperimentConfig(args.command)
    upd = {}
    if getattr(args, "map", None):
        upd["maps"] = tuple(args.map)
    if getattr(args, "target", None):
        upd["targets"] = tuple(args.target)
    for key in ("level", "primes", "out_dir", "workers", "max_chunks", "cache_dir"):
        if getattr(args, key, None) is not None:
            upd[key] = getattr(args, key)
    opts = dict(cfg.options)
    for key in _OPTION_KEYS.get(args.command, ()):
        val = getattr(args, key, None)
        if val is None or val is False:
            continue
        if isinstance(val, list):
            val = ";".join(val)
        opts[key] = "1" if val is True else str(val)
    upd["options"] = tuple(sorted(opts.items()))
    return replace(cfg, **upd)


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _require(value, what: str):
    if value in (None, "", ()):
        raise ConfigError(f"missing {what}")
    return value


def _system(cfg: ExperimentConfig) -> TargetSystem:
    maps = [parse_map(m) for m in _require(cfg.maps, "--map")]
    targets = [parse_points(t) for t in _require(cfg.targets, "--targets")]
    if len(maps) != len(targets):
        raise ConfigError("give one --targets list per --map")
    if cfg.level < 1:
        raise ConfigError("--level must be >= 1")
    return TargetSystem(tuple(zip(maps, targets)), cfg.level)


def _int_option(cfg, key, default=None) -> int:
    val = cfg.option(key, default)
    if val is None:
        raise ConfigError(f"missing --{key.replace('_', '-')}")
    try:
        return int(val)
    except ValueError:
        raise ConfigError(f"--{key} must be an integer, got {val!r}") from None


def _header(cfg: ExperimentConfig) -> dict:
    return {"schema_version": SCHEMA_VERSION, "artifact_version": __version__,
            "command": cfg.command, "config_hash": cfg.config_hash}


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def _out(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cache_dir(cfg: ExperimentConfig, out: Path) -> Path:
    d = Path(cfg.cache_dir or os.environ.get(CACHE_ENV) or out / ".cache")
    d.mkdir(parents=True, exist_ok=True)
    return d


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_sweep(cfg: ExperimentConfig) -> int:
    system = _system(cfg)
    lo, hi = parse_prime_range(_require(cfg.primes, "--primes"))
    out = _out(cfg)
    cache = _cache_dir(cfg, out) / f"{system.key}.jsonl"
    manifest = RunManifest(cfg.config_hash, __version__, time.time())
    res = sweep(system, lo, hi, workers=cfg.workers, cache_path=cache,
                max_new_chunks=cfg.max_chunks)
    labels = system.labels()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["p"] + [f"roots_{l}" for l in labels] + [f"inf_{l}" for l in labels] + ["derangement"])
    for r in res.records:
        w.writerow([r.p] + r.flat_counts() + [int(f) for f in r.flat_inf()] + [int(r.derangement)])
    (out / "sweep.csv").write_text(buf.getvalue())
    summary = _header(cfg) | {
        "system": system.describe(),
        "system_key": system.key,
        "labels": labels,
        "target_orbits_over_q": [s.kind for s in system.q_status()],
        "linear_disjointness": "unverified",
        "lo": lo, "hi": hi,
        "complete": res.complete,
    } | res.estimate.to_dict()
    (out / "summary.json").write_text(_dump(summary))
    cached = set(load_cache(cache, system))
    manifest.chunks = [[a, b, (a, b) in cached] for a, b in chunk_bounds(lo, hi)]
    manifest.finished = time.time()
    manifest.write(out / "manifest.json")
    print(_dump(summary), end="")
    return EXIT_OK


def cmd_certify(cfg: ExperimentConfig) -> int:
    phi = parse_map(_require(cfg.maps, "--map")[0])
    alpha = parse_point(_require(cfg.option("alpha"), "--alpha"))
    require_nonperiodic(phi, alpha)  # before the range, so a periodic alpha is exit 3
    lo, hi = parse_prime_range(_require(cfg.primes, "--primes"))
    cert, est = nonperiodic_prime_scan(phi, alpha, lo, hi)
    out = _out(cfg)
    (out / "certificate.jsonl").write_text(cert.to_jsonl())
    summary = _header(cfg) | {"map": str(phi), "alpha": str(alpha), "lo": lo, "hi": hi,
                              "verified_over_q": cert.verified_over_q,
                              "primes_found": len(cert.primes)} | est.to_dict()
    (out / "summary.json").write_text(_dump(summary))
    print(_dump(summary), end="")
    return EXIT_OK


def _equations(cfg: ExperimentConfig) -> list[str]:
    lines = []
    if cfg.option("equations_file"):
        lines += Path(cfg.option("equations_file")).read_text().splitlines()
    if cfg.option("equation"):
        lines += cfg.option("equation").split(";")
    return lines


def cmd_dml(cfg: ExperimentConfig) -> int:
    maps = [parse_map(m) for m in _require(cfg.maps, "--map")]
    start = parse_points(_require(cfg.option("start"), "--start"))
    if len(start) != len(maps):
        raise ConfigError("--start needs one point per --map")
    system = SplitSystem(tuple(maps), start)
    V = parse_subvariety(_equations(cfg), system.g)
    N = _int_option(cfg, "N")
    out = _out(cfg)
    report = _header(cfg)
    try:
        S = orbit_membership_scan(system, V, N)
    except HeightOverflow as exc:
        report |= {"N": N, "S": exc.partial, "aborted_at": exc.index, "error": str(exc)}
        (out / "scan.json").write_text(_dump(report))
        print(_dump(report), end="")
        raise
    report |= {"N": N, "S": S}
    (out / "scan.json").write_text(_dump(report))
    try:
        cover = fit_progressions(S, N)
    except FitFailure as exc:
        report["cover"] = None
        report["fit_error"] = str(exc)
        print(_dump(report), end="")
        raise
    (out / "cover.json").write_text(_dump(cover.to_dict()))
    report["cover"] = cover.to_dict()
    if cfg.option("certify_prime_max"):
        cert = find_padic_certificate(
            system, _int_option(cfg, "certify_prime_max"),
            _int_option(cfg, "certify_prime_min", 2), cfg.option("mode", "strict"))
        (out / "certificate.json").write_text(_dump(cert.to_dict()))
        report["certificate"] = cert.to_dict()
    print(_dump(report), end="")
    return EXIT_OK


def cmd_lattes(cfg: ExperimentConfig) -> int:
    E = parse_curve(_require(cfg.option("curve"), "--curve"))
    Q = parse_ec_point(E, _require(cfg.option("point"), "--point"))
    lo, hi = parse_prime_range(_require(cfg.primes, "--primes"))
    rep = order_divisibility_sweep(
        E, Q, _int_option(cfg, "q", 2), _int_option(cfg, "n", 1), lo, hi,
        allow_torsion=cfg.option("require_non_torsion") != "1", workers=cfg.workers)
    summary = _header(cfg) | rep.to_dict() | {"lo": lo, "hi": hi}
    out = _out(cfg)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["p", "order", "divisible"])
    qn = rep.q**rep.n
    for p, N in rep.orders.items():
        w.writerow([p, N, int(N % qn == 0)])
    (out / "lattes.csv").write_text(buf.getvalue())
    (out / "lattes.json").write_text(_dump(summary))
    print(_dump(summary), end="")
    return EXIT_OK


def cmd_forest(cfg: ExperimentConfig) -> int:
    system = _system(cfg)
    depth = _int_option(cfg, "depth", 1)
    forest = build_forest_modp(system, _int_option(cfg, "p"), depth)
    comp = completeness_report(system, depth, _int_option(cfg, "bound", POSTCRITICAL_BOUND))
    out = _out(cfg)
    doc = _header(cfg) | forest.to_dict() | {"completeness": comp.to_dict()["entries"]}
    (out / "forest.json").write_text(_dump(doc))
    with open(out / "forest_edges.txt", "w") as fh:
        forest.write_edges(fh)
    print(_dump(doc), end="")
    return EXIT_OK


def cmd_independence(cfg: ExperimentConfig) -> int:
    system = _system(cfg)
    lo, hi = parse_prime_range(_require(cfg.primes, "--primes"))
    out = _out(cfg)
    rep = independence_report(system, lo, hi, workers=cfg.workers,
                              cache_path=_cache_dir(cfg, out) / f"{system.key}.jsonl")
    doc = _header(cfg) | {"system": system.describe(), "lo": lo, "hi": hi} | rep.to_dict()
    (out / "independence.json").write_text(_dump(doc))
    print(_dump(doc), end="")
    return EXIT_OK


HANDLERS = {"sweep": cmd_sweep, "certify": cmd_certify, "dml": cmd_dml,
            "lattes": cmd_lattes, "forest": cmd_forest, "independence": cmd_independence}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="arithdyn", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, system=True, primes=True):
        p.add_argument("--config", help="INI config file; flags override it")
        p.add_argument("--write-config", help="write the resolved config here and continue")
        p.add_argument("--out-dir", help="output directory (default .)")
        p.add_argument("--workers", type=int, help="worker processes for prime sweeps")
        p.add_argument("--cache-dir", help=f"chunk cache directory (default ${CACHE_ENV} or OUT/.cache)")
        if system:
            p.add_argument("--map", action="append", help="map 'num : den' in x; repeat for several")
            p.add_argument("--targets", dest="target", action="append",
                           help="comma-separated targets for the matching --map")
            p.add_argument("--level", type=int, help="iterate level m")
        if primes:
            p.add_argument("--primes", help="prime range lo..hi (lo <= p < hi)")

    p = sub.add_parser("sweep", help="derangement-prime sweep of a target system")
    common(p)
    p.add_argument("--max-chunks", type=int, help="stop after this many new chunks (resumable)")

    p = sub.add_parser("certify", help="primes where alpha mod p is not periodic")
    common(p, system=False)
    p.add_argument("--map", action="append")
    p.add_argument("--alpha")

    p = sub.add_parser("dml", help="orbit/subvariety incidence scan and progression fit")
    common(p, system=False, primes=False)
    p.add_argument("--map", action="append", help="one map per coordinate")
    p.add_argument("--start", help="comma-separated start point, one entry per coordinate")
    p.add_argument("--equation", action="append", help="equation in X1,Y1,...; repeatable")
    p.add_argument("--equations-file", help="file with one equation per line")
    p.add_argument("--N", type=int, help="scan horizon")
    p.add_argument("--certify-prime-max", type=int)
    p.add_argument("--certify-prime-min", type=int)
    p.add_argument("--mode", choices=("strict", "relaxed"))

    p = sub.add_parser("lattes", help="order divisibility sweep on an elliptic curve")
    common(p, system=False)
    p.add_argument("--curve", help="'a b' for y^2 = x^3 + a x + b")
    p.add_argument("--point", help="'x y' or inf")
    p.add_argument("--q", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--require-non-torsion", action="store_true",
                   help="fail (exit 3) on torsion points instead of flagging them")

    p = sub.add_parser("forest", help="preimage forest over F_p")
    common(p, primes=False)
    p.add_argument("--target", dest="target", action="append", help="alias of --targets")
    p.add_argument("--p", type=int)
    p.add_argument("--depth", type=int)
    p.add_argument("--bound", type=int, help="post-critical search bound")

    p = sub.add_parser("independence", help="joint vs marginal no-root frequencies")
    common(p)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        if args.write_config:
            Path(args.write_config).write_text(cfg.render())
        return HANDLERS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MathDomainError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
