"""Command-line experiment runner.

Every run writes one or more CSV files into ``--out`` and a ``<name>.meta``
file next to each, holding the full configuration and the run's summary
numbers as ``key = value`` lines (no timestamps, so identical configs give
byte-identical output).

Exit codes: 0 success, 1 usage or configuration error, 2 numerical budget
exceeded, 3 an acceptance assertion of the experiment failed.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .decomposition import ModulationNormParams, bracket, embedding_ratios
from .extremal import (
    ThresholdParams,
    classify,
    critical_weights,
    fit_slope,
    threshold_experiment,
    write_profile_csv,
    write_threshold_csv,
)
from .grid import lp_norm
from .lattice import (
    RHO,
    BudgetError,
    EmptyShellError,
    annulus_count,
    density_annuli,
    select_representatives,
    write_shell_csv,
)
from .multipliers import bernstein_bound, block_pair, laplace_iterated_symbol, sigma
from .random_walk import QuadratureError, WalkSpec, density_radial, mc_walk, radial_cdf, write_walk_csv
from .special_fn import asymptotic_main, bessel_j, v_kernel

log = logging.getLogger("modsphere")

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET, EXIT_ASSERT = 0, 1, 2, 3


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def parse_range(text: str) -> range:
    """``"10..90"`` -> range(10, 91); a single integer gives a one-element range."""
    text = str(text).strip()
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            lo, hi = int(a), int(b)
        else:
            lo = hi = int(text)
    except ValueError:
        raise ConfigError(f"expected an integer range like 10..90, got {text!r}") from None
    if hi < lo:
        raise ConfigError(f"empty range {text!r}")
    return range(lo, hi + 1)


def parse_floats(text: str) -> list:
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}") from None


def read_config(path) -> dict:
    """Flat ``key = value`` file; blank lines and ``#`` comments ignored."""
    out = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for no, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{no}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ",".join(_fmt(x) for x in v)
    if isinstance(v, range):
        return f"{v.start}..{v.stop - 1}"
    return str(v)


def write_meta(csv_path: Path, config: dict, results: dict) -> Path:
    meta = csv_path.with_name(csv_path.name + ".meta")
    lines = [f"modsphere_version = {__version__}"]
    lines += [f"config.{k} = {_fmt(config[k])}" for k in sorted(config)]
    lines += [f"result.{k} = {_fmt(results[k])}" for k in sorted(results)]
    meta.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return meta


# ---------------------------------------------------------------- experiments

def run_bessel(cfg, out: Path):
    delta = cfg["delta"]
    r = np.linspace(cfg["r_min"], cfg["r_max"], cfg["samples"])
    J = np.asarray(bessel_j(delta, r))
    V = np.asarray(v_kernel(delta, r))
    main = np.where(r > 1.0, asymptotic_main(delta, np.maximum(r, 1.0 + 1e-9)), np.nan)
    path = out / "bessel.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("r,bessel_j,v_kernel,asymptotic_main\n")
        for row in zip(r, J, V, main):
            fh.write(",".join(repr(float(x)) for x in row) + "\n")
    return {path: {"max_abs_j": float(np.max(np.abs(J)))}}, True


def run_gain_sweep(cfg, out: Path):
    n, N, p = cfg["n"], cfg["N"], cfg["p"]
    reps = select_representatives(n, cfg["shells"])
    sym = laplace_iterated_symbol(n, N)
    sg = sigma(n, N)
    rows = []
    for j, k in reps:
        f, g = block_pair(sym, k, cfg["lam"], cfg["points"])
        gain = lp_norm(g, p) / lp_norm(f, p)
        pred = bracket(k) ** sg
        rows.append((j, k, math.sqrt(sum(v * v for v in k)), gain, pred))
    slope = fit_slope([bracket(r[1]) for r in rows], [r[3] for r in rows])
    path = out / "gain.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(["j"] + [f"k_{i + 1}" for i in range(n)] + ["abs_k", "gain", "predicted", "ratio"]) + "\n")
        for j, k, ak, gain, pred in rows:
            fh.write(",".join([str(j)] + [str(v) for v in k] + [repr(ak), repr(gain), repr(pred), repr(gain / pred)]) + "\n")
    ok = abs(slope - sg) <= cfg["slope_tol"]
    return {path: {"sigma": sg, "slope": slope, "slope_ok": ok}}, ok


def run_lattice(cfg, out: Path):
    n = cfg["n"]
    rows = []
    for j in cfg["j"]:
        outer, inner = density_annuli(n, j)
        c0, c1 = annulus_count(outer), annulus_count(inner)
        if c0 == 0:
            raise EmptyShellError(f"annulus j={j} holds no lattice point", j=j)
        rows.append((j, c0, c1, c1 / c0, select_representatives(n, [j])[0][1]))
    path = out / "lattice.csv"
    write_shell_csv(path, rows)
    worst = min(r[3] for r in rows)
    ok = worst >= 3.0 / 7.0
    return {path: {"min_ratio": worst, "bound": 3.0 / 7.0, "ratio_ok": ok}}, ok


def run_threshold(cfg, out: Path):
    P = ThresholdParams(cfg["n"], cfg["N"], cfg["p1"], cfg["p2"], cfg["q1"], cfg["q2"], cfg["s1"], cfg["s2"])
    if cfg["weights"] == "critical" and not (P.q1 > P.q2 and math.isfinite(P.q1)):
        raise ConfigError("critical weights a_j need finite q1 > q2 (they are undefined for q1 == q2); "
                          "use weights = unit for the q1 <= q2 control")
    rows, profiles = threshold_experiment(P, cfg["M"], r_start=cfg["r_start"], lam=cfg["lam"],
                                          weights=cfg["weights"], points=cfg["points"])
    ratios = [r for _, r in rows if np.isfinite(r)]
    monotone = all(b >= a * (1 - 1e-12) for a, b in zip(ratios, ratios[1:]))
    weights = critical_weights(P, [s.k for s in profiles]) if cfg["weights"] == "critical" else [1.0] * len(profiles)
    p1 = out / "threshold.csv"
    p2 = out / "threshold_profiles.csv"
    write_threshold_csv(p1, rows)
    write_profile_csv(p2, profiles, weights)
    res = {"verdict": classify(P).value, "sigma": P.sigma, "shells": len(profiles),
           "monotone": monotone, "growth": ratios[-1] / ratios[0] if ratios else float("nan")}
    return {p1: res, p2: {"shells": len(profiles)}}, monotone


def run_walk(cfg, out: Path):
    spec = WalkSpec(cfg["n"], cfg["N"], samples=cfg["samples"], seed=cfg["seed"])
    radii = cfg["radii"] or list(np.linspace(0, spec.N, cfg["n_radii"] + 2)[1:-1])
    mc = mc_walk(spec)
    width = cfg["bin_width"]
    rows, zmax = [], 0.0
    for r in radii:
        dq = density_radial(spec, r)
        dm, se = mc.density(r, width, spec.n)
        rows.append((r, dq, dm, se))
        q = radial_cdf(spec, r)
        zmax = max(zmax, abs(float(mc.cdf(r)) - q) / float(mc.stderr(r, q)))
    path = out / "walk.csv"
    write_walk_csv(path, rows)
    ok = zmax <= cfg["z_max"]
    return {path: {"cdf_max_z": zmax, "cdf_ok": ok}}, ok


def run_bernstein(cfg, out: Path):
    n, N, p = cfg["n"], cfg["N"], cfg["p"]
    m = laplace_iterated_symbol(n, N)
    reps = select_representatives(n, cfg["shells"])
    rows = []
    for j, k in reps:
        rhs, lhs = bernstein_bound(m, k, p, points=cfg["points"])
        rows.append((j, k, bracket(k), rhs, lhs))
    slope = fit_slope([r[2] for r in rows], [r[3] for r in rows])
    C = max(r[4] / r[3] for r in rows)
    path = out / "bernstein.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(["j"] + [f"k_{i + 1}" for i in range(n)] + ["bracket", "rhs", "lhs", "ratio"]) + "\n")
        for j, k, b, rhs, lhs in rows:
            fh.write(",".join([str(j)] + [str(v) for v in k] + [repr(b), repr(rhs), repr(lhs), repr(lhs / rhs)]) + "\n")
    ok = abs(slope - sigma(n, N)) <= cfg["slope_tol"]
    return {path: {"sigma": sigma(n, N), "rhs_slope": slope, "constant": C, "slope_ok": ok}}, ok


def run_embedding(cfg, out: Path):
    n = cfg["n"]
    if cfg["p1"] > cfg["p2"] or cfg["q1"] > cfg["q2"] or cfg["s1"] < cfg["s2"]:
        raise ConfigError("embedding check needs p1 <= p2, q1 <= q2 and s1 >= s2")
    src = ModulationNormParams(p=cfg["p1"], q=cfg["q1"], s=cfg["s1"])
    tgt = ModulationNormParams(p=cfg["p2"], q=cfg["q2"], s=cfg["s2"])
    blocks = [k for _, k in select_representatives(n, cfg["shells"])]
    rows = embedding_ratios(n, src, tgt, blocks, cfg["lams"])
    path = out / "embedding.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join([f"k_{i + 1}" for i in range(n)] + ["lambda", "ratio"]) + "\n")
        for k, lam, r in rows:
            fh.write(",".join([str(v) for v in k] + [repr(lam), repr(r)]) + "\n")
    C = max(r for _, _, r in rows)
    ok = C <= cfg["bound"]
    return {path: {"constant": C, "bound_ok": ok}}, ok


# ---------------------------------------------------------------- parser

_FIELDS = {
    # name: (type, default)
    "n": (int, 2), "N": (int, 2), "p": (float, 2.0), "delta": (float, 0.0),
    "r_min": (float, 0.0), "r_max": (float, 30.0), "samples": (int, None),
    "shells": (parse_range, "10..90"), "j": (parse_range, "20..300"),
    "lam": (float, None), "points": (int, None), "slope_tol": (float, 0.15),
    "p1": (float, 2.0), "p2": (float, 2.0), "q1": (float, 2.0), "q2": (float, 1.0),
    "s1": (float, 0.0), "s2": (float, 0.0), "M": (parse_floats, "256,1024,4096"),
    "weights": (str, "critical"), "r_start": (float, 30.0), "seed": (int, 0),
    "radii": (parse_floats, ""), "n_radii": (int, 20), "bin_width": (float, 0.05),
    "z_max": (float, 3.0), "lams": (parse_floats, "0.0175,0.05,0.2,0.5"), "bound": (float, 10.0),
}

_COMMANDS = {
    "bessel": (run_bessel, ["delta", "r_min", "r_max", "samples"], {"samples": 301}),
    "gain-sweep": (run_gain_sweep, ["n", "N", "p", "shells", "lam", "points", "slope_tol"], {}),
    "lattice-count": (run_lattice, ["n", "j"], {}),
    "threshold": (run_threshold, ["n", "N", "p1", "p2", "q1", "q2", "s1", "s2", "M", "weights",
                                  "r_start", "lam", "points"], {"points": 32}),
    "walk": (run_walk, ["n", "N", "samples", "seed", "radii", "n_radii", "bin_width", "z_max"],
             {"n": 3, "N": 4, "samples": 1_000_000}),
    "bernstein": (run_bernstein, ["n", "N", "p", "shells", "points", "slope_tol"],
                  {"shells": "32..95", "points": 256}),
    "embedding-check": (run_embedding, ["n", "p1", "p2", "q1", "q2", "s1", "s2", "shells", "lams", "bound"],
                        {"p1": 1.0, "q2": 2.0, "q1": 1.0, "s1": 1.0, "shells": "5..60"}),
}


def _add_fields(sp, names):
    for name in names:
        flag = "--" + name.replace("_", "-")
        sp.add_argument(flag, dest=name, default=None, metavar=name.upper())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="modsphere", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="flat 'key = value' file; command-line options win")
    parser.add_argument("--out", default=".", help="output directory (default: current)")
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    bessel = sub.add_parser("bessel", help="Bessel function tables")
    bsub = bessel.add_subparsers(dest="action", required=True)
    _add_fields(bsub.add_parser("eval", help="tabulate J_delta, V_delta and the main term"),
                _COMMANDS["bessel"][1])
    walk = sub.add_parser("walk", help="Pearson random walks")
    wsub = walk.add_subparsers(dest="action", required=True)
    _add_fields(wsub.add_parser("density", help="quadrature density vs Monte Carlo"), _COMMANDS["walk"][1])
    for name in ("gain-sweep", "lattice-count", "threshold", "bernstein", "embedding-check"):
        _add_fields(sub.add_parser(name), _COMMANDS[name][1])
    return parser


def resolve_config(command: str, args: argparse.Namespace) -> dict:
    """Defaults < config file < command line, then type conversion."""
    _, names, overrides = _COMMANDS[command]
    raw = {name: _FIELDS[name][1] for name in names}
    raw.update({k: v for k, v in overrides.items() if k in raw})
    if args.config:
        file_cfg = read_config(args.config)
        unknown = sorted(set(file_cfg) - set(names))
        if unknown:
            raise ConfigError(f"unknown keys for {command}: {', '.join(unknown)}")
        raw.update(file_cfg)
    raw.update({k: v for k, v in vars(args).items() if k in names and v is not None})
    cfg = {}
    for name, value in raw.items():
        conv = _FIELDS[name][0]
        if value is None:
            cfg[name] = None
            continue
        try:
            cfg[name] = conv(value) if not isinstance(value, (range, list)) else value
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"field {name}: {exc}") from None
    if "lam" in cfg and cfg["lam"] is None:
        cfg["lam"] = RHO
    return cfg


def run(command: str, cfg: dict, out: Path) -> int:
    runner = _COMMANDS[command][0]
    out.mkdir(parents=True, exist_ok=True)
    results, ok = runner(cfg, out)
    for path, res in results.items():
        write_meta(Path(path), {"command": command, **cfg}, res)
    return EXIT_OK if ok else EXIT_ASSERT


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    command = args.command
    try:
        cfg = resolve_config(command, args)
        status = run(command, cfg, Path(args.out))
    except (ConfigError, EmptyShellError) as exc:
        print(f"modsphere: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"modsphere: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BudgetError, QuadratureError) as exc:
        print(f"modsphere: numerical budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    if status == EXIT_ASSERT:
        print(f"modsphere: {command}: acceptance assertion failed (see .meta files)", file=sys.stderr)
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
