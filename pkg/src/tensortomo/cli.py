"""Command-line experiment driver.

Configuration is a plain ``key = value`` file; every key and its default is
listed in :data:`SCHEMA` and printed by ``tensortomo --show-config``.  Command
line flags override the file, and ``TENSORTOMO_THREADS`` overrides the thread
count from the file (``--threads`` wins over both).
"""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import mrt_inversion, ray_transform, recovery, samples, verify
from .cgo import PhaseError
from .tensor_algebra import TensorSizeError
from .tensor_fields import (
    FieldFormatError,
    GridField,
    SupportError,
    read_field,
    read_field_csv,
    write_field,
    write_field_csv,
)

EXIT_OK, EXIT_CHECK, EXIT_USAGE = 0, 1, 2
MODES = ("verify", "transform", "recover", "decay", "demo")


class ConfigError(ValueError):
    pass


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.replace(",", " ").split())


def _int(text: str) -> int:
    return int(text)


def _path_or_none(text: str):
    return None if text in ("", "none") else Path(text)


# key: (parser, default text, description)
SCHEMA = {
    "mode": (str, "verify", "one of verify, transform, recover, decay, demo"),
    "seed": (_int, "0", "seed for all random generators"),
    "threads": (_int, "1", "worker threads for ray batches"),
    "field": (_path_or_none, "none", "transform: tensor field file (.mrtf binary or .csv); none = shipped sample"),
    "field_rank": (_int, "2", "transform: rank of the shipped sample when no field is given"),
    "rays": (_path_or_none, "none", "transform: ray batch CSV (x1..xn, xi1..xin, k); none = random batch"),
    "num_rays": (_int, "50", "transform: size of the random ray batch"),
    "max_k": (_int, "3", "transform: largest moment order in the random batch"),
    "wset": (str, "shipped", "recover/decay: zero, shipped, planted_top, planted_generator or files"),
    "W0": (_path_or_none, "none", "wset = files: path of W^0"),
    "W1": (_path_or_none, "none", "wset = files: path of W^1"),
    "W2": (_path_or_none, "none", "wset = files: path of W^2"),
    "Wbar": (_path_or_none, "none", "wset = files: path of the generator of W^m"),
    "m": (_int, "2", "recover/decay: order for generated coefficient sets"),
    "grid": (_int, "65", "recover/decay: samples per axis of generated half grids"),
    "eta_count": (_int, "16", "number of equispaced eta directions"),
    "lambdas": (_floats, "-1 -0.5 0 0.5 1", "lambda samples"),
    "g_centers": (_floats, "0 -0.6 -0.3 0.3 0.6 0.9", "centers of the transverse bumps g"),
    "g_radius": (float, "0.5", "radius of the transverse bumps g"),
    "stage_tol": (float, "1e-10", "stage pass threshold (moment / Cauchy-Schwarz bound)"),
    "mu1": (_floats, "0 0 1", "bundle direction mu1"),
    "mu2": (_floats, "1 0 0", "bundle direction mu2"),
    "xi": (_floats, "0 0 0", "bundle frequency xi"),
    "h_list": (_floats, "0.2 0.1 0.05 0.025", "decay: values of h"),
    "decay_ratio": (float, "0.7", "decay: largest allowed magnitude ratio per step"),
    "decay_in_report": (_int, "0", "recover: also run the decay sweep (0 or 1)"),
}


@dataclass
class ExperimentConfig:
    values: dict
    out: Path

    def __getitem__(self, key):
        return self.values[key]

    def resolved_text(self) -> str:
        lines = [f"{k} = {self._fmt(self.values[k])}" for k in SCHEMA]
        return "\n".join(lines) + "\n"

    @staticmethod
    def _fmt(v) -> str:
        if isinstance(v, tuple):
            return " ".join(f"{x:g}" for x in v)
        return "none" if v is None else str(v)


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = val
    return out


def build_config(args, env=None) -> ExperimentConfig:
    env = os.environ if env is None else env
    raw = {k: spec[1] for k, spec in SCHEMA.items()}
    if args.config is not None:
        try:
            raw.update(parse_config_text(Path(args.config).read_text()))
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    if env.get("TENSORTOMO_THREADS"):
        raw["threads"] = env["TENSORTOMO_THREADS"]
    for key in ("mode", "seed", "threads"):
        val = getattr(args, key)
        if val is not None:
            raw[key] = str(val)
    values = {}
    for key, (parse, _, _) in SCHEMA.items():
        try:
            values[key] = parse(raw[key])
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {raw[key]!r}") from exc
    if values["mode"] not in MODES:
        raise ConfigError(f"mode must be one of {', '.join(MODES)}")
    if values["threads"] < 1:
        raise ConfigError("threads must be >= 1")
    for key in ("field", "rays", "W0", "W1", "W2", "Wbar"):
        if values[key] is not None and not values[key].exists():
            raise ConfigError(f"{key}: file {values[key]} does not exist")
    return ExperimentConfig(values, Path(args.out))


# --- helpers ---------------------------------------------------------------------


def load_field(path: Path) -> GridField:
    if path.suffix.lower() == ".csv":
        return read_field_csv(path)
    return read_field(path)


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _planted(kind: str, m: int, num: int) -> recovery.CoefficientSet:
    dims, origin, spacing = samples.half_grid(num)
    zero = recovery.CoefficientSet.zeros(3, m, dims, origin, spacing)
    if kind == "zero":
        return zero
    grid = (dims, origin, spacing)
    rng = np.random.default_rng(12345)
    if kind == "planted_top":
        ncomp = zero.W[m - 1].ncomp
        return zero.replace(m - 1, samples.bump_field(m - 1, grid, (0, 0, 0.5), (0.3, 0.3, 0.35), rng.normal(size=ncomp)))
    if kind == "planted_generator":
        if m < 2:
            raise ConfigError("planted_generator needs m >= 2")
        ncomp = zero.Wbar.ncomp
        return zero.replace("bar", samples.bump_field(m - 2, grid, (0, 0, 0.5), (0.3, 0.3, 0.35), rng.normal(size=ncomp)))
    raise ConfigError(f"unknown wset {kind!r}")


def load_wset(cfg: ExperimentConfig) -> recovery.CoefficientSet:
    kind = cfg["wset"]
    if kind == "shipped":
        return samples.decay_wset(cfg["grid"])
    if kind == "files":
        m = cfg["m"]
        paths = [cfg[f"W{j}"] for j in range(m)]
        if any(p is None for p in paths) or (m >= 2 and cfg["Wbar"] is None):
            raise ConfigError("wset = files needs W0..W{m-1} and Wbar")
        W = tuple(load_field(p) for p in paths)
        return recovery.CoefficientSet(m, W, load_field(cfg["Wbar"]) if m >= 2 else None)
    return _planted(kind, cfg["m"], cfg["grid"])


# --- modes ------------------------------------------------------------------------


def run_verify(cfg: ExperimentConfig, log) -> int:
    checks = verify.run_all(cfg["seed"])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["suite", "check", "value", "threshold", "passed"])
    w.writerow(["-", "-", "1", "1", "bool"])
    for c in checks:
        w.writerow([c.suite, c.name, f"{c.value:.6e}", f"{c.threshold:.6e}", int(c.passed)])
        log(f"{'PASS' if c.passed else 'FAIL'}  {c.suite:9s} {c.name}  {c.value:.3e} <= {c.threshold:.3e}")
    _write(cfg.out / "verify.csv", buf.getvalue())
    failed = [c for c in checks if not c.passed]
    for c in failed:
        log(f"failing check: {c.suite}/{c.name}")
    return EXIT_CHECK if failed else EXIT_OK


def _random_rays(rng, n: int, count: int, max_k: int):
    rays, ks = [], []
    for _ in range(count):
        xi = rng.normal(size=n)
        rays.append(ray_transform.Ray(rng.uniform(-0.25, 0.25, n), xi / np.linalg.norm(xi)))
        ks.append(int(rng.integers(0, max_k + 1)))
    return rays, ks


def run_transform(cfg: ExperimentConfig, log) -> int:
    rng = np.random.default_rng(cfg["seed"])
    f = load_field(cfg["field"]) if cfg["field"] is not None else samples.sample_field(cfg["field_rank"], seed=cfg["seed"])
    if cfg["rays"] is not None:
        try:
            rays, ks = ray_transform.read_ray_batch(cfg["rays"], f.n)
        except (ValueError, IndexError) as exc:
            raise ConfigError(f"bad ray batch {cfg['rays']}: {exc}") from exc
    else:
        rays, ks = _random_rays(rng, f.n, cfg["num_rays"], cfg["max_k"])
    vals = ray_transform.batch_momentum(f, rays, ks, threads=cfg["threads"])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    n = f.n
    w.writerow([f"x{i + 1}" for i in range(n)] + [f"xi{i + 1}" for i in range(n)] + ["k", "re", "im"])
    w.writerow(["length"] * n + ["1"] * n + ["1", "field*length^(k+1)", "field*length^(k+1)"])
    for r, k, v in zip(rays, ks, vals):
        w.writerow([f"{c:.12g}" for c in r.x] + [f"{c:.12g}" for c in r.xi] + [k, f"{v.real:.12e}", f"{v.imag:.12e}"])
    _write(cfg.out / "transform.csv", buf.getvalue())
    log(f"wrote {len(rays)} moments to {cfg.out / 'transform.csv'}")
    return EXIT_OK


def _decay(cfg: ExperimentConfig, W) -> recovery.DecayTable:
    return recovery.decay_sweep(W, cfg["mu1"], cfg["mu2"], cfg["xi"], cfg["h_list"])


def run_recover(cfg: ExperimentConfig, log) -> int:
    W = load_wset(cfg)
    table = _decay(cfg, W) if cfg["decay_in_report"] else None
    report = recovery.induction_driver(
        W,
        tol=cfg["stage_tol"],
        thetas=recovery.default_thetas(cfg["eta_count"]),
        lambdas=cfg["lambdas"],
        g_centers=cfg["g_centers"],
        g_radius=cfg["g_radius"],
        decay=table,
    )
    _write(cfg.out / "stages.csv", report.stage_csv())
    _write(cfg.out / "report.txt", report.summary())
    log(report.summary().rstrip())
    return EXIT_OK


def run_decay(cfg: ExperimentConfig, log) -> int:
    table = _decay(cfg, load_wset(cfg))
    _write(cfg.out / "decay.csv", table.to_csv())
    ok = table.passes(cfg["decay_ratio"])
    for which in ("cross_plus", "cross_minus"):
        log(f"{which} ratios: " + " ".join(f"{r:.3f}" for r in table.ratios(which)))
    if not ok:
        log(f"failing check: decay ratio > {cfg['decay_ratio']}")
    return EXIT_OK if ok else EXIT_CHECK


def run_demo(cfg: ExperimentConfig, log) -> int:
    out = cfg.out
    f2 = samples.sample_field(2, num=33, seed=cfg["seed"])
    write_field(f2, out / "sample_rank2.mrtf")
    write_field_csv(f2, out / "sample_rank2.csv")
    rng = np.random.default_rng(cfg["seed"])
    rays, ks = _random_rays(rng, 3, 10, 3)
    vals = ray_transform.batch_momentum(f2, rays, ks, threads=cfg["threads"])
    ray_transform.write_ray_batch(out / "rays.csv", rays, ks, vals)
    f1 = samples.sample_field(1, num=33, seed=cfg["seed"])
    verdict = mrt_inversion.injectivity_verdict(f1)
    _write(out / "moments_rank1.csv", verdict.table.to_csv())
    log(f"rank-1 sample verdict: {verdict.kind} (max moment {verdict.max_moment:.3e}, noise floor {verdict.noise_floor:.3e})")
    W = _planted("planted_generator", 2, 33)
    report = recovery.induction_driver(W, thetas=recovery.default_thetas(cfg["eta_count"]))
    _write(out / "stages.csv", report.stage_csv())
    _write(out / "report.txt", report.summary())
    log(report.summary().rstrip())
    table = recovery.decay_sweep(samples.decay_wset(33), cfg["mu1"], cfg["mu2"], cfg["xi"], cfg["h_list"])
    _write(out / "decay.csv", table.to_csv())
    log("decay ratios: " + " ".join(f"{r:.3f}" for r in table.ratios()))
    expected = verdict.kind == "nonzero" and report.verdict == "different" and table.passes(cfg["decay_ratio"])
    return EXIT_OK if expected else EXIT_CHECK


RUNNERS = {"verify": run_verify, "transform": run_transform, "recover": run_recover, "decay": run_decay, "demo": run_demo}


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tensortomo", description="Tensor tomography and CGO recovery experiments.")
    p.add_argument("--config", type=Path, help="key = value configuration file")
    p.add_argument("--mode", choices=MODES, help="experiment to run (overrides the config)")
    p.add_argument("--out", type=Path, default=Path("tensortomo_out"), help="output directory")
    p.add_argument("--seed", type=int, help="random seed (overrides the config)")
    p.add_argument("--threads", type=int, help="worker threads (overrides config and TENSORTOMO_THREADS)")
    p.add_argument("--show-config", action="store_true", help="print every config key with its default and exit")
    return p


def schema_text() -> str:
    return "\n".join(f"{k} = {spec[1]}    # {spec[2]}" for k, spec in SCHEMA.items()) + "\n"


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    if args.show_config:
        sys.stdout.write(schema_text())
        return EXIT_OK

    def log(msg):
        print(msg, flush=True)

    try:
        cfg = build_config(args)
        cfg.out.mkdir(parents=True, exist_ok=True)
        _write(cfg.out / "config_resolved.txt", cfg.resolved_text())
        return RUNNERS[cfg["mode"]](cfg, log)
    except (ConfigError, FieldFormatError, PhaseError, SupportError, TensorSizeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
