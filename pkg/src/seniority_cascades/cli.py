"""Configuration-driven experiment runner.

Subcommands: generate, simulate, fixed-point, region, window, optimal-ratio,
sweep-threshold, mlayer, junior-fraction. Configs are JSON; outputs are CSV
or JSON, written atomically, and every output starts with a provenance
header (config hash, seed, version, tolerance settings).

Exit codes: 0 success, 2 config validation error, 3 numerical
non-convergence (partial results still written), 64 unknown subcommand,
66 unreadable config file.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__, dynamics, netgen, regions, theory

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGENCE = 3
EXIT_USAGE = 64
EXIT_NOINPUT = 66

_LAYER_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["erdos_renyi", "configuration", "static_model"]},
        "mean_out_degree": {"type": "number", "minimum": 0},
        "gamma": {"type": "number", "exclusiveMinimum": 2},
        "out_seq": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "in_seq": {"type": "array", "items": {"type": "integer", "minimum": 0}},
    },
}

_SEEDS_SCHEMA = {
    "type": "object",
    "properties": {
        "counts": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "probabilities": {"type": "array",
                          "items": {"type": "number", "minimum": 0, "maximum": 1}},
    },
    "minProperties": 1,
    "maxProperties": 1,
}

_RANGE = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

SCHEMAS = {
    "generate": {
        "type": "object",
        "required": ["n", "layers"],
        "properties": {
            "n": {"type": "integer", "minimum": 1},
            "layers": {"type": "array", "items": _LAYER_SCHEMA, "minItems": 1},
            "seed": {"type": "integer"},
        },
    },
    "simulate": {
        "type": "object",
        "required": ["n", "r1", "seeds", "replicas"],
        "properties": {
            "n": {"type": "integer", "minimum": 1},
            "r1": {"type": "number", "exclusiveMinimum": 0},
            "layers": {"type": "array", "items": _LAYER_SCHEMA, "minItems": 1},
            "base_layer": _LAYER_SCHEMA,
            "junior_fraction": {"type": "number", "minimum": 0, "maximum": 1},
            "seeds": _SEEDS_SCHEMA,
            "replicas": {"type": "integer", "minimum": 1},
            "seed": {"type": "integer"},
        },
    },
    "fixed-point": {
        "type": "object",
        "required": ["r1", "out_means", "phi0"],
        "properties": {
            "r1": {"type": "number", "exclusiveMinimum": 0},
            "out_means": {"type": "array", "items": {"type": "number", "minimum": 0}},
            "in_means": {"type": "array", "items": {"type": "number", "minimum": 0}},
            "phi0": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1}},
            "tol": {"type": "number", "exclusiveMinimum": 0},
            "max_iter": {"type": "integer", "minimum": 1},
        },
    },
    "region": {
        "type": "object",
        "required": ["r1"],
        "properties": {
            "r1": {"type": "number", "exclusiveMinimum": 0},
            "x_range": _RANGE, "y_range": _RANGE,
            "nx": {"type": "integer", "minimum": 1},
            "ny": {"type": "integer", "minimum": 1},
        },
    },
    "window": {
        "type": "object",
        "required": ["sigma", "r1"],
        "properties": {
            "sigma": {"type": "number", "minimum": 0},
            "r1": {"type": "number", "exclusiveMinimum": 0},
            "r_max": {"type": "number", "exclusiveMinimum": 0},
            "dr": {"type": "number", "exclusiveMinimum": 0},
        },
    },
    "optimal-ratio": {
        "type": "object",
        "properties": {
            "r1": {"type": "number", "exclusiveMinimum": 0},
            "r_max": {"type": "number", "exclusiveMinimum": 0},
            "dr": {"type": "number", "exclusiveMinimum": 0},
            "sigma_max": {"type": "number", "minimum": 5},
            "sigma_points": {"type": "integer", "minimum": 2},
        },
    },
    "sweep-threshold": {
        "type": "object",
        "required": ["r1_values"],
        "properties": {
            "r1_values": {"type": "array", "minItems": 1,
                          "items": {"type": "number", "exclusiveMinimum": 0}},
            "r_max": {"type": "number", "exclusiveMinimum": 0},
            "dr": {"type": "number", "exclusiveMinimum": 0},
        },
    },
    "mlayer": {
        "type": "object",
        "properties": {
            "m_values": {"type": "array", "items": {"type": "integer", "minimum": 1}},
            "r1_range": _RANGE, "z_range": _RANGE,
            "resolution": {"type": "array", "items": {"type": "integer", "minimum": 1},
                           "minItems": 2, "maxItems": 2},
        },
    },
    "junior-fraction": {
        "type": "object",
        "required": ["z_values", "fractions"],
        "properties": {
            "gamma": {"type": "number", "exclusiveMinimum": 2},
            "z_values": {"type": "array", "items": {"type": "number", "minimum": 0}},
            "fractions": {"type": "array",
                          "items": {"type": "number", "minimum": 0, "maximum": 1}},
            "theory_fractions": {"type": "array", "items": {"type": "number"}},
            "theory_z_values": {"type": "array", "items": {"type": "number"}},
            "r1": {"type": "number", "exclusiveMinimum": 0},
            "n": {"type": "integer", "minimum": 2},
            "seed_count": {"type": "integer", "minimum": 0},
            "replicas": {"type": "integer", "minimum": 1},
            "run_simulation": {"type": "boolean"},
            "seed": {"type": "integer"},
        },
    },
}


class NonConvergence(Exception):
    def __init__(self, record: dict):
        super().__init__("did not converge")
        self.record = record


def _layer_from_config(cfg: dict) -> netgen.LayerSpec:
    kind = cfg["kind"]
    if kind == "erdos_renyi":
        return netgen.ErdosRenyiLayer(cfg["mean_out_degree"])
    if kind == "static_model":
        return netgen.StaticModelLayer(cfg["gamma"], cfg["mean_out_degree"])
    return netgen.ConfigurationLayer(tuple(cfg["out_seq"]), tuple(cfg["in_seq"]))


def _seeds_from_config(cfg: dict) -> dynamics.SeedSpec:
    if "counts" in cfg:
        return dynamics.SeedSpec(counts=tuple(cfg["counts"]))
    return dynamics.SeedSpec(probabilities=tuple(cfg["probabilities"]))


def _provenance(command: str, config: dict, seed: int) -> dict:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    return {
        "command": command,
        "config_sha256": hashlib.sha256(blob).hexdigest(),
        "seed": seed,
        "version": __version__,
        "tail_tolerance": theory.DEFAULT_TAIL_TOLERANCE,
    }


def _atomic_write(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=target.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit_json(provenance: dict, result: dict) -> str:
    return json.dumps({"provenance": provenance, "result": result}, indent=2) + "\n"


def _emit_csv(provenance: dict, body: str) -> str:
    header = "".join(f"# {k}={v}\n" for k, v in provenance.items())
    return header + body


def _run_generate(config, seed, fmt, out):
    specs = [_layer_from_config(c) for c in config["layers"]]
    net = netgen.generate_multiplex(config["n"], specs, seed)
    prov = _provenance("generate", config, seed)
    header = "".join(f"# {k}={v}\n" for k, v in prov.items())
    erased = [m.get("erased") for m in net.meta.get("layer_meta", [])]
    if any(e is not None for e in erased):
        header += f"# erased={erased}\n"
    _atomic_write(out, header + net.to_text())
    return EXIT_OK


def _run_simulate(config, seed, fmt, out):
    has_layers = "layers" in config
    has_split = "base_layer" in config and "junior_fraction" in config
    if has_layers == has_split:
        raise ValueError("give either 'layers' or 'base_layer'+'junior_fraction'")
    spec = dynamics.EnsembleSpec(
        n=config["n"], r1=config["r1"],
        seeds=_seeds_from_config(config["seeds"]),
        replicas=config["replicas"], master_seed=seed,
        layers=tuple(_layer_from_config(c) for c in config["layers"]) if has_layers else None,
        split_base=_layer_from_config(config["base_layer"]) if has_split else None,
        junior_fraction=config.get("junior_fraction"))
    result = dynamics.ensemble_run(spec)
    prov = _provenance("simulate", config, seed)
    if fmt == "csv":
        _atomic_write(out, _emit_csv(prov, result.to_csv()))
    else:
        _atomic_write(out, _emit_json(prov, {
            "mean_fractions": result.mean_fractions.tolist(),
            "std_fractions": result.std_fractions.tolist(),
            "replicas": [f.tolist() for f in result.fractions],
            "rounds": result.rounds.tolist()}))
    return EXIT_OK


def _run_fixed_point(config, seed, fmt, out):
    out_means = config["out_means"]
    in_means = config.get("in_means", out_means[:-1])
    if len(in_means) != len(out_means) - 1:
        raise ValueError("need one in-degree mean per layer except the most senior")
    ens = theory.ModelEnsemble(
        out_models=tuple(theory.DegreeModel.poisson(z) for z in out_means),
        in_models=tuple(theory.DegreeModel.poisson(z) for z in in_means),
        r1=config["r1"])
    fp = theory.iterate_recursion(ens, config["phi0"],
                                  tol=config.get("tol", 1e-10),
                                  max_iter=config.get("max_iter", 10_000))
    prov = _provenance("fixed-point", config, seed)
    _atomic_write(out, _emit_json(prov, fp.to_record()))
    if not fp.converged:
        raise NonConvergence(fp.to_record())
    return EXIT_OK


def _run_region(config, seed, fmt, out):
    grid = regions.GridSpec(tuple(config.get("x_range", [0.0, 12.0])),
                            tuple(config.get("y_range", [0.0, 12.0])),
                            config.get("nx", 300), config.get("ny", 300))
    scan = regions.scan_region(grid, config["r1"])
    prov = _provenance("region", config, seed)
    if fmt == "csv":
        _atomic_write(out, _emit_csv(prov, scan.to_csv()))
    else:
        _atomic_write(out, _emit_json(prov, {
            "mean_junior": grid.x_values.tolist(),
            "mean_senior": grid.y_values.tolist(),
            "lambda_max": scan.lambda_max.tolist(),
            "multiplex": scan.multiplex.astype(int).tolist(),
            "junior_only": scan.junior_only.astype(int).tolist(),
            "senior_only": scan.senior_only.astype(int).tolist()}))
    return EXIT_OK


def _run_window(config, seed, fmt, out):
    win = regions.cascade_window(config["sigma"], config["r1"],
                                 config.get("r_max", 12.0), config.get("dr", 0.01))
    _atomic_write(out, _emit_json(_provenance("window", config, seed), win.to_record()))
    return EXIT_OK


def _run_optimal_ratio(config, seed, fmt, out):
    sigma_grid = np.linspace(0.0, config.get("sigma_max", 6.0),
                             config.get("sigma_points", 121))
    res = regions.optimal_seniority_ratio(config.get("r1", 0.18), sigma_grid,
                                          config.get("r_max", 12.0),
                                          config.get("dr", 0.01))
    _atomic_write(out, _emit_json(_provenance("optimal-ratio", config, seed),
                                  res.to_record()))
    return EXIT_OK


def _run_sweep(config, seed, fmt, out):
    sweep = regions.sweep_thresholds(config["r1_values"],
                                     r_max=config.get("r_max", 20.0),
                                     dr=config.get("dr", 0.01))
    _atomic_write(out, _emit_json(_provenance("sweep-threshold", config, seed),
                                  sweep.to_record()))
    return EXIT_OK


def _run_mlayer(config, seed, fmt, out):
    m_values = config.get("m_values", [1, 2, 3, 4])
    res = regions.m_layer_split_regions(
        m_values, tuple(config.get("r1_range", [0.05, 0.4])),
        tuple(config.get("z_range", [0.0, 12.0])),
        tuple(config.get("resolution", [200, 200])))
    prov = _provenance("mlayer", config, seed)
    if fmt == "json":
        _atomic_write(out, _emit_json(prov, {
            "m_values": res.m_values,
            "r1_values": res.r1_values.tolist(),
            "z_values": res.z_values.tolist(),
            "membership": {str(m): res.membership[m].astype(int).tolist()
                           for m in res.m_values}}))
    else:
        # one CSV per layer count
        if out is None:
            raise ValueError("mlayer csv output needs --out")
        base = Path(out)
        for m in res.m_values:
            path = base.with_name(f"{base.stem}-M{m}{base.suffix or '.csv'}")
            _atomic_write(str(path), _emit_csv(prov, res.to_csv(m)))
    return EXIT_OK


def _run_junior_fraction(config, seed, fmt, out):
    res = regions.junior_fraction_experiment(
        gamma=config.get("gamma", 2.83),
        z_values=config["z_values"], fractions=config["fractions"],
        r1=config.get("r1", 0.18), n=config.get("n", 2400),
        seed_count=config.get("seed_count", 10),
        replicas=config.get("replicas", 30), master_seed=seed,
        theory_fractions=config.get("theory_fractions"),
        theory_z_values=config.get("theory_z_values"),
        run_simulation=config.get("run_simulation", True))
    prov = _provenance("junior-fraction", config, seed)
    if fmt == "csv":
        _atomic_write(out, _emit_csv(prov, res.to_csv()))
    else:
        _atomic_write(out, _emit_json(prov, res.to_record()))
    return EXIT_OK


_COMMANDS = {
    "generate": _run_generate,
    "simulate": _run_simulate,
    "fixed-point": _run_fixed_point,
    "region": _run_region,
    "window": _run_window,
    "optimal-ratio": _run_optimal_ratio,
    "sweep-threshold": _run_sweep,
    "mlayer": _run_mlayer,
    "junior-fraction": _run_junior_fraction,
}


def cli_main(argv) -> int:
    if not argv or argv[0] in ("-h", "--help"):
        print("usage: seniority-cascades COMMAND [--config PATH] [--seed U64] "
              "[--out PATH] [--format {csv,json}]")
        print("commands: " + ", ".join(_COMMANDS))
        return EXIT_OK
    command = argv[0]
    if command not in _COMMANDS:
        print(f"unknown subcommand: {command}", file=sys.stderr)
        return EXIT_USAGE
    parser = argparse.ArgumentParser(prog=f"seniority-cascades {command}")
    parser.add_argument("--config", default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default=None)
    parser.add_argument("--format", choices=["csv", "json"], default="json")
    try:
        args = parser.parse_args(argv[1:])
    except SystemExit:
        return EXIT_USAGE

    config: dict = {}
    if args.config is not None:
        try:
            with open(args.config) as fh:
                config = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"cannot read config: {exc}", file=sys.stderr)
            return EXIT_NOINPUT
    try:
        jsonschema.validate(config, SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        print(f"invalid config: {exc.message}", file=sys.stderr)
        return EXIT_CONFIG
    seed = args.seed if args.seed is not None else config.get("seed", 0)
    try:
        return _COMMANDS[command](config, seed, args.format, args.out)
    except NonConvergence:
        print("warning: did not converge; partial results written", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except ValueError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def entry_point() -> None:
    raise SystemExit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    entry_point()
