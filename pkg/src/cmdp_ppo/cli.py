"""Experiment front-end: data generation, training, evaluation, comparison.

Config files are flat ``key=value`` text, one key per line, ``#`` comments.
Exit codes: 0 success, 1 internal error, 2 bad input.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import tempfile
from dataclasses import fields, replace

import numpy as np

from .dataio import (DataError, DatasetTable, SplitSpec, SyntheticSpec,
                     apply_minmax, clean_rows, fit_minmax, generate_synthetic,
                     load_table, save_table, stratified_split)
from .neuralnet import load_mlp, save_mlp
from .ppo import PpoConfig, evaluate, train


class ConfigError(Exception):
    """Raised for malformed config/spec files."""


def atomic_write(path: str, text: str) -> None:
    """Write-then-rename so partial files are never observed."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def parse_kv_file(path: str) -> dict[str, str]:
    if not os.path.isfile(path):
        raise ConfigError(f"missing config file: {path}")
    out: dict[str, str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def _parse_bool(value: str) -> bool:
    lowered = value.lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise ConfigError(f"not a boolean: {value!r}")


_PIPELINE_KEYS = {
    "data": str, "label_column": str, "flag_column": str, "flag_marker": str,
    "test_fraction": float, "split_seed": int, "stratified": _parse_bool,
}
_PPO_FIELD_TYPES = {f.name: f.type for f in fields(PpoConfig)}
_PPO_PARSERS = {"float": float, "int": int, "bool": _parse_bool}


def parse_run_config(path: str) -> tuple[dict, PpoConfig]:
    """Split a key=value file into pipeline settings and a PpoConfig."""
    raw = parse_kv_file(path)
    pipeline = {"label_column": "label", "flag_marker": "drop-it",
                "test_fraction": 0.2, "split_seed": 0, "stratified": True}
    ppo_kwargs: dict = {}
    for key, value in raw.items():
        name = "variant" if key == "model" else key
        if name in _PIPELINE_KEYS:
            pipeline[name] = _PIPELINE_KEYS[name](value)
        elif name in _PPO_FIELD_TYPES:
            try:
                ppo_kwargs[name] = _PPO_PARSERS[_PPO_FIELD_TYPES[name]](value)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {value!r}") from exc
        else:
            raise ConfigError(f"unknown config key: {key}")
    if "data" not in pipeline:
        raise ConfigError("config must set data=<csv path>")
    try:
        cfg = PpoConfig(**ppo_kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return pipeline, cfg


def parse_synthetic_spec(path: str) -> SyntheticSpec:
    raw = parse_kv_file(path)
    try:
        n_features = int(raw["n_features"])
        counts = [int(x) for x in raw["counts"].split(",")]
        seed = int(raw.get("seed", "0"))
        means = []
        stds = []
        for c in range(len(counts)):
            means.append(np.array([float(x) for x in raw[f"mean_{c}"].split(",")]))
            stds.append(np.array([float(x) for x in raw[f"std_{c}"].split(",")]))
    except KeyError as exc:
        raise ConfigError(f"spec file missing key: {exc.args[0]}") from exc
    except ValueError as exc:
        raise ConfigError(f"bad spec value: {exc}") from exc
    try:
        return SyntheticSpec(counts=counts, means=means, stds=stds,
                             n_features=n_features, seed=seed)
    except DataError as exc:
        raise ConfigError(str(exc)) from exc


def echo_config(pipeline: dict, cfg: PpoConfig) -> str:
    """Full resolved configuration; feeding it back reproduces the run."""
    lines = []
    for key in sorted(pipeline):
        if pipeline[key] is not None:
            lines.append(f"{key}={pipeline[key]}")
    for f in fields(PpoConfig):
        lines.append(f"{f.name}={getattr(cfg, f.name)}")
    return "\n".join(lines) + "\n"


def prepare_tables(pipeline: dict):
    """load -> clean -> split -> fit/apply min-max (stats fit on train only)."""
    table = load_table(pipeline["data"], pipeline["label_column"],
                       pipeline.get("flag_column"))
    table, _ = clean_rows(table, pipeline.get("flag_marker", "drop-it"))
    split = SplitSpec(test_fraction=pipeline["test_fraction"],
                      stratified=pipeline["stratified"],
                      seed=pipeline["split_seed"])
    train_tbl, test_tbl = stratified_split(table, split)
    stats = fit_minmax(train_tbl)
    return apply_minmax(stats, train_tbl), apply_minmax(stats, test_tbl), stats


def save_norm_stats(stats, path: str) -> None:
    text = ("min " + " ".join(f"{x:.17g}" for x in stats.min) + "\n"
            + "max " + " ".join(f"{x:.17g}" for x in stats.max) + "\n")
    atomic_write(path, text)


def load_norm_stats(path: str):
    from .dataio import NormalizationStats
    with open(path) as fh:
        lines = fh.read().split("\n")
    lo = np.array(lines[0].split()[1:], dtype=np.float64)
    hi = np.array(lines[1].split()[1:], dtype=np.float64)
    return NormalizationStats(lo, hi)


def cmd_gen(spec_path: str, out_path: str) -> int:
    spec = parse_synthetic_spec(spec_path)
    table = generate_synthetic(spec)
    save_table(table, out_path)
    print(f"wrote {table.n_rows} rows x {table.n_features} features to {out_path}")
    return 0


def cmd_train(config_path: str, out_dir: str, model: int | None = None,
              seed: int | None = None, paper_literal_sign: bool = False) -> int:
    pipeline, cfg = parse_run_config(config_path)
    if model is not None:
        cfg = replace(cfg, variant=model)
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    if paper_literal_sign:
        cfg = replace(cfg, paper_literal_sign=True)
    os.makedirs(out_dir, exist_ok=True)

    train_tbl, test_tbl, stats = prepare_tables(pipeline)
    actor, critic, history = train(cfg, train_tbl)
    metrics = evaluate(actor, test_tbl, cfg.batch_size)

    atomic_write(os.path.join(out_dir, "metrics.json"), metrics.to_json() + "\n")
    history.to_csv(os.path.join(out_dir, "history.csv"))
    save_mlp(actor, os.path.join(out_dir, "actor.txt"))
    save_mlp(critic, os.path.join(out_dir, "critic.txt"))
    save_norm_stats(stats, os.path.join(out_dir, "norm.txt"))
    atomic_write(os.path.join(out_dir, "config_echo.txt"),
                 echo_config(pipeline, cfg))
    print(f"model {cfg.variant} seed {cfg.seed}: "
          f"accuracy {metrics.accuracy:.4f}, weighted F1 {metrics.f1_weighted:.4f}")
    print(f"artifacts in {out_dir}")
    return 0


def cmd_eval(model_path: str, data_path: str, label_column: str,
             norm_path: str | None = None, out_path: str | None = None,
             batch_size: int = 256) -> int:
    if not os.path.isfile(model_path):
        raise ConfigError(f"missing model file: {model_path}")
    actor = load_mlp(model_path)
    table = load_table(data_path, label_column)
    table, _ = clean_rows(table)
    expected = actor.layer_sizes[0]
    if table.n_features != expected:
        raise DataError(f"expected {expected} features, found {table.n_features}")
    stats = load_norm_stats(norm_path) if norm_path else fit_minmax(table)
    table = apply_minmax(stats, table)
    metrics = evaluate(actor, table, batch_size)
    doc = metrics.to_json()
    print(doc)
    if out_path:
        atomic_write(out_path, doc + "\n")
    return 0


def cmd_compare(config_path: str, seeds: int, out_dir: str) -> int:
    """Train all three variants on identical data/seeds; write one table."""
    pipeline, base_cfg = parse_run_config(config_path)
    os.makedirs(out_dir, exist_ok=True)
    train_tbl, test_tbl, _ = prepare_tables(pipeline)

    columns = ("model", "seed", "accuracy", "precision_weighted",
               "recall_weighted", "f1_weighted", "recall_macro")
    rows = []
    per_model: dict[int, list[list[float]]] = {1: [], 2: [], 3: []}
    for offset in range(seeds):
        for variant in (1, 2, 3):
            cfg = replace(base_cfg, variant=variant, seed=base_cfg.seed + offset)
            actor, _, _ = train(cfg, train_tbl)
            m = evaluate(actor, test_tbl, cfg.batch_size)
            vals = [m.accuracy, m.precision_weighted, m.recall_weighted,
                    m.f1_weighted, m.recall_macro]
            rows.append([variant, cfg.seed] + vals)
            per_model[variant].append(vals)
    for variant in (1, 2, 3):
        med = np.median(np.array(per_model[variant]), axis=0)
        rows.append([variant, "median"] + [float(x) for x in med])

    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(str(row[0:2][i]) for i in range(2))
                     + "," + ",".join(f"{v:.17g}" for v in row[2:]))
    atomic_write(os.path.join(out_dir, "comparison.csv"), "\n".join(lines) + "\n")
    print(f"wrote {os.path.join(out_dir, 'comparison.csv')}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cmdp-ppo",
        description="Imbalanced classification via PPO on a classification MDP")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic blob dataset")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", help="train one model variant end to end")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model", type=int, choices=(1, 2, 3))
    p.add_argument("--seed", type=int)
    p.add_argument("--paper-literal-sign", action="store_true")

    p = sub.add_parser("eval", help="evaluate a saved actor on a CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--label-column", required=True)
    p.add_argument("--norm", help="normalization stats file from training")
    p.add_argument("--out")
    p.add_argument("--batch-size", type=int, default=256)

    p = sub.add_parser("compare", help="train models 1/2/3 over several seeds")
    p.add_argument("--config", required=True)
    p.add_argument("--seeds", type=int, default=1)
    p.add_argument("--out", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "gen":
            return cmd_gen(args.spec, args.out)
        if args.command == "train":
            return cmd_train(args.config, args.out, args.model, args.seed,
                             args.paper_literal_sign)
        if args.command == "eval":
            return cmd_eval(args.model, args.data, args.label_column,
                            args.norm, args.out, args.batch_size)
        if args.command == "compare":
            return cmd_compare(args.config, args.seeds, args.out)
        raise AssertionError(args.command)
    except (ConfigError, DataError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
