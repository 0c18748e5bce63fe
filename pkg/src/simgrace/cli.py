"""Command-line entrypoint binding ingestion, training, diagnostics and
evaluation into reproducible runs.

Subcommands: ``pretrain``, ``at-pretrain``, ``eval``, ``diagnose`` and
``sweep-eta``. Every artifact-producing run writes a manifest first
(resolved configuration, seed, dataset fingerprint, artifact paths).
Configuration precedence is flags > config file (flat ``key = value``
lines) > built-in defaults. The output root can be set with the
``SIMGRACE_OUT_ROOT`` environment variable.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .at_train import ATConfig, at_pretrain
from .data import Dataset, featurize, parse_tudataset
from .errors import ConfigError, IngestionError, SimgraceError
from .evaluation import embed_all, evaluate
from .loss import LossConfig
from .manifest import dataset_fingerprint, write_manifest
from .metrics import alignment, uniformity, trajectory_report
from .perturb import PerturbationConfig, sample_perturbed
from .train import TrainConfig, pretrain
from .trajectory import read_trajectory_csv
from .weights import EncoderConfig, load_checkpoint

log = logging.getLogger("simgrace")


@dataclass(frozen=True)
class Opt:
    name: str
    type: type
    default: object
    help: str
    choices: tuple | None = None
    required: bool = False


DATASET_OPTS = [
    Opt("dataset", str, None, "directory holding the TUDataset text files", required=True),
    Opt("name", str, None, "dataset name (file prefix)", required=True),
    Opt("features", str, "auto", "node featurization scheme",
        choices=("auto", "node-label-onehot", "degree-onehot", "constant")),
    Opt("degree_cap", int, 64, "degree clamp for degree-onehot features"),
]

ENCODER_OPTS = [
    Opt("num_layers", int, 3, "encoder message-passing layers"),
    Opt("hidden_dim", int, 32, "encoder hidden width"),
    Opt("no_normalization", bool, False, "disable per-layer normalization"),
]

RUN_OPTS = [
    Opt("seed", int, 0, "master seed for the run"),
    Opt("out_dir", str, None, "output directory (default: <out-root>/<command>-<name>-seed<seed>)"),
]

PRETRAIN_OPTS = DATASET_OPTS + ENCODER_OPTS + RUN_OPTS + [
    Opt("eta", float, 1.0, "weight perturbation magnitude"),
    Opt("sigma_rule", str, "per-tensor-std", "noise scale rule: per-tensor-std or fixed:<v>"),
    Opt("epochs", int, 20, "training epochs"),
    Opt("batch_size", int, 128, "graphs per batch"),
    Opt("lr", float, 0.01, "learning rate"),
    Opt("optimizer", str, "adaptive_moment", "optimizer", choices=("sgd", "adaptive_moment")),
    Opt("temperature", float, 0.5, "contrastive temperature"),
    Opt("probe_size", int, 256, "graphs in the per-epoch diagnostics probe"),
    Opt("out", str, None, "checkpoint path (default: <out-dir>/checkpoint.json)"),
]

AT_PRETRAIN_OPTS = DATASET_OPTS + ENCODER_OPTS + RUN_OPTS + [
    Opt("epsilon", float, 0.01, "radius of the perturbation ball"),
    Opt("zeta", float, 0.001, "inner ascent learning rate"),
    Opt("inner_iters", int, 3, "inner ascent steps per batch"),
    Opt("gamma", float, 0.01, "outer descent learning rate"),
    Opt("epochs", int, 150, "training epochs"),
    Opt("batch_size", int, 128, "graphs per batch"),
    Opt("temperature", float, 0.5, "contrastive temperature"),
    Opt("probe_size", int, 256, "graphs in the per-epoch diagnostics probe"),
    Opt("out", str, None, "checkpoint path (default: <out-dir>/checkpoint.json)"),
]

EVAL_OPTS = DATASET_OPTS + RUN_OPTS + [
    Opt("ckpt", str, None, "checkpoint to evaluate", required=True),
    Opt("folds", int, 10, "cross-validation folds"),
    Opt("repeats", int, 5, "independent fold splits"),
    Opt("space", str, "h", "embedding space fed to the classifier", choices=("h", "z")),
]

DIAGNOSE_OPTS = DATASET_OPTS + RUN_OPTS + [
    Opt("ckpt", str, None, "checkpoint to diagnose", required=True),
    Opt("eta", float, 1.0, "perturbation magnitude for the alignment probe"),
    Opt("sigma_rule", str, "per-tensor-std", "noise scale rule: per-tensor-std or fixed:<v>"),
    Opt("sample_size", int, 256, "graphs sampled for the metrics"),
    Opt("trajectory", str, None, "existing trajectory CSV to re-render"),
]

SWEEP_OPTS = DATASET_OPTS + ENCODER_OPTS + RUN_OPTS + [
    Opt("grid", str, "0,0.1,0.5,1.0,5.0", "comma-separated eta values"),
    Opt("num_seeds", int, 1, "seeds per grid point (seed, seed+1, ...)"),
    Opt("sigma_rule", str, "per-tensor-std", "noise scale rule"),
    Opt("epochs", int, 20, "training epochs"),
    Opt("batch_size", int, 128, "graphs per batch"),
    Opt("lr", float, 0.01, "learning rate"),
    Opt("optimizer", str, "adaptive_moment", "optimizer", choices=("sgd", "adaptive_moment")),
    Opt("temperature", float, 0.5, "contrastive temperature"),
    Opt("probe_size", int, 256, "graphs in the per-epoch diagnostics probe"),
    Opt("folds", int, 10, "cross-validation folds"),
    Opt("repeats", int, 5, "independent fold splits"),
    Opt("space", str, "h", "embedding space fed to the classifier", choices=("h", "z")),
]

COMMANDS = {
    "pretrain": PRETRAIN_OPTS,
    "at-pretrain": AT_PRETRAIN_OPTS,
    "eval": EVAL_OPTS,
    "diagnose": DIAGNOSE_OPTS,
    "sweep-eta": SWEEP_OPTS,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="simgrace", description=__doc__)
    parser.add_argument("--version", action="version", version=f"simgrace {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for command, opts in COMMANDS.items():
        p = sub.add_parser(command)
        p.add_argument("--config", type=str, default=None, help="flat key=value config file")
        for opt in opts:
            flag = "--" + opt.name.replace("_", "-")
            if opt.type is bool:
                p.add_argument(flag, action="store_const", const=True, default=None, help=opt.help)
            else:
                p.add_argument(flag, type=opt.type, default=None, choices=opt.choices, help=opt.help)
    return parser


def _parse_config_file(path: str) -> dict[str, str]:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _coerce(opt: Opt, text: str):
    if opt.type is bool:
        lowered = text.lower()
        if lowered in ("1", "true", "yes"):
            return True
        if lowered in ("0", "false", "no"):
            return False
        raise ConfigError(f"{opt.name}: cannot parse boolean {text!r}")
    return opt.type(text)


def resolve_config(args: argparse.Namespace) -> dict:
    """Materialize every option: flags > config file > defaults."""
    opts = COMMANDS[args.command]
    file_values = _parse_config_file(args.config) if args.config else {}
    known = {opt.name for opt in opts}
    unknown = set(file_values) - known
    if unknown:
        raise ConfigError(f"unknown key(s) in config file: {', '.join(sorted(unknown))}")
    resolved = {}
    for opt in opts:
        flag_value = getattr(args, opt.name)
        if flag_value is not None:
            resolved[opt.name] = flag_value
        elif opt.name in file_values:
            resolved[opt.name] = _coerce(opt, file_values[opt.name])
        else:
            resolved[opt.name] = opt.default
        if resolved[opt.name] is None and opt.required:
            raise ConfigError(f"missing required option --{opt.name.replace('_', '-')}")
    return resolved


def _out_dir(cfg: dict, command: str) -> Path:
    if cfg["out_dir"]:
        return Path(cfg["out_dir"])
    root = Path(os.environ.get("SIMGRACE_OUT_ROOT", "runs"))
    return root / f"{command}-{cfg['name']}-seed{cfg['seed']}"


def load_featurized(cfg: dict) -> Dataset:
    dataset_dir = Path(cfg["dataset"])
    if not dataset_dir.is_dir():
        raise IngestionError(f"dataset directory not found: {dataset_dir}")
    dataset = parse_tudataset(dataset_dir, cfg["name"])
    scheme = cfg["features"]
    if scheme == "auto":
        scheme = "node-label-onehot" if dataset.graphs[0].node_labels is not None else "degree-onehot"
    return featurize(dataset, scheme.replace("-", "_"), degree_cap=cfg["degree_cap"])


def _encoder_config(cfg: dict, feature_dim: int) -> EncoderConfig:
    return EncoderConfig(
        feature_dim=feature_dim,
        num_layers=cfg["num_layers"],
        hidden_dim=cfg["hidden_dim"],
        use_normalization=not cfg["no_normalization"],
    )


def _cmd_pretrain(cfg: dict) -> int:
    out_dir = _out_dir(cfg, "pretrain")
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = {**cfg, "out_dir": str(out_dir)}
    ckpt_path = Path(cfg["out"]) if cfg["out"] else out_dir / "checkpoint.json"
    csv_path = out_dir / "trajectory.csv"
    write_manifest(
        out_dir / "manifest.json", "pretrain", cfg, cfg["seed"],
        dataset_fingerprint(cfg["dataset"], cfg["name"]),
        {"checkpoint": str(ckpt_path), "trajectory": str(csv_path)},
        __version__,
    )
    dataset = load_featurized(cfg)
    enc_config = _encoder_config(cfg, dataset.feature_dim)
    train_cfg = TrainConfig(
        epochs=cfg["epochs"],
        batch_size=cfg["batch_size"],
        learning_rate=cfg["lr"],
        optimizer=cfg["optimizer"],
        perturbation=PerturbationConfig.parse_rule(cfg["sigma_rule"], eta=cfg["eta"], seed=cfg["seed"]),
        loss=LossConfig(temperature=cfg["temperature"]),
        seed=cfg["seed"],
        probe_size=cfg["probe_size"],
    )
    _, trajectory = pretrain(dataset, enc_config, train_cfg, checkpoint_path=ckpt_path)
    trajectory_report(trajectory, csv_path)
    return 0


def _cmd_at_pretrain(cfg: dict) -> int:
    out_dir = _out_dir(cfg, "at-pretrain")
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = {**cfg, "out_dir": str(out_dir)}
    ckpt_path = Path(cfg["out"]) if cfg["out"] else out_dir / "checkpoint.json"
    csv_path = out_dir / "trajectory.csv"
    write_manifest(
        out_dir / "manifest.json", "at-pretrain", cfg, cfg["seed"],
        dataset_fingerprint(cfg["dataset"], cfg["name"]),
        {"checkpoint": str(ckpt_path), "trajectory": str(csv_path)},
        __version__,
    )
    dataset = load_featurized(cfg)
    enc_config = _encoder_config(cfg, dataset.feature_dim)
    at_cfg = ATConfig(
        epsilon=cfg["epsilon"],
        zeta=cfg["zeta"],
        inner_iters=cfg["inner_iters"],
        gamma=cfg["gamma"],
        epochs=cfg["epochs"],
        batch_size=cfg["batch_size"],
        loss=LossConfig(temperature=cfg["temperature"]),
        seed=cfg["seed"],
        probe_size=cfg["probe_size"],
    )
    _, trajectory = at_pretrain(dataset, enc_config, at_cfg, checkpoint_path=ckpt_path)
    trajectory_report(trajectory, csv_path)
    return 0


def _cmd_eval(cfg: dict) -> int:
    out_dir = _out_dir(cfg, "eval")
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = {**cfg, "out_dir": str(out_dir)}
    report_path = out_dir / "report.json"
    write_manifest(
        out_dir / "manifest.json", "eval", cfg, cfg["seed"],
        dataset_fingerprint(cfg["dataset"], cfg["name"]),
        {"report": str(report_path)},
        __version__,
    )
    weights, enc_config = load_checkpoint(cfg["ckpt"])
    dataset = load_featurized(cfg)
    embeddings = embed_all(dataset, weights, enc_config, space=cfg["space"])
    report = evaluate(
        embeddings, dataset.labels(), folds=cfg["folds"], repeats=cfg["repeats"],
        rng=np.random.default_rng(cfg["seed"]),
    )
    with open(report_path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")
    log.info("accuracy %.2f +- %.2f", report.mean_accuracy, report.std_accuracy)
    return 0


def _cmd_diagnose(cfg: dict) -> int:
    out_dir = _out_dir(cfg, "diagnose")
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = {**cfg, "out_dir": str(out_dir)}
    report_path = out_dir / "diagnostics.json"
    write_manifest(
        out_dir / "manifest.json", "diagnose", cfg, cfg["seed"],
        dataset_fingerprint(cfg["dataset"], cfg["name"]),
        {"report": str(report_path)},
        __version__,
    )
    weights, enc_config = load_checkpoint(cfg["ckpt"])
    dataset = load_featurized(cfg)
    rng = np.random.default_rng(cfg["seed"])
    size = min(cfg["sample_size"], len(dataset))
    sample = [dataset.graphs[int(i)] for i in rng.choice(len(dataset), size=size, replace=False)]
    pert_cfg = PerturbationConfig.parse_rule(cfg["sigma_rule"], eta=cfg["eta"], seed=cfg["seed"])
    perturbed = sample_perturbed(weights, pert_cfg, rng)
    payload = {
        "alignment": alignment(sample, weights, perturbed, enc_config),
        "uniformity": uniformity(sample, weights, enc_config),
        "sample_size": size,
        "eta": cfg["eta"],
    }
    with open(report_path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    if cfg["trajectory"]:
        trajectory_report(read_trajectory_csv(cfg["trajectory"]), out_dir / "trajectory.csv")
    log.info("alignment=%.6f uniformity=%.6f", payload["alignment"], payload["uniformity"])
    return 0


def _cmd_sweep_eta(cfg: dict) -> int:
    out_dir = _out_dir(cfg, "sweep-eta")
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = {**cfg, "out_dir": str(out_dir)}
    sweep_path = out_dir / "sweep.csv"
    write_manifest(
        out_dir / "manifest.json", "sweep-eta", cfg, cfg["seed"],
        dataset_fingerprint(cfg["dataset"], cfg["name"]),
        {"sweep": str(sweep_path)},
        __version__,
    )
    try:
        grid = [float(v) for v in cfg["grid"].split(",") if v.strip() != ""]
    except ValueError:
        raise ConfigError(f"cannot parse --grid {cfg['grid']!r}") from None
    if not grid:
        raise ConfigError("--grid must list at least one eta value")
    if cfg["num_seeds"] < 1:
        raise ConfigError("--num-seeds must be >= 1")
    dataset = load_featurized(cfg)
    enc_config = _encoder_config(cfg, dataset.feature_dim)
    rows = []
    for eta in grid:
        seed_means = []
        seed_stds = []
        for j in range(cfg["num_seeds"]):
            seed = cfg["seed"] + j
            run_dir = out_dir / f"eta-{eta:g}-seed{seed}"
            train_cfg = TrainConfig(
                epochs=cfg["epochs"],
                batch_size=cfg["batch_size"],
                learning_rate=cfg["lr"],
                optimizer=cfg["optimizer"],
                perturbation=PerturbationConfig.parse_rule(cfg["sigma_rule"], eta=eta, seed=seed),
                loss=LossConfig(temperature=cfg["temperature"]),
                seed=seed,
                probe_size=cfg["probe_size"],
            )
            weights, trajectory = pretrain(
                dataset, enc_config, train_cfg, checkpoint_path=run_dir / "checkpoint.json"
            )
            trajectory_report(trajectory, run_dir / "trajectory.csv")
            embeddings = embed_all(dataset, weights, enc_config, space=cfg["space"])
            report = evaluate(
                embeddings, dataset.labels(), folds=cfg["folds"], repeats=cfg["repeats"],
                rng=np.random.default_rng(seed),
            )
            seed_means.append(report.mean_accuracy)
            seed_stds.append(report.std_accuracy)
        if cfg["num_seeds"] > 1:
            mean_acc = float(np.mean(seed_means))
            std_acc = float(np.std(seed_means))
        else:
            mean_acc, std_acc = seed_means[0], seed_stds[0]
        flag = "baseline" if eta == 0.0 else ""
        rows.append(f"{eta:g},{mean_acc!r},{std_acc!r},{flag}")
        log.info("eta=%g accuracy %.2f +- %.2f", eta, mean_acc, std_acc)
    sweep_path.write_text("eta,mean_acc,std,flag\n" + "\n".join(rows) + "\n")
    return 0


DISPATCH = {
    "pretrain": _cmd_pretrain,
    "at-pretrain": _cmd_at_pretrain,
    "eval": _cmd_eval,
    "diagnose": _cmd_diagnose,
    "sweep-eta": _cmd_sweep_eta,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    args = _build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        return DISPATCH[args.command](cfg)
    except SimgraceError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
