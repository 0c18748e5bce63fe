"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Criteria 1, 2, 3 and 8 run against the real MUTAG files (TUDataset layout)
located via the SIMGRACE_DATA environment variable or <repo>/data/MUTAG.
They fail with an explicit message when the dataset is not present; the
machinery they exercise is covered on synthetic data by the rest of the
suite.

Run with ``pytest tests/test_acceptance.py -v -s``.
"""

import math

import numpy as np
import pytest

from simgrace.at_train import ATConfig, at_pretrain, batch_loss, inner_maximize, sharpness_probe
from simgrace.cli import main as cli_main
from simgrace.data import featurize, make_batch, parse_tudataset
from simgrace.evaluation import embed_all, evaluate
from simgrace.loss import LossConfig, nt_xent
from simgrace.perturb import PerturbationConfig, sample_perturbed
from simgrace.train import TrainConfig, pretrain
from simgrace.weights import EncoderConfig, add_delta, init_weights

from conftest import mutag_directory, two_class_dataset
from oracles import gradient_check
from test_loss import brute_force_losses

MUTAG_MISSING = (
    "MUTAG dataset not found: set SIMGRACE_DATA to a directory containing "
    "MUTAG/ or place the TUDataset files under <repo>/data/MUTAG. This "
    "criterion needs the real data and cannot run offline without it."
)


def _report(num: int, ok: bool, description: str, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"\nACCEPTANCE {num:02d} [{status}] {description}{suffix}", flush=True)


def _mutag_or_fail(num: int, description: str):
    directory = mutag_directory()
    if directory is None:
        _report(num, False, description, "dataset missing")
        pytest.fail(MUTAG_MISSING)
    return directory


def _mutag_encoder_config(dataset):
    return EncoderConfig(feature_dim=dataset.feature_dim, num_layers=3, hidden_dim=32)


def _pretrain_mutag(dataset, seed, eta=1.0, epochs=20):
    cfg = TrainConfig(
        epochs=epochs,
        batch_size=128,
        learning_rate=0.01,
        optimizer="adaptive_moment",
        perturbation=PerturbationConfig(eta=eta),
        loss=LossConfig(temperature=0.5),
        seed=seed,
    )
    return pretrain(dataset, _mutag_encoder_config(dataset), cfg)


def test_c01_mutag_unsupervised_accuracy():
    description = "MUTAG unsupervised accuracy >= 84.0% (3x32 encoder, batch 128, 20 epochs)"
    directory = _mutag_or_fail(1, description)
    dataset = featurize(parse_tudataset(directory, "MUTAG"), "node_label_onehot")
    weights, _ = _pretrain_mutag(dataset, seed=0)
    embeddings = embed_all(dataset, weights, _mutag_encoder_config(dataset))
    assert embeddings.shape == (188, 32)
    report = evaluate(embeddings, dataset.labels(), folds=10, repeats=5, rng=np.random.default_rng(0))
    ok = report.mean_accuracy >= 84.0
    _report(1, ok, description, f"mean={report.mean_accuracy:.2f}% +- {report.std_accuracy:.2f}")
    assert ok


def test_c02_alignment_uniformity_improve_over_training():
    description = "MUTAG: alignment and uniformity at epoch 20 below epoch 2 (3-seed average)"
    directory = _mutag_or_fail(2, description)
    dataset = featurize(parse_tudataset(directory, "MUTAG"), "node_label_onehot")
    align_2, align_20, unif_2, unif_20 = [], [], [], []
    for seed in range(3):
        _, traj = _pretrain_mutag(dataset, seed=seed)
        align_2.append(traj.records[1].alignment)
        align_20.append(traj.records[19].alignment)
        unif_2.append(traj.records[1].uniformity)
        unif_20.append(traj.records[19].uniformity)
    ok = np.mean(align_20) < np.mean(align_2) and np.mean(unif_20) < np.mean(unif_2)
    _report(
        2, ok, description,
        f"alignment {np.mean(align_2):.4f}->{np.mean(align_20):.4f}, "
        f"uniformity {np.mean(unif_2):.4f}->{np.mean(unif_20):.4f}",
    )
    assert ok


def test_c03_eta_sweep_beats_baseline():
    description = "MUTAG eta sweep: best eta > 0 beats eta = 0 by >= 1.0 point (5-seed average)"
    directory = _mutag_or_fail(3, description)
    dataset = featurize(parse_tudataset(directory, "MUTAG"), "node_label_onehot")
    grid = (0.0, 0.1, 0.5, 1.0, 5.0)
    means = {}
    for eta in grid:
        accs = []
        for seed in range(5):
            weights, _ = _pretrain_mutag(dataset, seed=seed, eta=eta)
            embeddings = embed_all(dataset, weights, _mutag_encoder_config(dataset))
            report = evaluate(
                embeddings, dataset.labels(), folds=10, repeats=5,
                rng=np.random.default_rng(seed),
            )
            accs.append(report.mean_accuracy)
        means[eta] = float(np.mean(accs))
    baseline = means[0.0]
    best_eta = max((e for e in grid if e > 0), key=lambda e: means[e])
    ok = means[best_eta] >= baseline + 1.0
    _report(
        3, ok, description,
        f"baseline={baseline:.2f}%, best eta={best_eta:g} at {means[best_eta]:.2f}%",
    )
    assert ok


def test_c04_gradient_finite_difference():
    description = "gradient check: every named tensor within 1e-4 of central differences"
    worst = 0.0
    for use_norm in (True, False):
        from conftest import random_attributed_graphs

        rng = np.random.default_rng(7)
        graphs = random_attributed_graphs(3, 4, rng)
        for g in graphs:
            g.node_features = 2.0 * g.node_features
        batch = make_batch(graphs)
        cfg = EncoderConfig(feature_dim=4, num_layers=2, hidden_dim=8, use_normalization=use_norm)
        anchor = init_weights(cfg, np.random.default_rng(0))
        view = sample_perturbed(anchor, PerturbationConfig(eta=1.0), np.random.default_rng(1))
        for wrt in ("anchor", "view"):
            errors = gradient_check(batch, anchor, view, cfg, 0.5, wrt=wrt)
            worst = max(worst, max(errors.values()))
    ok = worst < 1e-4
    _report(4, ok, description, f"worst relative error {worst:.2e}")
    assert ok


def test_c05_nt_xent_oracle_equivalence():
    description = "contrastive loss matches brute force (1e-10) and analytic cases (1e-12)"
    rng = np.random.default_rng(123)
    max_err = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 7))
        dim = int(rng.integers(2, 9))
        z = rng.normal(size=(n, dim))
        zp = rng.normal(size=(n, dim))
        temperature = float(rng.uniform(0.1, 2.0))
        _, per_graph = nt_xent(z, zp, LossConfig(temperature=temperature))
        expected = brute_force_losses(z, zp, temperature)
        max_err = max(max_err, float(np.max(np.abs(per_graph - expected))))
    brute_ok = max_err < 1e-10

    z = np.array([[1.0, 0.0], [0.0, 1.0]])
    mean_orth, _ = nt_xent(z, z, LossConfig(temperature=1.0))
    case1_ok = abs(mean_orth - (-1.0)) < 1e-12
    z4 = np.tile([[0.6, 0.8]], (4, 1))
    mean_same, _ = nt_xent(z4, z4, LossConfig(temperature=0.5))
    case2_ok = abs(mean_same - math.log(3)) < 1e-12

    ok = brute_ok and case1_ok and case2_ok
    _report(5, ok, description, f"max brute-force gap {max_err:.2e}")
    assert ok


def test_c06_adversarial_inner_loop_invariants():
    description = "inner ascent: ball constraint on a full run, zero-iteration exactness, ascent bound"
    dataset = two_class_dataset(8)
    enc = EncoderConfig(feature_dim=5, num_layers=3, hidden_dim=32)
    cfg = ATConfig(epochs=20, batch_size=128, seed=0)
    norms: list[float] = []
    at_pretrain(dataset, enc, cfg, delta_norms_out=norms)
    ball_ok = len(norms) == 20 and max(norms) <= cfg.epsilon + 1e-12

    batch = make_batch(dataset.graphs)
    weights = init_weights(enc, np.random.default_rng(0))
    delta0 = inner_maximize(batch, weights, enc, ATConfig(inner_iters=0))
    zero_ok = all(np.array_equal(d, np.zeros_like(d)) for d in delta0.values())

    small = ATConfig(zeta=1e-4, inner_iters=1)
    base = batch_loss(batch, weights, weights, enc, small.loss.temperature)
    delta1 = inner_maximize(batch, weights, enc, small)
    after = batch_loss(batch, add_delta(weights, delta1), weights, enc, small.loss.temperature)
    ascent_ok = after >= base - 1e-8

    ok = ball_ok and zero_ok and ascent_ok
    _report(
        6, ok, description,
        f"max |Delta|={max(norms):.6f} (eps={cfg.epsilon}), ascent change={after - base:.2e}",
    )
    assert ok


def test_c07_perturbation_statistics():
    description = "noise statistics hold in >= 19/20 seeds; eta = 0 is exact with zero alignment"
    enc = EncoderConfig(feature_dim=100, num_layers=1, hidden_dim=100, use_normalization=False)
    ws = init_weights(enc, np.random.default_rng(0))
    cfg = PerturbationConfig(eta=1.0, sigma_rule="fixed", sigma_value=0.1)
    passes = 0
    for seed in range(20):
        out = sample_perturbed(ws, cfg, np.random.default_rng(seed))
        delta = (out["layers.0.lin1.w"] - ws["layers.0.lin1.w"]).ravel()
        if -0.005 < delta.mean() < 0.005 and 0.095 < delta.std() < 0.105:
            passes += 1
    mc_ok = passes >= 19

    identical = sample_perturbed(ws, PerturbationConfig(eta=0.0), np.random.default_rng(3))
    exact_ok = identical.equals(ws)

    dataset = two_class_dataset(8)
    enc_small = EncoderConfig(feature_dim=5, num_layers=2, hidden_dim=8)
    _, traj = pretrain(
        dataset, enc_small,
        TrainConfig(epochs=3, batch_size=8, seed=0, perturbation=PerturbationConfig(eta=0.0)),
    )
    align_ok = all(r.alignment == 0.0 for r in traj.records)

    ok = mc_ok and exact_ok and align_ok
    _report(7, ok, description, f"{passes}/20 seeds within tolerance")
    assert ok


def test_c08_mutag_parser_fidelity():
    description = "MUTAG parses to 188 graphs with mean node count 17.93 +- 0.01"
    directory = _mutag_or_fail(8, description)
    dataset = parse_tudataset(directory, "MUTAG")
    mean_nodes = float(np.mean([g.node_count for g in dataset.graphs]))
    ok = len(dataset.graphs) == 188 and abs(mean_nodes - 17.93) <= 0.01
    _report(8, ok, description, f"graphs={len(dataset.graphs)}, mean nodes={mean_nodes:.4f}")
    assert ok


def test_c09_command_determinism(synthetic_tudataset_dir, tmp_path):
    description = "identical manifests give byte-identical checkpoints and trajectory results"
    # The wall-clock seconds column is excluded from the byte comparison:
    # timing is inherently nondeterministic, while every result field
    # (epoch, loss, alignment, uniformity) and the checkpoint must match
    # byte for byte.
    outcomes = []
    for command, extra in (
        ("pretrain", ["--epochs", "3", "--batch-size", "8"]),
        ("at-pretrain", ["--epochs", "2", "--batch-size", "8"]),
    ):
        dirs = []
        for run in ("a", "b"):
            out = tmp_path / f"{command}-{run}"
            code = cli_main([
                command, "--dataset", str(synthetic_tudataset_dir), "--name", "SYNTH",
                "--seed", "5", "--out-dir", str(out), *extra,
            ])
            assert code == 0
            dirs.append(out)
        ckpt_same = (dirs[0] / "checkpoint.json").read_bytes() == (dirs[1] / "checkpoint.json").read_bytes()
        rows = []
        for d in dirs:
            lines = (d / "trajectory.csv").read_text().strip().splitlines()
            rows.append([",".join(line.split(",")[:4]) for line in lines])
        outcomes.append(ckpt_same and rows[0] == rows[1])
    ok = all(outcomes)
    _report(9, ok, description, "seconds column excluded: wall-clock is not reproducible")
    assert ok


def test_c10_sharpness_trend():
    description = "adversarially trained weights are flatter: worst-of-20-directions probe (3-seed average)"
    # Matched outer optimization (plain SGD at the adversarial outer rate)
    # isolates the view construction, which is what the trend is about.
    dataset = two_class_dataset(8)
    enc = EncoderConfig(feature_dim=5, num_layers=3, hidden_dim=32)
    probe = make_batch(dataset.graphs)
    radius = 0.01
    plain_vals, at_vals = [], []
    for seed in range(3):
        plain_cfg = TrainConfig(epochs=50, batch_size=128, seed=seed, optimizer="sgd", learning_rate=0.01)
        ws_plain, _ = pretrain(dataset, enc, plain_cfg)
        ws_at, _ = at_pretrain(dataset, enc, ATConfig(epochs=50, batch_size=128, seed=seed))
        rng = np.random.default_rng(1000 + seed)
        plain_vals.append(sharpness_probe(probe, ws_plain, enc, 0.5, radius, 20, rng))
        rng = np.random.default_rng(1000 + seed)
        at_vals.append(sharpness_probe(probe, ws_at, enc, 0.5, radius, 20, rng))
    finite_ok = all(np.isfinite(v) for v in plain_vals + at_vals)
    ok = finite_ok and float(np.mean(at_vals)) <= float(np.mean(plain_vals))
    _report(
        10, ok, description,
        f"plain={np.mean(plain_vals):.3e}, adversarial={np.mean(at_vals):.3e}",
    )
    assert ok
