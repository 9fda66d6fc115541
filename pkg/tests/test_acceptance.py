"""End-to-end acceptance gate.

One test per criterion; each prints a single PASS line with the measured
quantity (visible via ``pytest -s`` or on the terminal through capture
disabling). A failing assert is the FAIL line.
"""

import json
import os
import time

import numpy as np
import pytest

from cmdp_ppo import (Mlp, PpoConfig, SplitSpec, SyntheticSpec, apply_minmax,
                      clean_rows, clip_objective, compute_gae, confusion,
                      evaluate, fit_minmax, focal_loss, generate_synthetic,
                      load_table, make_episode, report, run_episode,
                      stratified_split, train)
from cmdp_ppo.cli import main


def announce(capfd, line):
    with capfd.disabled():
        print(line)


def test_criterion_01_gradient_correctness(capfd):
    # 20 random MLPs (widths <= 8), analytic vs central differences,
    # h=1e-5, max relative error < 1e-4, under 10 s. Smooth tanh hidden
    # units so the finite-difference probe never straddles a kink.
    start = time.monotonic()
    rng = np.random.default_rng(0)
    worst = 0.0
    for trial in range(20):
        sizes = [int(rng.integers(1, 9))
                 for _ in range(int(rng.integers(2, 5)))]
        net = Mlp(sizes, seed=trial, hidden_activation="tanh")
        x = rng.normal(size=sizes[0])
        out_grad = rng.normal(size=sizes[-1])
        _, cache = net.forward_cache(x)
        grads = net.backward(cache, out_grad)

        def loss():
            return float(np.dot(net.forward(x), out_grad))

        h = 1e-5
        for arr, g in zip(net.weights + net.biases,
                          grads.d_weights + grads.d_biases):
            for idx in np.ndindex(arr.shape):
                orig = arr[idx]
                arr[idx] = orig + h
                up = loss()
                arr[idx] = orig - h
                down = loss()
                arr[idx] = orig
                fd = (up - down) / (2 * h)
                denom = max(abs(g[idx]), abs(fd), 1e-8)
                worst = max(worst, abs(g[idx] - fd) / denom)
    elapsed = time.monotonic() - start
    assert worst < 1e-4
    assert elapsed < 10.0
    announce(capfd, f"criterion 1 PASS: max rel grad error {worst:.2e} "
                    f"in {elapsed:.1f}s")


def test_criterion_02_focal_reduction(capfd):
    rng = np.random.default_rng(1)
    p = rng.uniform(0.01, 0.99, size=1000)
    gap = np.max(np.abs(focal_loss(p, 1.0, 0.0) - (-np.log(p))))
    assert gap < 1e-12
    val = focal_loss(0.5, 0.25, 2.0)
    assert abs(val - 0.043322) < 1e-6
    announce(capfd, f"criterion 2 PASS: CE gap {gap:.1e}, "
                    f"FL(0.5)={val:.6f}")


def test_criterion_03_clip_identities(capfd):
    ratios = np.linspace(0.8, 1.2, 10_001)
    adv = np.array([2.5, -1.3, 0.0])
    for a in adv:
        np.testing.assert_array_equal(clip_objective(ratios, a, 0.2),
                                      ratios * a)
    rng = np.random.default_rng(2)
    r = np.exp(rng.normal(size=10_000))
    a = rng.normal(size=10_000)
    assert np.all(clip_objective(r, a, 0.2) <= r * a + 1e-15)
    announce(capfd, "criterion 3 PASS: clip==unclipped on [0.8,1.2], "
                    "clipped<=unclipped on 10000 random pairs")


def test_criterion_04_gae_oracle(capfd):
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(100):
        T = 50
        r = rng.normal(size=T)
        v = np.append(rng.normal(size=T), 0.0)
        dones = np.zeros(T, dtype=bool)
        dones[-1] = True
        adv, _ = compute_gae(r, v, dones, 0.97, 1.0)
        oracle = np.zeros(T)
        for t in range(T):
            oracle[t] = sum(0.97 ** (k - t) * r[k] for k in range(t, T)) - v[t]
        worst = max(worst, float(np.max(np.abs(adv - oracle))))
        adv0, _ = compute_gae(r, v, dones, 0.97, 0.0)
        delta = r + 0.97 * v[1:] * ~dones - v[:-1]
        np.testing.assert_array_equal(adv0, delta)
    assert worst < 1e-10
    announce(capfd, f"criterion 4 PASS: lambda=1 max abs error {worst:.1e}, "
                    f"lambda=0 equals TD residual exactly")


def test_criterion_05_metrics_oracle(capfd):
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(100):
        C = int(rng.integers(2, 9))
        m = rng.integers(0, 25, size=(C, C))
        m[0, 0] += 1
        rep = report(m)
        total = m.sum()
        prec, rec, f1, sup = [], [], [], []
        for c in range(C):
            tp = m[c][c]
            col = sum(m[r_][c] for r_ in range(C))
            row = sum(m[c][j] for j in range(C))
            p = tp / col if col else 0.0
            r_ = tp / row if row else 0.0
            prec.append(p)
            rec.append(r_)
            f1.append(2 * p * r_ / (p + r_) if p + r_ else 0.0)
            sup.append(row)
        acc = sum(m[c][c] for c in range(C)) / total
        checks = [
            rep.accuracy - acc,
            rep.recall_weighted - rep.accuracy,
            rep.precision_weighted - sum(s * p for s, p in zip(sup, prec)) / total,
            rep.recall_weighted - sum(s * r_ for s, r_ in zip(sup, rec)) / total,
            rep.f1_weighted - sum(s * f for s, f in zip(sup, f1)) / total,
        ]
        checks += [a - b for a, b in zip(rep.precision, prec)]
        checks += [a - b for a, b in zip(rep.recall, rec)]
        checks += [a - b for a, b in zip(rep.f1, f1)]
        worst = max(worst, max(abs(x) for x in checks))
    assert worst < 1e-12
    announce(capfd, f"criterion 5 PASS: max deviation from brute force "
                    f"{worst:.1e} over 100 matrices")


def test_criterion_06_cmdp_contract(capfd):
    rng = np.random.default_rng(5)
    table = generate_synthetic(SyntheticSpec(
        [300, 300], [np.full(2, -1.0), np.full(2, 1.0)],
        [np.ones(2)] * 2, 2, seed=0))
    actor = Mlp([2, 8, 2], seed=0)
    critic = Mlp([2, 8, 1], "value", seed=1)
    B = 64
    for ep_idx in range(1000):
        ep = make_episode(table, B, int(rng.integers(1 << 30)))
        transitions = run_episode(actor, critic, ep, "sample",
                                  rng=int(rng.integers(1 << 30)))
        assert len(transitions) == B
        assert sum(tr.done for tr in transitions) == 1 and transitions[-1].done
        correct = sum(tr.action == tr.label for tr in transitions)
        total = sum(tr.reward for tr in transitions)
        assert total == correct * 1.0 + (B - correct) * -1.0
    announce(capfd, f"criterion 6 PASS: 1000 episodes, each {B} transitions, "
                    "one terminal, reward identity exact")


def test_criterion_07_learnability_smoke(capfd):
    start = time.monotonic()
    table = generate_synthetic(SyntheticSpec(
        [1000, 1000], [np.full(2, -2.0), np.full(2, 2.0)],
        [np.full(2, 0.5)] * 2, 2, seed=0))
    train_tbl, test_tbl = stratified_split(table, SplitSpec(0.2, True, 0))
    stats = fit_minmax(train_tbl)
    train_tbl = apply_minmax(stats, train_tbl)
    test_tbl = apply_minmax(stats, test_tbl)
    cfg = PpoConfig(variant=1, epochs=30, seed=0)
    actor, _, _ = train(cfg, train_tbl)
    acc = evaluate(actor, test_tbl, cfg.batch_size).accuracy
    elapsed = time.monotonic() - start
    assert acc >= 0.95
    assert elapsed < 60.0
    announce(capfd, f"criterion 7 PASS: accuracy {acc:.3f} in {elapsed:.1f}s")


def test_criterion_08_imbalance_ordering(capfd):
    # Overlapping blobs, 19:1 imbalance, medians over 5 seeds. Geometry
    # knobs not pinned elsewhere: 3 features, 40% test split (finer
    # recall granularity on the 500-sample minority class).
    d = 3
    table = generate_synthetic(SyntheticSpec(
        [9500, 500], [np.full(d, -1.0), np.full(d, 1.0)],
        [np.ones(d)] * 2, d, seed=7))
    train_tbl, test_tbl = stratified_split(table, SplitSpec(0.4, True, 0))
    stats = fit_minmax(train_tbl)
    train_tbl = apply_minmax(stats, train_tbl)
    test_tbl = apply_minmax(stats, test_tbl)

    recalls = {1: [], 2: [], 3: []}
    for seed in range(5):
        for variant in (1, 2, 3):
            cfg = PpoConfig(variant=variant, epochs=100, seed=seed,
                            updates_per_epoch=32)
            actor, _, _ = train(cfg, train_tbl)
            rep = evaluate(actor, test_tbl, cfg.batch_size)
            recalls[variant].append(rep.recall[1])
    m1, m2, m3 = (float(np.median(recalls[v])) for v in (1, 2, 3))
    diff = float(np.median(np.array(recalls[3]) - np.array(recalls[1])))
    strict = sum(a > b for a, b in zip(recalls[3], recalls[1]))
    assert m3 >= m2 >= m1, (m1, m2, m3)
    assert diff >= 0.05, diff
    assert strict >= 4, (strict, recalls)
    announce(capfd, f"criterion 8 PASS: median minority recall "
                    f"M3 {m3:.3f} >= M2 {m2:.3f} >= M1 {m1:.3f}, "
                    f"median(M3-M1) {diff:.3f}, strict in {strict}/5 seeds")


CICIDS_CANDIDATES = [
    "/root/pkg/data/Wednesday-workingHours.pcap_ISCX.csv",
    "/root/data/Wednesday-workingHours.pcap_ISCX.csv",
    "/data/Wednesday-workingHours.pcap_ISCX.csv",
]


def test_criterion_09_cicids_wednesday(capfd):
    path = next((p for p in CICIDS_CANDIDATES if os.path.isfile(p)), None)
    if path is None:
        announce(capfd, "criterion 9 SKIP: CICIDS2017 Wednesday capture not "
                        "present in this environment (no network access to "
                        "fetch it); conditional criterion recorded as skipped")
        pytest.skip("CICIDS2017 Wednesday file absent")
    start = time.monotonic()
    table = load_table(path, "Label")
    table, _ = clean_rows(table)
    # 5% stratified subsample via the split machinery
    _, sub = stratified_split(table, SplitSpec(0.05, True, 0))
    train_tbl, test_tbl = stratified_split(sub, SplitSpec(0.2, True, 0))
    stats = fit_minmax(train_tbl)
    train_tbl = apply_minmax(stats, train_tbl)
    test_tbl = apply_minmax(stats, test_tbl)
    cfg = PpoConfig(variant=3, epochs=100, seed=0, hidden_width=48)
    actor, _, _ = train(cfg, train_tbl)
    rep = evaluate(actor, test_tbl, cfg.batch_size)
    elapsed = time.monotonic() - start
    assert rep.f1_weighted >= 0.95
    assert elapsed < 1800
    announce(capfd, f"criterion 9 PASS: weighted F1 {rep.f1_weighted:.4f} "
                    f"in {elapsed:.0f}s")


def test_criterion_10_determinism(capfd, tmp_path):
    spec = tmp_path / "s.cfg"
    spec.write_text("n_features=2\ncounts=200,50\nseed=2\n"
                    "mean_0=-1,-1\nstd_0=1,1\nmean_1=1,1\nstd_1=1,1\n")
    data = tmp_path / "d.csv"
    assert main(["gen", "--spec", str(spec), "--out", str(data)]) == 0
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"data={data}\nepochs=5\nbatch_size=32\n"
                   "steps_per_rollout=32\nmemory_capacity=320\nseed=3\n")
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["train", "--config", str(cfg), "--out", str(out)]) == 0
        outs.append(out)
    metrics = [open(o / "metrics.json", "rb").read() for o in outs]
    history = [open(o / "history.csv", "rb").read() for o in outs]
    assert metrics[0] == metrics[1]
    assert history[0] == history[1]
    json.loads(metrics[0])  # well-formed
    announce(capfd, "criterion 10 PASS: repeated train runs byte-identical "
                    "(metrics.json, history.csv)")
