"""Acceptance criteria, one test each, each reporting a single PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the lines are printed in
the "acceptance criteria" section of the terminal summary.
"""
import math
import time
from dataclasses import replace

import numpy as np
import pytest

from adversarial_au.config import ExperimentConfig, prepare_splits, run_experiment
from adversarial_au.data import (Dataset, apply_missing, default_label_spec, enumerate_distribution,
                                 generate_dataset, load_dataset, sample_labels, save_dataset)
from adversarial_au.diff_core import grad_check
from adversarial_au.losses import AdamHyper, AdamState, adam_step, bce_loss, d_loss, r_adv_loss
from adversarial_au.metrics import accuracy, auc, binarize, conditional_diff, f1_score, marginal_diff
from adversarial_au.models import (ClassifierSpec, DiscriminatorSpec, init_params, load_checkpoint,
                                   mlp_backward, mlp_forward, save_checkpoint)
from adversarial_au.seeding import derive_seed
from adversarial_au.trainer import (TrainConfig, classifier_objective, discriminator_gradient,
                                    init_models, train)

from conftest import ACCEPTANCE_LINES
from oracles import (brute_accuracy, brute_auc, brute_conditional_diff, brute_f1, brute_marginals,
                     reference_supervised_train)


def record(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    assert ok, line


# -- 1 ------------------------------------------------------------------------

def _grad_instances(rng):
    """Yield ``(name, error)`` for every gradient family, 20 instances each."""
    for _ in range(20):
        n, l = int(rng.integers(1, 6)), int(rng.integers(1, 5))
        y = (rng.random((n, l)) < 0.5).astype(float)
        p0 = rng.uniform(0.05, 0.95, (n, l))
        yield "bce_loss", grad_check(lambda p: bce_loss(p.reshape(n, l), y), p0)

        r0, f0 = rng.uniform(0.05, 0.95, n), rng.uniform(0.05, 0.95, n)
        yield "d_loss", grad_check(
            lambda v: (lambda res: (res[0], np.concatenate(res[1:])))(d_loss(v[:n], v[n:])),
            np.concatenate([r0, f0]))
        yield "r_adv_loss", grad_check(r_adv_loss, f0)

        d = int(rng.integers(2, 6))
        R = init_params(ClassifierSpec(d, l, (int(rng.integers(2, 6)),)), int(rng.integers(1 << 30)))
        D = init_params(DiscriminatorSpec(l, int(rng.integers(2, 6))), int(rng.integers(1 << 30)))
        x_lab = rng.normal(size=(n, d))
        x_unl = rng.normal(size=(int(rng.integers(0, 4)), d))
        alpha = float(rng.uniform(0, 1))

        def composite(flat):
            total, _, _, g = classifier_objective(R.with_flat(flat), D, x_lab, y, x_unl, alpha)
            return total, g
        yield "classifier objective", grad_check(composite, R.flatten())

        w_out = rng.normal(size=(n, l))

        def r_net(flat):
            P = R.with_flat(flat)
            out, caches = mlp_forward(P, x_lab)
            return float((w_out * out).sum()), mlp_backward(P, caches, w_out)[1]
        yield "classifier backward", grad_check(r_net, R.flatten())

        real, fake = rng.random((n, l)), rng.random((n, l))
        yield "discriminator backward", grad_check(
            lambda flat: discriminator_gradient(D.with_flat(flat), real, fake), D.flatten())


def test_criterion_1_gradient_integrity():
    t0 = time.perf_counter()
    worst, counts = {}, {}
    for name, err in _grad_instances(np.random.default_rng(1)):
        worst[name] = max(worst.get(name, 0.0), err)
        counts[name] = counts.get(name, 0) + 1
    elapsed = time.perf_counter() - t0
    ok = all(e < 1e-4 for e in worst.values()) and min(counts.values()) >= 20 and elapsed < 30
    record(1, ok, f"worst rel err {max(worst.values()):.2e} over {len(worst)} families "
                  f"x {min(counts.values())} instances, {elapsed:.1f}s")


# -- 2 ------------------------------------------------------------------------

def _close(got, want):
    return math.isnan(got) if want is None else abs(got - want) <= 1e-12


def test_criterion_2_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    bad = []
    for i in range(100):
        n, l = int(rng.integers(2, 31)), int(rng.integers(1, 6))
        probs = np.round(rng.random((n, l)), 2)
        truth = (rng.random((n, l)) < rng.uniform(0.1, 0.9)).astype(float)
        pred = binarize(probs, 0.5)
        pl, tl = pred.tolist(), truth.tolist()
        for j in range(l):
            pc, tc = [r[j] for r in pl], [r[j] for r in tl]
            if not _close(f1_score(pred[:, j], truth[:, j]), brute_f1(pc, tc)):
                bad.append(("f1", i, j))
            if not _close(auc(probs[:, j], truth[:, j]), brute_auc(probs[:, j].tolist(), tc)):
                bad.append(("auc", i, j))
            if not _close(accuracy(pred[:, j], truth[:, j]), brute_accuracy(pc, tc)):
                bad.append(("accuracy", i, j))
        mp, mt, md = marginal_diff(pred, truth)
        bp, bt = brute_marginals(pl), brute_marginals(tl)
        if not all(_close(a, b) for a, b in zip(list(mp) + list(mt) + list(md),
                                                bp + bt + [abs(x - y) for x, y in zip(bp, bt)])):
            bad.append(("marginal_diff", i))
        support = int(rng.integers(1, 6))
        if not _close(conditional_diff(pred, truth, support).mean,
                      brute_conditional_diff(pl, tl, support)):
            bad.append(("conditional_diff", i))
    elapsed = time.perf_counter() - t0
    record(2, not bad and elapsed < 10,
           f"100 instances, {len(bad)} mismatches {bad[:3]}, {elapsed:.1f}s")


# -- 3 ------------------------------------------------------------------------

def test_criterion_3_exact_distribution():
    t0 = time.perf_counter()
    table = enumerate_distribution(default_label_spec())
    norm_err = abs(table.probs.sum() - 1.0)
    y = sample_labels(table, 100_000, 3)
    m_err = np.max(np.abs(y.mean(0) - table.marginals()))
    counts = y.sum(0)
    emp_cond = (y.T @ y) / counts[None, :]
    off = ~np.eye(table.n_labels, dtype=bool)
    c_err = np.max(np.abs(emp_cond - table.conditionals())[off])
    elapsed = time.perf_counter() - t0
    ok = norm_err <= 1e-12 and m_err <= 0.01 and c_err <= 0.02 and elapsed < 60
    record(3, ok, f"|sum-1|={norm_err:.1e}, marginal err {m_err:.4f}, "
                  f"conditional err {c_err:.4f}, {elapsed:.1f}s")


# -- 4 ------------------------------------------------------------------------

def apply_half_mask(ds):
    return apply_missing(ds, 0.5, 99)


def test_criterion_4_reduction_to_baseline():
    ds = apply_half_mask(generate_dataset(400, 8, 1.0, 4))
    cfg = TrainConfig(K=150, alpha=0.0, m2=0, m1=16, H_D=2, hidden_dims=(12, 10), seed=4,
                      eval_every=50)
    trajectory = []
    train(cfg, ds, callback=lambda step, R, D: trajectory.append(R.flatten()))
    R0, _ = init_models(cfg, ds.d, ds.n_labels)
    h = cfg.adam_R
    worst = [0.0]

    def compare(step, W, b):
        ref = np.concatenate([a for w, v in zip(W, b) for a in (w.ravel(), v.ravel())])
        worst[0] = max(worst[0], float(np.max(np.abs(ref - trajectory[step - 1]))))

    reference_supervised_train(R0.weights, R0.biases, ds.training_view(), cfg.K, cfg.m1,
                               h.lr, h.beta1, h.beta2, h.eps,
                               np.random.default_rng(derive_seed(cfg.seed, "r_batch")), compare)
    record(4, worst[0] <= 1e-12 and len(trajectory) == cfg.K,
           f"max |theta - theta_ref| over {cfg.K} steps = {worst[0]:.1e}")


# -- 5 ------------------------------------------------------------------------

def test_criterion_5_mask_isolation():
    ds = apply_half_mask(generate_dataset(300, 8, 1.0, 5))
    hidden = ~ds.labeled_mask
    rng = np.random.default_rng(55)
    scrambled = ds.labels.copy()
    scrambled[hidden] = (rng.random((hidden.sum(), ds.n_labels)) < 0.5).astype(float)
    ds2 = Dataset(ds.features, scrambled, ds.labeled_mask)
    assert not np.array_equal(ds.labels, ds2.labels)
    cfg = TrainConfig(K=200, hidden_dims=(16,), seed=5, eval_every=100)
    R1, _ = train(cfg, ds)
    R2, _ = train(cfg, ds2)
    record(5, R1.equals(R2), f"{int(hidden.sum())} hidden rows scrambled, classifier "
                              f"{'bitwise identical' if R1.equals(R2) else 'changed'}")


# -- 6 ------------------------------------------------------------------------

def test_criterion_6_distribution_matching_benefit():
    t0 = time.perf_counter()
    wins, lines = 0, []
    for seed in range(5):
        exp = ExperimentConfig().with_seed(seed)
        dataset = generate_dataset(exp.n, exp.d, exp.noise_sigma, derive_seed(seed, "data"),
                                   exp.label_spec)
        base = run_experiment(replace(exp, train=replace(exp.train, alpha=0.0)), dataset).report
        adv = run_experiment(exp, dataset).report
        win = (adv.conditional_abs_diff_mean < base.conditional_abs_diff_mean
               and adv.marginal_diff_mean < base.marginal_diff_mean
               and adv.avg_f1 >= base.avg_f1 - 0.01)
        wins += win
        lines.append(f"s{seed}:{'W' if win else 'L'}")
    elapsed = time.perf_counter() - t0
    record(6, wins >= 4 and elapsed < 600, f"alpha=0.01 beats alpha=0 in {wins}/5 seeds "
                                           f"({' '.join(lines)}), {elapsed:.0f}s")


# -- 7 ------------------------------------------------------------------------

def test_criterion_7_missing_rate_trend():
    means = []
    for rate in (0.1, 0.3, 0.5):
        f1s = [run_experiment(replace(ExperimentConfig(missing_rate=rate).with_seed(s))).report.avg_f1
               for s in range(3)]
        means.append(float(np.mean(f1s)))
    ok = means[0] >= means[1] >= means[2]
    record(7, ok, "mean avg F1 at missing rate 0.1/0.3/0.5 = " + "/".join(f"{m:.4f}" for m in means))


# -- 8 ------------------------------------------------------------------------

def _independent(p, n, rng):
    return (rng.random((n, 8)) < p).astype(float)


def _train_d(sample_real, sample_fake, steps=600, m=64, seed=8):
    D = init_params(DiscriminatorSpec(8, 32), seed)
    state, hyper = AdamState.zeros(D.size), AdamHyper(lr=1e-3)
    for _ in range(steps):
        _, g = discriminator_gradient(D, sample_real(m), sample_fake(m))
        flat, state = adam_step(D.flatten(), g, state, hyper)
        D = D.with_flat(flat)
    return D


def _d_accuracy(D, real, fake):
    s_real = mlp_forward(D, real)[0][:, 0]
    s_fake = mlp_forward(D, fake)[0][:, 0]
    return (np.sum(s_real >= 0.5) + np.sum(s_fake < 0.5)) / (real.shape[0] + fake.shape[0])


def test_criterion_8_discriminator_sanity():
    rng = np.random.default_rng(8)
    D = _train_d(lambda m: _independent(0.85, m, rng), lambda m: _independent(0.15, m, rng))
    sep = _d_accuracy(D, _independent(0.85, 5000, rng), _independent(0.15, 5000, rng))

    table = enumerate_distribution(default_label_spec())
    draws = iter(range(10**6))
    same = lambda m: sample_labels(table, m, derive_seed(8, f"draw{next(draws)}"))
    D2 = _train_d(same, same)
    idn = _d_accuracy(D2, same(5000), same(5000))
    ok = sep > 0.9 and abs(idn - 0.5) <= 0.05
    record(8, ok, f"separated accuracy {sep:.4f}, identical accuracy {idn:.4f} (10k draws)")


# -- 9 ------------------------------------------------------------------------

def test_criterion_9_determinism_and_io(tmp_path):
    exp = replace(ExperimentConfig(n=400), train=replace(TrainConfig(), K=150, eval_every=10))
    h1 = run_experiment(exp).history.to_csv().encode()
    h2 = run_experiment(exp).history.to_csv().encode()
    same_history = h1 == h2

    ds, _ = prepare_splits(exp)
    save_dataset(ds, tmp_path / "d.csv")
    back = load_dataset(tmp_path / "d.csv")
    data_ok = back.equals(ds) or (np.array_equal(back.features, ds.features)
                                  and np.array_equal(back.labels, ds.labels)
                                  and np.array_equal(back.labeled_mask, ds.labeled_mask))

    R, D = init_models(TrainConfig(seed=9), 16, 8)
    R = R.with_flat(R.flatten() + np.random.default_rng(9).normal(size=R.size) * 1e-3)
    ok_ckpt = True
    for name, params in (("r", R), ("d", D)):
        save_checkpoint(params, tmp_path / f"{name}.ckpt")
        ok_ckpt &= load_checkpoint(tmp_path / f"{name}.ckpt").equals(params)
    record(9, same_history and data_ok and ok_ckpt,
           f"history identical={same_history}, dataset round trip={data_ok}, "
           f"checkpoint round trip={ok_ckpt}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
