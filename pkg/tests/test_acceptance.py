"""Acceptance criteria, one test each, printing a PASS/FAIL line per criterion.

Run alone with ``pytest tests/test_acceptance.py -v -s``; the lines are also
written when output capture is on.
"""

import dataclasses
import time

import numpy as np
import pytest
import test_data
import test_layers
import test_tensor
import test_training
import test_user_model
from test_cache_bench import cache_agreement, cached_pipeline
from test_metrics import brute_force_gap, random_impressions

from fum.bench import bench_mixers, measure_scaling
from fum.cli import main as cli_main
from fum.config import DESK_CONFIG, TrainConfig
from fum.data import NewsRecord, NewsTable
from fum.gradcheck import finite_difference_check
from fum.layers import FastformerLayer, SelfAttentionLayer, flop_count
from fum.metrics import ablation_run, ablation_tsv, report_from_scores
from fum.model import FUM
from fum.params import ParamStore
from fum.synthetic import SyntheticSpec, generate_synthetic
from fum.training import TrainingSample, batch_loss, run_training


@pytest.fixture
def verdict(capsys):
    def report(number, name, ok, detail, gating=True):
        tag = "PASS" if ok else ("FAIL" if gating else "SOFT-FAIL")
        with capsys.disabled():
            print(f"\n[criterion {number}] {tag} {name}: {detail}")
        return ok

    return report


# 1. gradients of the full model


GRAD_CFG = TrainConfig(m=3, k=2, l=4, d=8, d_genre=4, d_pos=4, H=2, d_h=4, d_att=6, fastformer_layers=1)
# gradients below this cannot be resolved to 1e-4 relative by float64 central differences
GRAD_FLOOR = 1e-6


def grad_problem(seed):
    rng = np.random.default_rng(seed)
    recs = []
    for i in range(8):
        mask = rng.random((2, 4)) < 0.8
        mask[:, 0] = True
        recs.append(NewsRecord(f"N{i}", rng.integers(2, 30, (2, 4)) * mask, mask))
    table = NewsTable(recs, 2, 4)
    samples = [
        TrainingSample(("N0", "N1", "N2"), "N3", ("N4", "N5")),
        TrainingSample(("N6", "N3", "N5"), "N7", ("N0", "N2")),
    ]
    model = FUM(GRAD_CFG.replace(seed=seed), 30)
    model.store.randomize(0.5, seed)
    return lambda: batch_loss(model, table, samples), model.store


def test_criterion_1_gradients(verdict):
    t0 = time.perf_counter()
    floored, strict = [], []
    for seed in range(20):
        forward, store = grad_problem(seed)
        floored.append(finite_difference_check(forward, store, eps=1e-5, seed=seed, floor=GRAD_FLOOR))
        strict.append(finite_difference_check(forward, store, eps=1e-5, seed=seed))
    elapsed = time.perf_counter() - t0
    ok = max(floored) < 1e-4 and elapsed < 120
    detail = (
        f"max rel err {max(floored):.2e} over 20 seeds (floor {GRAD_FLOOR:g}; "
        f"unfloored {max(strict):.2e}), {elapsed:.0f}s"
    )
    assert verdict(1, "finite-difference gradients", ok, detail)


# 2. complexity


def test_criterion_2_complexity(verdict):
    t0 = time.perf_counter()
    store = ParamStore()
    ff = FastformerLayer(store, "ff", 64, 2, 32)
    sa = SelfAttentionLayer(store, "sa", 64, 2, 32)
    f_ratio = flop_count(ff, 2048) / flop_count(ff, 1024)
    s_ratio = flop_count(sa, 2048) / flop_count(sa, 1024)
    report = measure_scaling(bench_mixers(64, 2, 32), [1024, 2048, 4096], trials=5)
    f_times = [report.time_ratio("fastformer", L, 2 * L) for L in (1024, 2048)]
    s_times = [report.time_ratio("self_attention", L, 2 * L) for L in (1024, 2048)]
    elapsed = time.perf_counter() - t0
    ok = f_ratio <= 2.05 and s_ratio >= 3.5 and max(f_times) <= 2.6 and min(s_times) >= 3.0 and elapsed < 300
    detail = (
        f"flop ratio fastformer {f_ratio:.3f}, self-attention {s_ratio:.3f}; "
        f"median time ratios fastformer {', '.join(f'{r:.2f}' for r in f_times)}, "
        f"self-attention {', '.join(f'{r:.2f}' for r in s_times)}; {elapsed:.0f}s"
    )
    assert verdict(2, "complexity scaling", ok, detail)


# 3. learnability


def test_criterion_3_learnability(verdict):
    corpus = generate_synthetic(SyntheticSpec())
    bundle = corpus.bundle(k=DESK_CONFIG.k, l=DESK_CONFIG.l)
    t0 = time.perf_counter()
    result = run_training(bundle, DESK_CONFIG)
    elapsed = time.perf_counter() - t0
    final = result.log[-1].report
    rng = np.random.default_rng(0)
    baseline = report_from_scores([rng.random(len(i.candidates)) for i in bundle.valid], [i.labels for i in bundle.valid])
    ok = final.auc >= 0.90 and abs(baseline.auc - 0.5) <= 0.02 and elapsed < 600
    detail = (
        f"eval AUC {final.auc:.4f} after {DESK_CONFIG.epochs} epochs at lr {DESK_CONFIG.learning_rate:g}; "
        f"random baseline {baseline.auc:.4f}; {elapsed:.0f}s"
    )
    assert verdict(3, "synthetic learnability", ok, detail)


# 4. ablation direction (soft, recorded only)


def test_criterion_4_ablation_direction(verdict):
    wins, rows = 0, []
    for seed in range(5):
        corpus = generate_synthetic(SyntheticSpec(n_users=400, n_news=800, n_train=1500, n_valid=400, seed=seed))
        table = ablation_run(corpus.bundle(k=DESK_CONFIG.k, l=DESK_CONFIG.l), DESK_CONFIG.replace(seed=seed))
        full = table["full"].auc
        wins += full >= table["fine_only"].auc and full >= table["coarse_only"].auc
        rows.append(f"seed {seed}: " + " ".join(f"{m}={r.auc:.4f}" for m, r in table.items()))
        print(ablation_tsv(table))
    verdict(4, "ablation direction (non-gating)", wins >= 4, f"full best in {wins}/5 seeds; " + "; ".join(rows), gating=False)


# 5. metric oracle


def test_criterion_5_metric_oracle(verdict):
    gap = brute_force_gap(random_impressions(1000, seed=12))
    assert verdict(5, "metric oracle equivalence", gap <= 1e-12, f"max deviation {gap:.1e} on 1000 impressions")


# 6. cache equivalence


def test_criterion_6_cache(verdict):
    same, worst = cache_agreement(*cached_pipeline(100))
    ok = same and worst <= 1e-5
    assert verdict(6, "cache equivalence", ok, f"orderings identical: {same}; max relative score deviation {worst:.1e}")


# 7. invariants, 100 randomized cases each


def test_criterion_7_invariants(verdict, tmp_path_factory):
    checks = {
        "permutation equivariance": test_layers.test_mixers_permutation_equivariant,
        "mask independence": test_layers.test_mixers_mask_independence,
        "softmax normalization": test_tensor.test_softmax_is_masked_probability_vector,
        "fusion identity": test_user_model.test_fusion_identity,
        "loss bounds": test_training.test_bpr_bounds,
        "news round-trip": lambda: test_data.test_news_roundtrip(tmp_path_factory),
        "behaviors round-trip": lambda: test_data.test_behaviors_roundtrip(tmp_path_factory),
    }
    failed = []
    for name, check in checks.items():
        try:
            check()
        except AssertionError:
            failed.append(name)
    detail = f"{len(checks) - len(failed)}/{len(checks)} invariants held" + (f"; failed: {', '.join(failed)}" if failed else "")
    assert verdict(7, "invariant suite", not failed, detail)


# 8. determinism


def desk_overrides():
    base = TrainConfig()
    return [f"{f.name}={getattr(DESK_CONFIG, f.name)}" for f in dataclasses.fields(TrainConfig) if getattr(DESK_CONFIG, f.name) != getattr(base, f.name)]


def test_criterion_8_determinism(verdict, tmp_path, capsys):
    corpus = ["n_users=400", "n_news=800", "n_train=1500", "n_valid=400"]
    sets = desk_overrides() + corpus
    outputs = []
    for run in ("a", "b"):
        paths = [f"data_dir={tmp_path / run / 'data'}", f"out_dir={tmp_path / run / 'out'}"]
        for command in ("synth", "train", "eval"):
            if command == "train":
                capsys.readouterr()  # synth names its output directory
            argv = [command] + [x for s in sets + paths for x in ("--set", s)]
            assert cli_main(argv) == 0
        outputs.append(capsys.readouterr().out)
    same = {
        name: (tmp_path / "a" / "out" / name).read_bytes() == (tmp_path / "b" / "out" / name).read_bytes()
        for name in ("metrics.tsv", "model.ckpt")
    }
    same["stdout"] = outputs[0] == outputs[1]
    ok = all(same.values())
    assert verdict(8, "determinism", ok, ", ".join(f"{k} identical: {v}" for k, v in same.items()))
