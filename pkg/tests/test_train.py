"""Tests for the training stack: optimizer, batching, the loop itself,
the evaluation classifier, synthesis from checkpoints, evaluation
accounting, and the supervision sweep plumbing.

Training runs here are tiny (16 utterances, 4 steps, micro model) so the
loop tests stay in the seconds range; quality of the trained models is
covered elsewhere.
"""

import csv
import dataclasses
import json
import logging
import math
import types
from pathlib import Path

import numpy as np
import pytest

from ssvc.autodiff import ParamStore, Rng, default_dtype, derive_seed
from ssvc.corpus import GenerationConfig, generate_corpus
from ssvc.model import (
    LatentSpec,
    build_params,
    load_checkpoint,
    load_model,
    micro_scale,
    save_checkpoint,
)
from ssvc.train import (
    CSV_HEADER,
    EvalReport,
    TrainConfig,
    adam_step,
    batch_from_utterances,
    classify_mels,
    coerce_control,
    collapse_diagnostic,
    epoch_chunks,
    evaluate,
    init_adam,
    prior_z_u,
    run_sweep,
    synthesize,
    train,
    train_classifier,
)

TINY = dict(n_train=16, supervision_fraction=0.5,
            target_duration_range=(0.3, 0.5), min_tokens=2, max_tokens=4,
            val_fraction=0.25, test_fraction=0.25)

MCFG3 = micro_scale(LatentSpec("discrete", 3))
MCFG_C1 = micro_scale(LatentSpec("continuous", 1))


def tcfg(**kw):
    base = dict(batch_size=8, max_steps=4, eval_every=2, checkpoint_every=2,
                probe_size=8, seed=5)
    base.update(kw)
    return TrainConfig(**base)


@pytest.fixture(scope="module")
def tiny3():
    cfg = GenerationConfig(n_classes=3, **TINY)
    return generate_corpus(cfg, Rng(derive_seed(7, "train-tests")))


@pytest.fixture(scope="module")
def tinyrate():
    cfg = GenerationConfig(n_classes=3, supervised_attribute="rate", **TINY)
    return generate_corpus(cfg, Rng(derive_seed(7, "train-tests-rate")))


@pytest.fixture(scope="module")
def run_a(tiny3, tmp_path_factory):
    out = tmp_path_factory.mktemp("run_a")
    return out, train(tiny3, MCFG3, tcfg(), out)


@pytest.fixture(scope="module")
def cls_run(tiny3, tmp_path_factory):
    out = tmp_path_factory.mktemp("cls_run")
    return out, train_classifier(tiny3, MCFG3, tcfg(), out)


@pytest.fixture(scope="module")
def fresh_ckpt3(tmp_path_factory):
    """Untrained discrete checkpoint, enough for stubbed evaluation."""
    path = tmp_path_factory.mktemp("fresh") / "model3.ssvc"
    with default_dtype("float32"):
        params = build_params(MCFG3, Rng(90))
    save_checkpoint(path, MCFG3, params.state_arrays(), {"kind": "model", "step": 0})
    return path


@pytest.fixture(scope="module")
def fresh_ckpt_c1(tmp_path_factory):
    path = tmp_path_factory.mktemp("fresh_c") / "model_c1.ssvc"
    with default_dtype("float32"):
        params = build_params(MCFG_C1, Rng(91))
    save_checkpoint(path, MCFG_C1, params.state_arrays(), {"kind": "model", "step": 0})
    return path


class TestAdam:
    def _store(self, value=5.0):
        with default_dtype("float64"):
            store = ParamStore()
            store.add("w", np.array(value))
        init_adam(store)
        return store

    def test_moment_buffers_registered(self):
        store = self._store()
        assert store.has_buffer("adam.t")
        assert store.has_buffer("adam.m.w")
        assert store.has_buffer("adam.v.w")
        init_adam(store)
        assert float(store.buffer("adam.t")) == 0.0

    def test_constant_gradient_step_size_is_lr(self):
        store = self._store(0.0)
        cfg = TrainConfig(lr=1e-3)
        w = store["w"]
        prev = float(w.data)
        for _ in range(10):
            store.zero_grad()
            (w * 0.37).backward()
            assert adam_step(store, cfg)
        # constant gradient makes both bias-corrected moments exact, so
        # every step moves by lr * g / (|g| + eps), essentially lr
        delta = prev - float(w.data)
        assert delta == pytest.approx(10 * cfg.lr, rel=1e-6)

    def test_quadratic_matches_scalar_oracle(self):
        store = self._store(5.0)
        cfg = TrainConfig(lr=1e-2)
        w = store["w"]
        m = v = 0.0
        ref = 5.0
        for t in range(1, 2001):
            store.zero_grad()
            (w * w).backward()
            assert adam_step(store, cfg)
            g = 2.0 * ref
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * g
            v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g
            m_hat = m / (1.0 - cfg.beta1 ** t)
            v_hat = v / (1.0 - cfg.beta2 ** t)
            ref -= cfg.lr * m_hat / (math.sqrt(v_hat) + cfg.adam_eps)
            assert float(w.data) == pytest.approx(ref, rel=1e-9, abs=1e-12)
        assert abs(float(w.data)) < 0.1
        assert int(store.buffer("adam.t")) == 2000

    def test_param_without_grad_left_alone(self):
        with default_dtype("float64"):
            store = ParamStore()
            store.add("w", np.array(1.0))
            store.add("u", np.array(2.0))
        init_adam(store)
        store.zero_grad()
        (store["w"] * 3.0).backward()
        assert adam_step(store, TrainConfig())
        assert float(store["u"].data) == 2.0
        assert float(store.buffer("adam.m.u")) == 0.0
        assert int(store.buffer("adam.t")) == 1

    def test_nonfinite_gradient_skips_whole_step(self, caplog):
        with default_dtype("float64"):
            store = ParamStore()
            store.add("w", np.array(1.0))
            store.add("u", np.array(2.0))
        init_adam(store)
        store.zero_grad()
        (store["w"] * 1.0 + store["u"] * 1.0).backward()
        store["u"].grad = np.array(np.nan)
        with caplog.at_level(logging.WARNING, logger="ssvc.train"):
            assert adam_step(store, TrainConfig()) is False
        assert float(store["w"].data) == 1.0
        assert float(store["u"].data) == 2.0
        assert int(store.buffer("adam.t")) == 0
        assert float(store.buffer("adam.m.w")) == 0.0
        assert "u" in caplog.text and "skipped" in caplog.text


class TestBatches:
    def test_epoch_chunks_tail_merge(self):
        order = np.arange(20)
        chunks = epoch_chunks(order, 16)
        assert [len(c) for c in chunks] == [20]
        np.testing.assert_array_equal(np.concatenate(chunks), order)
        assert [len(c) for c in epoch_chunks(np.arange(40), 16)] == [16, 16, 8]
        assert [len(c) for c in epoch_chunks(np.arange(23), 16)] == [23]
        assert [len(c) for c in epoch_chunks(np.arange(5), 16)] == [5]
        assert epoch_chunks(np.arange(0), 16) == []

    def test_discrete_batch_fields(self, tiny3):
        utts = tiny3.train()
        b = batch_from_utterances(utts, MCFG3)
        assert b.frames.dtype == np.float32
        assert b.frames.shape[0] == 16
        assert b.frames.shape[1] % MCFG3.reduction_factor == 0
        assert b.frames.shape[2] == MCFG3.n_mels
        assert b.token_ids.shape[0] == 16
        assert b.speakers.dtype == np.int64
        assert int(b.sup_mask.sum()) == 8
        assert b.labels.dtype == np.int64
        for u, lab, sup in zip(utts, b.labels, b.sup_mask):
            if sup:
                assert int(lab) == u.label_discrete == u.truth.class_id

    def test_continuous_batch_and_width_guard(self, tinyrate):
        utts = tinyrate.train()
        b = batch_from_utterances(utts, MCFG_C1)
        assert b.labels.shape == (16, 1)
        assert b.labels.dtype == np.float64
        assert int(b.sup_mask.sum()) == 8
        for u, lab, sup in zip(utts, b.labels, b.sup_mask):
            expect = u.label_continuous if sup else 0.0
            assert float(lab[0]) == expect
        wide = micro_scale(LatentSpec("continuous", 2))
        with pytest.raises(ValueError, match="width 1"):
            batch_from_utterances(utts, wide)

    def test_unlabeled_only_gives_none_labels(self, tiny3):
        utts = [u for u in tiny3.train() if u.label_discrete is None]
        b = batch_from_utterances(utts, MCFG3)
        assert b.labels is None
        assert not b.sup_mask.any()


class TestTrainLoop:
    def test_metrics_schema_and_rows(self, run_a):
        _, res = run_a
        with open(res.metrics_path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert tuple(rows[0]) == CSV_HEADER
        assert [int(r[0]) for r in rows[1:]] == [1, 2, 4]
        ent_col = CSV_HEADER.index("probe_entropy")
        kl_col = CSV_HEADER.index("probe_kl_zu")
        for r in rows[1:]:
            vals = [float(x) for x in r[1:]]
            assert all(math.isfinite(v) for v in vals)
            assert 0.0 <= float(r[ent_col]) <= math.log(3) + 1e-9
            assert float(r[kl_col]) >= 0.0

    def test_checkpoints_and_supervised_count(self, run_a, tiny3):
        out, res = run_a
        for name in ("ckpt_000002.ssvc", "ckpt_000004.ssvc", "ckpt_final.ssvc"):
            assert (out / name).exists()
        assert res.steps_run == 4
        labeled = sum(u.label_discrete is not None for u in tiny3.train())
        assert res.supervised_count == labeled == 8
        cfg, params, meta = load_model(res.checkpoint_path)
        assert meta["kind"] == "model"
        assert meta["step"] == 4
        assert cfg == MCFG3
        assert params.parameters()[0][1].data.dtype == np.float32
        # optimizer state travels with the checkpoint
        _, _, arrays = load_checkpoint(res.checkpoint_path)
        assert float(arrays["buffer.adam.t"]) == 4.0

    def test_rerun_bit_identical(self, run_a, tiny3, tmp_path):
        _, res = run_a
        train(tiny3, MCFG3, tcfg(), tmp_path)
        assert (tmp_path / "metrics.csv").read_bytes() == Path(res.metrics_path).read_bytes()
        assert (tmp_path / "ckpt_final.ssvc").read_bytes() == Path(res.checkpoint_path).read_bytes()

    def test_resume_matches_uninterrupted(self, run_a, tiny3, tmp_path):
        _, res = run_a
        train(tiny3, MCFG3, tcfg(max_steps=2), tmp_path / "short")
        resumed = train(tiny3, MCFG3, tcfg(), tmp_path / "resumed",
                        resume=tmp_path / "short" / "ckpt_000002.ssvc")
        assert resumed.steps_run == 2
        got = (tmp_path / "resumed" / "ckpt_final.ssvc").read_bytes()
        assert got == Path(res.checkpoint_path).read_bytes()
        last_full = Path(res.metrics_path).read_text().splitlines()[-1]
        last_resumed = Path(resumed.metrics_path).read_text().splitlines()[-1]
        assert last_full == last_resumed

    def test_resume_guards(self, run_a, tiny3, tmp_path):
        _, res = run_a
        other = dataclasses.replace(MCFG3, z_u_dim=2 * MCFG3.z_u_dim)
        with pytest.raises(ValueError, match="different model config"):
            train(tiny3, other, tcfg(), tmp_path / "a", resume=res.checkpoint_path)
        with pytest.raises(ValueError, match="already at step"):
            train(tiny3, MCFG3, tcfg(max_steps=4), tmp_path / "b",
                  resume=res.checkpoint_path)

    def test_corpus_class_mismatch(self, tiny3, tmp_path):
        with pytest.raises(ValueError, match="classes"):
            train(tiny3, micro_scale(LatentSpec("discrete", 6)), tcfg(max_steps=1),
                  tmp_path)

    def test_abort_on_persistent_nonfinite(self, tiny3, tmp_path):
        with default_dtype("float32"):
            params = build_params(MCFG3, Rng(3))
        params["dec.out.W"].data[0, 0] = np.nan
        cfg = tcfg(max_steps=12, eval_every=50, checkpoint_every=50)
        with pytest.raises(RuntimeError, match="non-finite"):
            train(tiny3, MCFG3, cfg, tmp_path, params=params)
        diag = json.loads((tmp_path / "abort_diagnostics.json").read_text())
        assert diag["step"] == 10
        assert "dec.out.W" in diag["non_finite_params"]
        assert len(diag["recent_totals"]) == 10

    def test_collapse_diagnostic_ranges(self, tiny3, tinyrate):
        with default_dtype("float32"):
            p3 = build_params(MCFG3, Rng(11))
            pc = build_params(MCFG_C1, Rng(12))
        b3 = batch_from_utterances(tiny3.train()[:8], MCFG3)
        ent, kl = collapse_diagnostic(p3, MCFG3, b3)
        assert 0.0 <= ent <= math.log(3) + 1e-9
        assert kl >= 0.0 and math.isfinite(kl)
        bc = batch_from_utterances(tinyrate.train()[:8], MCFG_C1)
        ent_c, kl_c = collapse_diagnostic(pc, MCFG_C1, bc)
        # differential entropy, so no lower bound, but it must be finite
        assert math.isfinite(ent_c)
        assert kl_c >= 0.0


class TestClassifier:
    def test_confusion_accounts_for_val_split(self, cls_run, tiny3):
        _, res = cls_run
        counts = np.bincount([u.truth.class_id for u in tiny3.val()], minlength=3)
        np.testing.assert_array_equal(res.confusion.sum(axis=1), counts)
        assert 0.0 <= res.val_accuracy <= 1.0
        with open(res.metrics_path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["step", "loss", "val_accuracy"]
        assert [int(r[0]) for r in rows[1:]] == [1, 2, 4]

    def test_checkpoint_meta_and_determinism(self, cls_run, tiny3, tmp_path):
        _, res = cls_run
        _, meta, _ = load_checkpoint(res.checkpoint_path)
        assert meta["kind"] == "classifier"
        assert meta["step"] == 4
        assert meta["confusion"] == res.confusion.tolist()
        res2 = train_classifier(tiny3, MCFG3, tcfg(), tmp_path)
        assert Path(res2.checkpoint_path).read_bytes() == Path(res.checkpoint_path).read_bytes()

    def test_requires_discrete_and_matching_k(self, tiny3, tmp_path):
        with pytest.raises(ValueError, match="discrete"):
            train_classifier(tiny3, MCFG_C1, tcfg(max_steps=1), tmp_path)
        with pytest.raises(ValueError, match="classes"):
            train_classifier(tiny3, micro_scale(LatentSpec("discrete", 6)),
                             tcfg(max_steps=1), tmp_path)

    def test_classify_mels_outputs(self, cls_run, tiny3):
        _, res = cls_run
        cfg, params, _ = load_model(res.checkpoint_path)
        mels = [u.mel.frames for u in tiny3.val()]
        preds = classify_mels(params, cfg, mels, chunk=2)
        assert len(preds) == len(mels)
        assert all(0 <= int(p) < 3 for p in preds)
        assert len(classify_mels(params, cfg, [])) == 0


class TestSynthesize:
    def test_mean_mode_deterministic(self, run_a):
        _, res = run_a
        toks = np.array([1, 2, 3])
        a = synthesize(res.checkpoint_path, toks, 1, max_frames=20)
        b = synthesize(res.checkpoint_path, toks, 1, max_frames=20)
        np.testing.assert_array_equal(a.frames, b.frames)
        assert a.frames.dtype == np.float32
        assert a.frames.shape[1] == MCFG3.n_mels
        assert MCFG3.reduction_factor <= a.frames.shape[0] <= 20
        assert np.all(np.isfinite(a.frames))

    def test_sample_mode_seed_sensitivity(self, run_a):
        _, res = run_a
        toks = np.array([1, 2, 3])
        s0 = synthesize(res.checkpoint_path, toks, 1, z_u_mode="sample", seed=0,
                        max_frames=20)
        s0_again = synthesize(res.checkpoint_path, toks, 1, z_u_mode="sample",
                              seed=0, max_frames=20)
        s1 = synthesize(res.checkpoint_path, toks, 1, z_u_mode="sample", seed=1,
                        max_frames=20)
        np.testing.assert_array_equal(s0.frames, s0_again.frames)
        assert not (s0.frames.shape == s1.frames.shape
                    and np.array_equal(s0.frames, s1.frames))

    def test_input_validation(self, run_a):
        _, res = run_a
        toks = np.array([1, 2, 3])
        with pytest.raises(ValueError, match="outside"):
            synthesize(res.checkpoint_path, toks, 7)
        with pytest.raises(ValueError, match="token"):
            synthesize(res.checkpoint_path, np.array([99]), 1)
        with pytest.raises(ValueError, match="speaker"):
            synthesize(res.checkpoint_path, toks, 1, speaker=9)
        with pytest.raises(ValueError, match="nonempty"):
            synthesize(res.checkpoint_path, np.array([], dtype=np.int64), 1)
        with pytest.raises(ValueError, match="mode"):
            synthesize(res.checkpoint_path, toks, 1, z_u_mode="typo")

    def test_classifier_checkpoint_rejected(self, cls_run):
        _, res = cls_run
        with pytest.raises(ValueError, match="not a synthesis model"):
            synthesize(res.checkpoint_path, np.array([1]), 1)

    def test_continuous_accepts_extrapolated_value(self, fresh_ckpt_c1):
        mel = synthesize(fresh_ckpt_c1, np.array([1, 2]), 3.0, max_frames=12)
        assert np.all(np.isfinite(mel.frames))
        with pytest.raises(ValueError, match="value"):
            synthesize(fresh_ckpt_c1, np.array([1, 2]), [1.0, 2.0], max_frames=12)

    def test_coerce_and_prior_helpers(self):
        oh = coerce_control(MCFG3, 2, 4, np.float32)
        assert oh.shape == (4, 3)
        np.testing.assert_array_equal(oh, np.tile([0.0, 0.0, 1.0], (4, 1)))
        with pytest.raises(ValueError, match="class id"):
            coerce_control(MCFG3, [0, 1], 2, np.float32)
        with pytest.raises(ValueError, match="class id"):
            coerce_control(MCFG3, 2.0, 2, np.float32)
        z = prior_z_u(MCFG3, 3, "mean", 0, np.float32)
        assert z.shape == (3, MCFG3.z_u_dim)
        assert not z.any()
        s4 = prior_z_u(MCFG3, 3, "sample", 4, np.float32)
        np.testing.assert_array_equal(s4, prior_z_u(MCFG3, 3, "sample", 4, np.float32))
        assert not np.array_equal(s4, prior_z_u(MCFG3, 3, "sample", 5, np.float32))
        with pytest.raises(ValueError, match="mode"):
            prior_z_u(MCFG3, 3, "typo", 0, np.float32)


class TestEvaluate:
    def test_discrete_stub_perfect(self, fresh_ckpt3, tiny3):
        calls = []

        def synth_fn(utts, controls):
            calls.append(list(controls))
            return [u.mel.frames for u in utts]

        state = {"k": 0}

        def classify_fn(mels):
            k = state["k"]
            state["k"] += 1
            return [k] * len(mels)

        rep = evaluate(fresh_ckpt3, tiny3, synth_fn=synth_fn,
                       classify_fn=classify_fn, n_utterances=None)
        n = len(tiny3.test())
        np.testing.assert_array_equal(rep.confusion, n * np.eye(3, dtype=np.int64))
        assert rep.classifier_accuracy == 1.0
        assert rep.mcd_dtw == pytest.approx(0.0, abs=1e-12)
        assert rep.details["n_trials"] == 3 * n
        assert calls == [[0] * n, [1] * n, [2] * n]
        json.dumps(rep.to_json_dict())

    def test_discrete_needs_classifier(self, fresh_ckpt3, tiny3):
        with pytest.raises(ValueError, match="classifier"):
            evaluate(fresh_ckpt3, tiny3)

    def test_kind_guards(self, cls_run, fresh_ckpt3, tiny3):
        _, res = cls_run
        with pytest.raises(ValueError, match="not a synthesis model"):
            evaluate(res.checkpoint_path, tiny3)
        with pytest.raises(ValueError, match="not a classifier"):
            evaluate(fresh_ckpt3, tiny3, classifier_ckpt=fresh_ckpt3)

    def test_continuous_stub_accounting(self, fresh_ckpt_c1, tinyrate):
        def synth_fn(utts, controls):
            assert len(controls) == len(utts)
            return [u.mel.frames for u in utts]

        rep = evaluate(fresh_ckpt_c1, tinyrate, synth_fn=synth_fn,
                       n_utterances=None)
        n = len(tinyrate.test())
        det = rep.details
        assert det["attribute"] == "rate"
        assert det["n_utterances"] == n
        req = np.array(det["requested_raw"])
        mea = np.array(det["measured"])
        assert len(det["requested_z"]) == n
        assert rep.rate_error == pytest.approx(float(np.mean(np.abs(req - mea))),
                                               rel=1e-12)
        # synthetic truth mels measure close to the generator's own rate
        assert rep.rate_error < 1.0
        assert rep.mcd_dtw == pytest.approx(0.0, abs=1e-12)
        assert rep.f0_error is None
        assert rep.classifier_accuracy is None

    def test_utterance_cap(self, fresh_ckpt_c1, tinyrate):
        def synth_fn(utts, controls):
            return [u.mel.frames for u in utts]

        rep = evaluate(fresh_ckpt_c1, tinyrate, synth_fn=synth_fn, n_utterances=2)
        assert rep.details["n_utterances"] == 2


class TestSweep:
    def test_stubbed_accounting(self, tmp_path):
        ccfg = GenerationConfig(n_classes=3, **TINY)
        seen = {}

        def train_fn(corpus, model_cfg, run_cfg, run_dir):
            frac = run_cfg.supervision_fraction
            seen[frac] = {
                "n_sup": corpus.meta["n_supervised"],
                "first_tokens": corpus.train()[0].tokens.copy(),
                "dir": Path(run_dir).name,
            }
            return types.SimpleNamespace(checkpoint_path=Path(run_dir) / "ckpt_final.ssvc")

        def eval_fn(ckpt, corpus, classifier_path, n_utterances=None):
            assert classifier_path is None
            frac = corpus.meta["config"]["supervision_fraction"]
            return EvalReport(mcd_dtw=5.0, classifier_accuracy=frac)

        csv_path = run_sweep(ccfg, MCFG3, tcfg(), tmp_path, corpus_seed=3,
                             fractions=(0.5, 1.0), train_fn=train_fn,
                             eval_fn=eval_fn)
        with open(csv_path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["fraction", "metric", "value"]
        data = {(r[0], r[1]): float(r[2]) for r in rows[1:]}
        assert data[("0.5", "mcd_dtw")] == 5.0
        assert data[("0.5", "classifier_accuracy")] == 0.5
        assert data[("1.0", "classifier_accuracy")] == 1.0
        assert seen[0.5]["n_sup"] == 8
        assert seen[1.0]["n_sup"] == 16
        assert seen[0.5]["dir"] == "frac_0.5"
        # same corpus seed: the sweep only changes how many labels show
        np.testing.assert_array_equal(seen[0.5]["first_tokens"],
                                      seen[1.0]["first_tokens"])
