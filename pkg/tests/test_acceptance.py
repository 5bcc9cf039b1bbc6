"""End-to-end acceptance criteria 1-8.

Each test records one PASS/FAIL line with its runtime; the lines are printed
in the terminal summary (see conftest.py).
"""

from contextlib import contextmanager
import csv
import time

import numpy as np
import pytest
from scipy.fft import dct

from vqspk import _kernels
from vqspk.audio import AudioClip
from vqspk.cli import main
from vqspk.mfcc import hamming_window, hz_to_mel, mel_to_hz, power_spectrum
from vqspk.recognizer import identify, load_corpus, load_db, save_db
from vqspk.signal import default_profiles, synth_speaker_clip
from vqspk.vq import LbgConfig, train_codebook

import lloyd_oracle

pytestmark = pytest.mark.acceptance

RESULTS = {}


@contextmanager
def criterion(number, title, limit_s=None):
    info = {}
    t0 = time.perf_counter()
    try:
        yield info
    except BaseException as exc:
        elapsed = time.perf_counter() - t0
        reason = (str(exc).strip().splitlines() or [type(exc).__name__])[0]
        RESULTS[number] = f"FAIL  {number}. {title} ({elapsed:.2f}s): {reason}"
        raise
    elapsed = time.perf_counter() - t0
    extra = f" [{info['detail']}]" if "detail" in info else ""
    if limit_s is not None and elapsed >= limit_s:
        RESULTS[number] = f"FAIL  {number}. {title} ({elapsed:.2f}s >= {limit_s}s){extra}"
        pytest.fail(f"runtime {elapsed:.2f}s exceeds {limit_s}s")
    RESULTS[number] = f"PASS  {number}. {title} ({elapsed:.2f}s){extra}"


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("acceptance")
    t0 = time.perf_counter()
    assert main(["corpus", "generate", "--out", str(root / "corpus")]) == 0
    return root, root / "corpus", root / "corpus-test", time.perf_counter() - t0


def _evaluate(train, test, out_csv, *extra):
    assert main(["evaluate", "--train-dir", str(train), "--test-dir", str(test),
                 "--out-csv", str(out_csv), *extra]) == 0
    rows = list(csv.reader(open(out_csv)))
    accuracy = float(rows[-1][1])
    dist = np.array([[float(v) for v in r[1:-1]] for r in rows[1:-1]])
    part = np.sort(dist, axis=1)
    return accuracy, float(np.mean(part[:, 1] - part[:, 0]))


def test_1_unit_formulas():
    with criterion(1, "unit-formula suite", limit_s=1.0):
        w = hamming_window(256)
        assert abs(w[0] - 0.08) <= 1e-12 and abs(w[-1] - 0.08) <= 1e-12
        assert hz_to_mel(0.0) == 0.0
        assert abs(hz_to_mel(1000.0) - 1000.0) <= 0.5
        f = np.linspace(0.0, 8000.0, 1001)
        back = mel_to_hz(hz_to_mel(f))
        assert np.all(np.abs(back - f) <= 1e-6 * np.maximum(f, 1.0))
        impulse = np.zeros(256)
        impulse[0] = 1.0
        np.testing.assert_allclose(power_spectrum(impulse), 1.0 / 256, rtol=0, atol=1e-15)
        x = np.random.default_rng(1).normal(size=256)
        full = np.abs(np.fft.fft(x)) ** 2 / 256
        assert abs(full.sum() - np.sum(x**2)) <= 1e-9 * np.sum(x**2)
        psd = power_spectrum(x)
        one_sided = psd[0] + psd[-1] + 2 * psd[1:-1].sum()
        assert abs(one_sided - np.sum(x**2)) <= 1e-9 * np.sum(x**2)
        v = np.random.default_rng(2).normal(size=26)
        assert abs(np.linalg.norm(dct(v, type=2, norm="ortho")) - np.linalg.norm(v)) <= 1e-9


def test_2_lbg_oracle():
    pts = np.random.default_rng(64).normal(size=(64, 2))
    # compile the jitted kernels outside the timed region
    _kernels.nearest_codeword(pts[:2], pts[:1])
    _kernels.cluster_sums(pts[:2], np.zeros(2, dtype=np.int64), 1)
    with criterion(2, "LBG oracle", limit_s=1.0) as info:
        cfg = LbgConfig()
        _, trace = train_codebook(pts, cfg)
        ref = lloyd_oracle.lbg(pts, cfg.target_size, cfg.epsilon, cfg.rel_distortion_tol,
                               cfg.max_lloyd_iters)
        assert len(trace.records) == len(ref)
        worst = 0.0
        for rec, (size, it, cb, dist) in zip(trace.records, ref):
            assert (rec.size, rec.iteration) == (size, it)
            worst = max(worst, float(np.max(np.abs(rec.codewords - np.array(cb)))),
                        abs(rec.distortion - dist))
        assert worst <= 1e-12, f"max deviation {worst:.3g}"
        by_size = {}
        for rec in trace.records:
            by_size.setdefault(rec.size, []).append(rec.distortion)
        for seq in by_size.values():
            assert all(b <= a for a, b in zip(seq, seq[1:]))
        assert trace.sizes() == [1, 2, 4, 8]
        info["detail"] = f"max deviation {worst:.2g}"


def test_3_train_and_heldout_accuracy(corpus):
    root, train, test, gen_s = corpus
    with criterion(3, "training and held-out accuracy, 11 speakers", limit_s=30.0 - gen_s) as info:
        self_acc, _ = _evaluate(train, train, root / "self.csv")
        held_acc, _ = _evaluate(train, test, root / "heldout.csv")
        info["detail"] = f"train={self_acc:.3f} heldout={held_acc:.3f}, corpus generation {gen_s:.2f}s"
        assert self_acc == 1.0, f"training accuracy {self_acc}"
        assert held_acc == 1.0, f"held-out accuracy {held_acc}"


def test_4_new_users(tmp_path):
    with criterion(4, "13 speakers after adding 2 new users", limit_s=30.0) as info:
        assert main(["corpus", "generate", "--out", str(tmp_path / "c13"), "--speakers", "13"]) == 0
        acc, _ = _evaluate(tmp_path / "c13", tmp_path / "c13-test", tmp_path / "m13.csv")
        info["detail"] = f"accuracy={acc:.3f}"
        assert acc == 1.0, f"accuracy {acc}"


def test_5_preemphasis_ablation(corpus):
    root, train, test, _ = corpus
    with criterion(5, "pre-emphasis ablation margins") as info:
        acc_on, margin_on = _evaluate(train, test, root / "default.csv")
        acc_off, margin_off = _evaluate(train, test, root / "ablated.csv", "--no-preemphasis")
        assert (root / "default.csv").is_file() and (root / "ablated.csv").is_file()
        assert np.isfinite(margin_on) and np.isfinite(margin_off)
        info["detail"] = (f"mean margin default={margin_on:.4f} (acc {acc_on:.3f}), "
                          f"no-preemphasis={margin_off:.4f} (acc {acc_off:.3f})")


def test_6_notch_trend(corpus):
    root, train, test, _ = corpus
    with criterion(6, "notch-sweep trend", limit_s=60.0) as info:
        out = root / "sweep.csv"
        assert main(["notch-sweep", "--train-dir", str(train), "--test-dir", str(test),
                     "--widths", "0.1,0.2,0.3,0.4,0.5", "--center", "1000",
                     "--out-csv", str(out)]) == 0
        rows = list(csv.DictReader(open(out)))
        counts = [int(r["identified"]) for r in rows]
        total = int(rows[0]["total"])
        info["detail"] = f"identified={counts} of {total}"
        assert all(b <= a for a, b in zip(counts, counts[1:])), f"counts {counts} not non-increasing"
        assert counts[0] == total, f"width 0.1 identifies {counts[0]}/{total}, counts {counts}"


def test_7_persistence(corpus, tmp_path):
    root, train, _, _ = corpus
    with criterion(7, "database round trip") as info:
        first, second = tmp_path / "a.db", tmp_path / "b.db"
        assert main(["train", "--input-dir", str(train), "--db-out", str(first)]) == 0
        db = load_db(first)
        save_db(db, second)
        assert first.read_bytes() == second.read_bytes()
        again = load_db(second)
        rng = np.random.default_rng(77)
        profiles = default_profiles(11)
        for _ in range(20):
            p = profiles[int(rng.integers(len(profiles)))]
            clip = synth_speaker_clip(p, float(rng.uniform(0.5, 2.0)),
                                      utterance_seed=int(rng.integers(3, 10**6)))
            assert identify(clip, db) == identify(clip, again)
        info["detail"] = "byte-identical, 20/20 identical results"


def test_8_gain_invariance(corpus, tmp_path):
    root, train, test, _ = corpus
    with criterion(8, "gain invariance x0.3") as info:
        db_path = tmp_path / "g.db"
        assert main(["train", "--input-dir", str(train), "--db-out", str(db_path)]) == 0
        db = load_db(db_path)
        worst = 0.0
        for _, clips in load_corpus(test) + load_corpus(train):
            for clip in clips:
                a = identify(clip, db)
                b = identify(AudioClip(clip.samples * 0.3, clip.sample_rate_hz), db)
                assert a.predicted == b.predicted
                worst = max(worst, max(abs(a.distances[k] - b.distances[k]) for k in a.distances))
        assert worst <= 1e-6, f"max distance change {worst:.3g}"
        info["detail"] = f"max distance change {worst:.2g}"
