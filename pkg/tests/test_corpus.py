import json
import os

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from emgvoice.errors import DataError
from emgvoice.corpus import io as cio
from emgvoice.corpus.manifest import load_manifest, save_manifest, load_utterance
from emgvoice.corpus.splits import parallel_pairs, make_splits, mask_electrodes
from emgvoice.corpus.synthetic import generate_corpus, load_warp
from emgvoice.corpus.types import ElectrodeMask, Utterance, SILENT, VOCALIZED


def test_emg_container_round_trip(tmp_path, rng):
    emg = rng.normal(size=(8, 500)).astype(np.float32).astype(np.float64)
    path = tmp_path / "x.emg"
    cio.write_emg(path, emg)
    back, rate = cio.read_emg(path)
    assert rate == 1000
    np.testing.assert_array_equal(back, emg)


@given(
    n=st.integers(min_value=1, max_value=400),
    channels=st.integers(min_value=1, max_value=8),
    seed=st.integers(min_value=0, max_value=2**31),
)
@settings(max_examples=25, deadline=None)
def test_emg_container_preserves_float32(tmp_path_factory, n, channels, seed):
    tmp = tmp_path_factory.mktemp("emg")
    emg = np.random.default_rng(seed).normal(size=(channels, n))
    cio.write_emg(tmp / "x.emg", emg, sample_rate=1000)
    back, _ = cio.read_emg(tmp / "x.emg")
    np.testing.assert_array_equal(back, emg.astype(np.float32).astype(np.float64))


def test_wav_round_trip_quantizes_to_int16(tmp_path):
    audio = np.linspace(-1, 1, 1000)
    cio.write_wav(tmp_path / "x.wav", audio)
    back, rate = cio.read_wav(tmp_path / "x.wav")
    assert rate == 16000
    assert back.shape == audio.shape
    assert np.max(np.abs(back - audio)) <= 1.0 / 32767 + 1e-12


def test_feature_cache_round_trip(tmp_path, rng):
    data = rng.normal(size=(40, 112))
    cio.write_features(tmp_path / "f", data, "emg", provenance="abc123")
    back, kind, prov = cio.read_features(tmp_path / "f")
    assert kind == "emg" and prov == "abc123"
    np.testing.assert_array_equal(back, data.astype(np.float32).astype(np.float64))


def test_feature_cache_rejects_unknown_kind(tmp_path):
    with pytest.raises(DataError):
        cio.write_features(tmp_path / "f", np.zeros((2, 3)), "bogus")


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    manifest_path = generate_corpus(
        root, n_pairs=5, n_nonparallel=2, seed=4, n_sessions=2,
        min_seconds=0.8, max_seconds=1.2,
    )
    return load_manifest(manifest_path)


def test_synthetic_corpus_contents(corpus):
    silent = corpus.select(mode=SILENT)
    voc = corpus.select(mode=VOCALIZED)
    assert len(silent) == 5 and len(voc) == 7
    pairs = parallel_pairs(corpus)
    assert len(pairs) == 5
    for sid, vid in pairs:
        assert corpus.record(sid).mode == SILENT
        assert corpus.record(vid).mode == VOCALIZED
        assert corpus.record(sid).text == corpus.record(vid).text


def test_synthetic_signals_shapes(corpus):
    pairs = dict(parallel_pairs(corpus))
    sid, vid = next(iter(pairs.items()))
    s = load_utterance(corpus, sid)
    v = load_utterance(corpus, vid)
    assert s.emg.shape[0] == 8 and v.emg.shape[0] == 8
    assert s.audio is None
    assert v.audio.shape[0] == 16 * v.emg.shape[1]
    assert np.max(np.abs(v.audio)) <= 1.0


def test_synthetic_warp_sidecars(corpus):
    for sid, vid in parallel_pairs(corpus):
        warp = np.asarray(load_warp(corpus, sid))
        s = load_utterance(corpus, sid)
        v = load_utterance(corpus, vid)
        assert len(warp) == s.emg.shape[1] // 10
        assert np.all(np.diff(warp) >= 0), "warp must be monotone"
        assert warp[-1] <= v.emg.shape[1] // 10


def test_manifest_round_trip(corpus):
    split = make_splits(corpus, seed=1, n_val=1, n_test=1)
    out = os.path.join(corpus.root, "roundtrip.json")
    save_manifest(split, out)
    doc = json.load(open(out))
    assert doc["splits"]["val"] and doc["splits"]["test"]
    reloaded = load_manifest(out)
    assert sorted(reloaded.ids()) == sorted(corpus.ids())
    assert reloaded.splits["val"] == split.splits["val"]


def _manifest_doc(corpus):
    return {
        "version": 1,
        "domain": corpus.domain,
        "sessions": list(corpus.sessions),
        "utterances": [
            {
                "id": r.id, "text": r.text, "session_id": r.session_id,
                "mode": r.mode, "emg_path": r.emg_path,
                "audio_path": r.audio_path, "parallel_id": r.parallel_id,
            }
            for r in corpus.records.values()
        ],
        "splits": {},
    }


def _write_doc(doc, root, name="bad.json"):
    path = os.path.join(root, name)
    with open(path, "w") as fh:
        json.dump(doc, fh)
    return path


def test_manifest_rejects_duplicate_ids(corpus):
    doc = _manifest_doc(corpus)
    doc["utterances"].append(dict(doc["utterances"][0]))
    with pytest.raises(DataError, match="duplicate"):
        load_manifest(_write_doc(doc, corpus.root))


def test_manifest_rejects_dangling_parallel(corpus):
    doc = _manifest_doc(corpus)
    target = next(u for u in doc["utterances"] if u["parallel_id"])
    target["parallel_id"] = "no_such_utterance"
    with pytest.raises(DataError, match=target["id"]):
        load_manifest(_write_doc(doc, corpus.root))


def test_manifest_rejects_unknown_mode(corpus):
    doc = _manifest_doc(corpus)
    doc["utterances"][0]["mode"] = "whispered"
    with pytest.raises(DataError, match="mode"):
        load_manifest(_write_doc(doc, corpus.root))


def test_manifest_rejects_missing_file(corpus):
    doc = _manifest_doc(corpus)
    doc["utterances"][0]["emg_path"] = "missing.emg"
    with pytest.raises(DataError, match="missing.emg"):
        load_manifest(_write_doc(doc, corpus.root))


def test_manifest_rejects_overlapping_splits(corpus):
    doc = _manifest_doc(corpus)
    uid = doc["utterances"][0]["id"]
    doc["splits"] = {"train": [uid], "val": [uid]}
    with pytest.raises(DataError, match="split"):
        load_manifest(_write_doc(doc, corpus.root))


def test_splits_deterministic_and_disjoint(corpus):
    a = make_splits(corpus, seed=7, n_val=1, n_test=2)
    b = make_splits(corpus, seed=7, n_val=1, n_test=2)
    assert a.splits == b.splits
    c = make_splits(corpus, seed=8, n_val=1, n_test=2)
    assert a.splits != c.splits
    names = ("train", "val", "test")
    all_ids = [uid for n in names for uid in a.split_ids(n)]
    assert len(all_ids) == len(set(all_ids))


def test_splits_keep_pairs_together_and_reserve_counterparts(corpus):
    split = make_splits(corpus, seed=7, n_val=1, n_test=2)
    pairs = dict(parallel_pairs(corpus))
    train = set(split.split_ids("train"))
    held = split.split_ids("val") + split.split_ids("test")
    for sid in held:
        assert corpus.record(sid).mode == SILENT
        assert pairs[sid] not in train, "counterpart of held-out silent leaked"
    for sid, vid in pairs.items():
        if sid in train:
            assert vid in train, "training pair split apart"


def test_splits_data_fraction(corpus):
    full = make_splits(corpus, seed=7, n_val=1, n_test=1)
    half = make_splits(corpus, seed=7, n_val=1, n_test=1, data_fraction=0.5)
    assert len(half.split_ids("train")) < len(full.split_ids("train"))
    assert set(half.split_ids("val")) == set(full.split_ids("val"))
    assert set(half.split_ids("train")) <= set(full.split_ids("train"))


def test_splits_insufficient_pairs(corpus):
    with pytest.raises(DataError, match="val"):
        make_splits(corpus, seed=0, n_val=4, n_test=4)


def test_electrode_mask():
    mask = ElectrodeMask.from_removed((5, 7, 8))
    assert mask.n_enabled == 5
    assert list(mask.indices()) == [0, 1, 2, 3, 5]
    with pytest.raises(DataError):
        ElectrodeMask.from_removed((1, 2, 3, 4, 5, 6, 7, 8))
    with pytest.raises(DataError):
        ElectrodeMask.from_removed((9,))


def test_mask_electrodes_drops_rows(rng):
    emg = rng.normal(size=(8, 120))
    utt = Utterance(id="u", text="t", session_id="s", mode=SILENT, emg=emg)
    masked = mask_electrodes(utt, ElectrodeMask.from_removed((4,)))
    assert masked.emg.shape == (7, 120)
    np.testing.assert_array_equal(masked.emg[3], emg[4])
    same = mask_electrodes(utt, ElectrodeMask.all_on())
    assert same.emg.shape == (8, 120)


def test_utterance_validation(rng):
    with pytest.raises(DataError):
        Utterance(id="u", text="t", session_id="s", mode="loud",
                  emg=rng.normal(size=(8, 10)))
    with pytest.raises(DataError):
        Utterance(id="u", text="t", session_id="s", mode=VOCALIZED,
                  emg=rng.normal(size=(8, 10)), audio=None)
