"""Pipeline stages with cached, hash-stamped artifacts.

Each stage reads the previous stage's output directory, writes its own, and
drops a stamp recording the config hash it ran under plus the hash of its
input stage.  A stage is skipped when its stamp matches the current config;
it refuses to run when the upstream stamp is missing or stale, rather than
silently mixing artifacts from different configurations.  All artifacts are
free of timestamps and absolute paths, so two runs with the same corpus,
config, and seed produce identical bytes.
"""

import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor

from ..errors import ConfigError, DataError
from ..corpus import io as corpus_io
from ..corpus.manifest import load_manifest, save_manifest, load_utterance, load_noise_profile
from ..corpus.splits import parallel_pairs, make_splits
from ..corpus.types import (
    ElectrodeMask,
    UtteranceRecord,
    CorpusManifest,
    SILENT,
    VOCALIZED,
)
from ..signals import FilterSpec, preprocess_emg, preprocess_audio
from ..features.emg import emg_features
from ..features.mfcc import mfcc_features
from ..features.normalize import Normalizer, fit_normalizer
from ..features.sequence import FeatureSequence, KIND_EMG, KIND_MFCC
from ..align.cca import CcaProjection, fit_cca, collect_aligned_pairs
from ..align.costs import emg_cost, cca_cost
from ..align.dtw import dtw, save_alignment
from ..transducer.model import TransducerConfig, TransducerBundle, save_bundle, load_bundle
from ..transducer.train import (
    TrainConfig,
    TrainData,
    ParallelExample,
    VocalizedExample,
    NONPARALLEL_VOCALIZED,
    PARALLEL_VOCALIZED,
    train_transducer,
    trim_to_match,
)
from ..vocoder.mulaw import mulaw_encode
from ..vocoder.wavenet import WaveNetConfig, init_wavenet, train_wavenet, save_wavenet, load_wavenet
from ..vocoder.griffinlim import invert_mfcc
from ..evaluation.wer import evaluate_transcripts
from ..evaluation.providers import (
    EchoProvider,
    EmptyProvider,
    FileTranscriptProvider,
    HttpTranscriptionProvider,
    transcribe_all,
)
from .config import stage_hash, STAGE_ORDER, with_updates

log = logging.getLogger("emgvoice")

_UPSTREAM = {
    STAGE_ORDER[i]: STAGE_ORDER[i - 1] for i in range(1, len(STAGE_ORDER))
}


def _dir(cfg, *parts):
    path = os.path.join(cfg.workdir, *parts)
    os.makedirs(path, exist_ok=True)
    return path


def _stamp_path(cfg, stage):
    return os.path.join(cfg.workdir, "%s.stamp.json" % stage)


def _read_stamp(cfg, stage):
    try:
        with open(_stamp_path(cfg, stage), encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        return None


def _write_stamp(cfg, stage):
    doc = {"stage": stage, "hash": stage_hash(cfg, stage)}
    upstream = _UPSTREAM.get(stage)
    if upstream:
        doc["upstream"] = stage_hash(cfg, upstream)
    os.makedirs(cfg.workdir, exist_ok=True)
    with open(_stamp_path(cfg, stage), "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)


def _check_upstream(cfg, stage):
    upstream = _UPSTREAM.get(stage)
    if upstream is None:
        return
    stamp = _read_stamp(cfg, upstream)
    if stamp is None:
        raise DataError(
            "stage %r needs %r to run first (no stamp in %s)"
            % (stage, upstream, cfg.workdir)
        )
    if stamp.get("hash") != stage_hash(cfg, upstream):
        raise DataError(
            "artifacts of stage %r were built under a different configuration; "
            "rerun it (or pass --force to the pipeline)" % upstream
        )


def _fresh(cfg, stage, force):
    if force:
        return False
    stamp = _read_stamp(cfg, stage)
    return stamp is not None and stamp.get("hash") == stage_hash(cfg, stage)


def _n_workers(cfg):
    return cfg.workers if cfg.workers > 0 else (os.cpu_count() or 1)


def _map(cfg, fn, items):
    items = list(items)
    if _n_workers(cfg) <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=_n_workers(cfg)) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------- preprocess

def stage_preprocess(cfg, force=False):
    """Split the corpus, condition every signal, write a derived corpus."""
    if _fresh(cfg, "preprocess", force):
        log.info("preprocess: up to date")
        return
    raw = load_manifest(cfg.manifest)
    raw = make_splits(raw, cfg.seed, cfg.n_val, cfg.n_test, cfg.data_fraction)
    spec = FilterSpec(
        highpass_hz=cfg.highpass_hz,
        highpass_order=cfg.highpass_order,
        notch_base_hz=cfg.notch_base_hz,
        notch_q=cfg.notch_q,
    )
    out = _dir(cfg, "pre")
    noise = {s: load_noise_profile(raw, s) for s in raw.sessions}

    def condition(uid):
        utt = load_utterance(raw, uid)
        emg = preprocess_emg(utt.emg, spec)
        corpus_io.write_emg(os.path.join(out, uid + ".emg"), emg)
        audio_path = None
        if utt.mode == VOCALIZED:
            audio, warned = preprocess_audio(utt.audio, noise_profile=noise.get(utt.session_id))
            if warned:
                log.warning("%s: silent audio, loudness unchanged", uid)
            audio_path = uid + ".wav"
            corpus_io.write_wav(os.path.join(out, audio_path), audio)
        rec = raw.record(uid)
        return UtteranceRecord(
            id=uid,
            text=rec.text,
            session_id=rec.session_id,
            mode=rec.mode,
            emg_path=uid + ".emg",
            audio_path=audio_path,
            parallel_id=rec.parallel_id,
        )

    records = _map(cfg, condition, sorted(raw.ids()))
    derived = CorpusManifest(
        root=out,
        domain=raw.domain,
        sessions=raw.sessions,
        records={r.id: r for r in records},
        splits=raw.splits,
    )
    save_manifest(derived, os.path.join(out, "manifest.json"))
    _write_stamp(cfg, "preprocess")
    log.info("preprocess: %d utterances conditioned", len(records))


def _pre_manifest(cfg):
    return load_manifest(os.path.join(cfg.workdir, "pre", "manifest.json"))


# ----------------------------------------------------------------- featurize

def _feat_path(cfg, uid, kind):
    ext = ".emgf" if kind == KIND_EMG else ".mfcc"
    return os.path.join(cfg.workdir, "feat", uid + ext)


def _load_features(cfg, uid, kind, expect_hash=None):
    data, stored_kind, prov = corpus_io.read_features(_feat_path(cfg, uid, kind))
    if stored_kind != kind:
        raise DataError("%s: expected %s features, found %s" % (uid, kind, stored_kind))
    if expect_hash is not None and prov != expect_hash:
        raise DataError(
            "%s: feature cache was built under a different configuration; "
            "rerun featurize" % uid
        )
    return FeatureSequence(data, kind)


def stage_featurize(cfg, force=False):
    """Turn conditioned signals into frame-level feature caches."""
    _check_upstream(cfg, "featurize")
    if _fresh(cfg, "featurize", force):
        log.info("featurize: up to date")
        return
    manifest = _pre_manifest(cfg)
    mask = ElectrodeMask.from_removed(cfg.removed_electrodes)
    _dir(cfg, "feat")
    fhash = stage_hash(cfg, "featurize")

    def extract(uid):
        utt = load_utterance(manifest, uid)
        emg = utt.emg[list(mask.indices())]
        feats = emg_features(emg)
        corpus_io.write_features(
            _feat_path(cfg, uid, KIND_EMG), feats.data, KIND_EMG, provenance=fhash
        )
        if utt.mode == VOCALIZED:
            mf = mfcc_features(utt.audio)
            corpus_io.write_features(
                _feat_path(cfg, uid, KIND_MFCC), mf.data, KIND_MFCC, provenance=fhash
            )

    ids = sorted(manifest.ids())
    _map(cfg, extract, ids)

    train_ids = manifest.split_ids("train")
    emg_train = [_load_features(cfg, uid, KIND_EMG) for uid in train_ids]
    mfcc_train = [
        _load_features(cfg, uid, KIND_MFCC)
        for uid in train_ids
        if manifest.record(uid).mode == VOCALIZED
    ]
    norms = {
        "emg": fit_normalizer(emg_train).to_dict(),
        "mfcc": fit_normalizer(mfcc_train).to_dict(),
    }
    with open(os.path.join(cfg.workdir, "feat", "normalizers.json"), "w") as fh:
        json.dump(norms, fh, sort_keys=True)
    _write_stamp(cfg, "featurize")
    log.info("featurize: %d utterances, %d-dim EMG features",
             len(ids), emg_train[0].data.shape[1])


def _load_normalizers(cfg):
    path = os.path.join(cfg.workdir, "feat", "normalizers.json")
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise DataError("normalizers not found; run featurize first")
    return Normalizer.from_dict(doc["emg"]), Normalizer.from_dict(doc["mfcc"])


# --------------------------------------------------------------------- align

def _alignment_path(cfg, uid):
    return os.path.join(cfg.workdir, "align", uid + ".align.json")


def stage_align(cfg, force=False):
    """Fit the shared projection and align every parallel training pair."""
    _check_upstream(cfg, "align")
    if _fresh(cfg, "align", force):
        log.info("align: up to date")
        return
    manifest = _pre_manifest(cfg)
    emg_norm, _ = _load_normalizers(cfg)
    fhash = stage_hash(cfg, "featurize")
    ahash = stage_hash(cfg, "align")
    _dir(cfg, "align")

    pairs = dict(parallel_pairs(manifest))
    train_silent = [
        uid for uid in manifest.split_ids("train")
        if manifest.record(uid).mode == SILENT and uid in pairs
    ]
    if not train_silent:
        raise DataError("no parallel silent utterances in the training split")

    def norm_emg(uid):
        return emg_norm.apply(_load_features(cfg, uid, KIND_EMG, fhash)).data

    seq_pairs = [(norm_emg(uid), norm_emg(pairs[uid])) for uid in train_silent]
    silent_rows, voc_rows = collect_aligned_pairs(seq_pairs, emg_cost, dtw)
    projection = fit_cca(silent_rows, voc_rows, dims=cfg.cca_dims)
    with open(os.path.join(cfg.workdir, "align", "cca.json"), "w") as fh:
        json.dump(projection.to_dict(), fh, sort_keys=True)

    val_silent = [
        uid for uid in manifest.split_ids("val")
        if manifest.record(uid).mode == SILENT and uid in pairs
    ]
    for uid in train_silent + val_silent:
        path = dtw(cca_cost(norm_emg(uid), norm_emg(pairs[uid]), projection))
        save_alignment(
            _alignment_path(cfg, uid), path, cost_type="cca", config_hash=ahash
        )
    _write_stamp(cfg, "align")
    log.info(
        "align: projection over %d frame pairs, %d utterances aligned; "
        "leading correlation %.3f",
        len(silent_rows), len(train_silent) + len(val_silent),
        projection.correlations[0],
    )


def _load_projection(cfg):
    path = os.path.join(cfg.workdir, "align", "cca.json")
    try:
        with open(path, encoding="utf-8") as fh:
            return CcaProjection.from_dict(json.load(fh))
    except FileNotFoundError:
        raise DataError("projection not found; run align first")


# --------------------------------------------------------------------- train

def build_training_data(cfg):
    """Assemble normalized training material from the cached features.

    Silent utterances with a counterpart become transfer examples; the
    counterparts also enter directly with their own audio, as does every
    non-parallel vocalized utterance.
    """
    manifest = _pre_manifest(cfg)
    emg_norm, mfcc_norm = _load_normalizers(cfg)
    fhash = stage_hash(cfg, "featurize")
    pairs = dict(parallel_pairs(manifest))

    def norm_emg(uid):
        return emg_norm.apply(_load_features(cfg, uid, KIND_EMG, fhash)).data

    def norm_mfcc(uid):
        return mfcc_norm.apply(_load_features(cfg, uid, KIND_MFCC, fhash)).data

    def parallel_example(uid):
        voc = pairs[uid]
        voc_emg, voc_audio = trim_to_match(norm_emg(voc), norm_mfcc(voc), uid=voc)
        rec = manifest.record(uid)
        return ParallelExample(
            uid=uid,
            key=(rec.session_id, rec.mode),
            emg=norm_emg(uid),
            voc_emg=voc_emg,
            voc_audio=voc_audio,
        )

    parallel, vocalized = [], []
    for uid in manifest.split_ids("train"):
        rec = manifest.record(uid)
        if rec.mode == SILENT and uid in pairs:
            parallel.append(parallel_example(uid))
        elif rec.mode == VOCALIZED:
            emg, audio = trim_to_match(norm_emg(uid), norm_mfcc(uid), uid=uid)
            source = (
                PARALLEL_VOCALIZED if uid in set(pairs.values())
                else NONPARALLEL_VOCALIZED
            )
            vocalized.append(
                VocalizedExample(
                    uid=uid, key=(rec.session_id, rec.mode),
                    emg=emg, audio=audio, source=source,
                )
            )
    validation = [
        parallel_example(uid)
        for uid in manifest.split_ids("val")
        if manifest.record(uid).mode == SILENT and uid in pairs
    ]
    return TrainData(parallel=parallel, vocalized=vocalized, validation=validation)


def stage_train(cfg, force=False):
    """Fit the transducer (and the waveform model when configured)."""
    _check_upstream(cfg, "train")
    if _fresh(cfg, "train", force):
        log.info("train: up to date")
        return
    data = build_training_data(cfg)
    emg_norm, mfcc_norm = _load_normalizers(cfg)
    model_dir = _dir(cfg, "model")

    model_cfg = TransducerConfig(
        input_dim=data.input_dim(),
        hidden_size=cfg.hidden_size,
        num_layers=cfg.num_layers,
        embed_dim=cfg.embed_dim,
        dropout=cfg.dropout,
    )
    train_cfg = TrainConfig(
        lr=cfg.lr,
        epochs=cfg.epochs,
        batch_size=cfg.batch_size,
        seed=cfg.seed,
        plateau_patience=cfg.plateau_patience,
        lr_decay=cfg.lr_decay,
        warmup_epochs=cfg.warmup_epochs,
        realign_period=cfg.realign_period,
        align_lambda=cfg.align_lambda,
        cca_dims=cfg.cca_dims,
        dtype=cfg.dtype,
        realign_validation=cfg.realign_validation,
        log_path=os.path.join(model_dir, "training_log.jsonl"),
    )
    model, history, projection, mappings = train_transducer(
        data, model_cfg, train_cfg, projection=_load_projection(cfg)
    )
    bundle = TransducerBundle(model, emg_norm, mfcc_norm)
    save_bundle(os.path.join(model_dir, "transducer.ckpt"), bundle)
    with open(os.path.join(model_dir, "history.json"), "w") as fh:
        json.dump(history, fh, sort_keys=True)
    with open(os.path.join(model_dir, "alignments.json"), "w") as fh:
        json.dump(
            {uid: [int(v) for v in m] for uid, m in mappings.items()},
            fh, sort_keys=True,
        )

    if cfg.vocoder == "wavenet":
        _train_wavenet_stage(cfg, model_dir)
    _write_stamp(cfg, "train")
    best = min(
        (h["val_loss"] for h in history if h["val_loss"] is not None),
        default=float("nan"),
    )
    log.info("train: %d epochs, best validation loss %.4f", len(history), best)


def _train_wavenet_stage(cfg, model_dir):
    manifest = _pre_manifest(cfg)
    fhash = stage_hash(cfg, "featurize")
    clips = []
    for uid in manifest.split_ids("train"):
        if manifest.record(uid).mode != VOCALIZED:
            continue
        utt = load_utterance(manifest, uid)
        feats = _load_features(cfg, uid, KIND_MFCC, fhash).data
        n = 160 * feats.shape[0]
        if utt.audio.shape[0] < n:
            feats = feats[: utt.audio.shape[0] // 160]
            n = 160 * feats.shape[0]
        clips.append((mulaw_encode(utt.audio[:n]), feats))
    if not clips:
        raise DataError("no vocalized training audio for the waveform model")
    if cfg.wavenet_preset == "desk":
        wn_cfg = WaveNetConfig.desk()
    elif cfg.wavenet_preset == "full":
        wn_cfg = WaveNetConfig()
    else:
        raise ConfigError("wavenet_preset must be 'desk' or 'full'")
    model = init_wavenet(wn_cfg, seed=cfg.seed)
    history = train_wavenet(
        model, clips, steps=cfg.wavenet_steps, lr=cfg.wavenet_lr, seed=cfg.seed
    )
    save_wavenet(os.path.join(model_dir, "wavenet.ckpt"), model)
    with open(os.path.join(model_dir, "wavenet_history.json"), "w") as fh:
        json.dump(history, fh)
    log.info(
        "train: waveform model %d steps, loss %.3f -> %.3f",
        len(history), history[0], history[-1],
    )


# ---------------------------------------------------------------- synthesize

def stage_synthesize(cfg, force=False):
    """Predict speech features for held-out silent utterances and vocode."""
    _check_upstream(cfg, "synthesize")
    if _fresh(cfg, "synthesize", force):
        log.info("synthesize: up to date")
        return
    manifest = _pre_manifest(cfg)
    fhash = stage_hash(cfg, "featurize")
    bundle = load_bundle(os.path.join(cfg.workdir, "model", "transducer.ckpt"))
    wavenet = None
    if cfg.vocoder == "wavenet":
        wavenet = load_wavenet(os.path.join(cfg.workdir, "model", "wavenet.ckpt"))
    elif cfg.vocoder != "phase":
        raise ConfigError("vocoder must be 'phase' or 'wavenet'")
    out = _dir(cfg, "synth")

    test_ids = [
        uid for uid in manifest.split_ids("test")
        if manifest.record(uid).mode == SILENT
    ]
    if not test_ids:
        raise DataError("test split holds no silent utterances")
    index = {}
    for uid in sorted(test_ids):
        rec = manifest.record(uid)
        feats = _load_features(cfg, uid, KIND_EMG, fhash)
        pred = bundle.predict(feats, (rec.session_id, rec.mode))
        if wavenet is not None:
            audio, _ = wavenet.generate(
                pred.data, seed=cfg.seed, mode=cfg.sampling,
                temperature=cfg.temperature,
            )
        else:
            audio = invert_mfcc(pred.data, n_iter=cfg.griffin_iterations)
        corpus_io.write_wav(os.path.join(out, uid + ".wav"), audio)
        index[uid] = {"wav": uid + ".wav", "text": rec.text}
    with open(os.path.join(out, "synth.json"), "w") as fh:
        json.dump(index, fh, sort_keys=True, indent=1)
    _write_stamp(cfg, "synthesize")
    log.info("synthesize: %d utterances written to %s", len(index), out)


# ------------------------------------------------------------------ evaluate

def _make_provider(cfg, references):
    if cfg.provider == "echo":
        return EchoProvider(references)
    if cfg.provider == "empty":
        return EmptyProvider()
    if cfg.provider == "file":
        if not cfg.transcript_file:
            raise ConfigError("provider 'file' needs evaluation.transcript_file")
        return FileTranscriptProvider(cfg.transcript_file)
    if cfg.provider == "http":
        if not cfg.endpoint:
            raise ConfigError("provider 'http' needs evaluation.endpoint")
        return HttpTranscriptionProvider(cfg.endpoint, timeout=cfg.timeout)
    raise ConfigError("unknown provider %r" % cfg.provider)


def stage_evaluate(cfg, force=False):
    """Transcribe the synthesized audio and score word errors."""
    _check_upstream(cfg, "evaluate")
    synth_dir = os.path.join(cfg.workdir, "synth")
    try:
        with open(os.path.join(synth_dir, "synth.json"), encoding="utf-8") as fh:
            index = json.load(fh)
    except FileNotFoundError:
        raise DataError("no synthesized audio; run synthesize first")
    references = {uid: entry["text"] for uid, entry in index.items()}
    provider = _make_provider(cfg, references)
    items = [
        (uid, os.path.join(synth_dir, entry["wav"]))
        for uid, entry in sorted(index.items())
    ]
    hypotheses = transcribe_all(provider, items, max_workers=_n_workers(cfg))
    report = evaluate_transcripts(references, hypotheses)
    reports = _dir(cfg, "reports")
    with open(os.path.join(reports, "wer.json"), "w") as fh:
        fh.write(report.to_json())
    _write_stamp(cfg, "evaluate")
    log.info("evaluate: aggregate WER %.1f%%", 100 * report.aggregate_wer)
    return report


# ------------------------------------------------------------------ pipeline

_STAGE_FN = {
    "preprocess": stage_preprocess,
    "featurize": stage_featurize,
    "align": stage_align,
    "train": stage_train,
    "synthesize": stage_synthesize,
    "evaluate": stage_evaluate,
}


def run_pipeline(cfg, through="evaluate", force=False):
    """Run stages in order up to and including the named one."""
    if through not in STAGE_ORDER:
        raise ConfigError("unknown stage %r" % through)
    result = None
    for stage in STAGE_ORDER:
        result = _STAGE_FN[stage](cfg, force=force)
        if stage == through:
            break
    return result


def run_ablation(cfg, fractions=(), electrode_sets=(), force=False):
    """Sweep data amount or electrode subsets; each setting runs end to end.

    electrode_sets: iterables of 1-based electrode positions to REMOVE.
    Results land in <workdir>/ablate/<label>/ and a summary table in
    <workdir>/reports/ablation.json.
    """
    settings = [("baseline", {})]
    settings += [
        ("fraction_%g" % f, {"data_fraction": f}) for f in fractions if f != 1.0
    ]
    for removed in electrode_sets:
        removed = tuple(sorted(removed))
        if not removed:
            continue
        label = "drop_" + "_".join(str(e) for e in removed)
        settings.append((label, {"removed_electrodes": removed}))

    rows = []
    for label, changes in settings:
        sub = with_updates(
            cfg, workdir=os.path.join(cfg.workdir, "ablate", label), **changes
        )
        log.info("ablation %s: starting", label)
        report = run_pipeline(sub, force=force)
        rows.append(
            {
                "setting": label,
                "aggregate_wer": report.aggregate_wer,
                "n_utterances": len(report.entries),
                **{k: list(v) if isinstance(v, tuple) else v for k, v in changes.items()},
            }
        )
    reports = _dir(cfg, "reports")
    with open(os.path.join(reports, "ablation.json"), "w") as fh:
        json.dump(rows, fh, indent=1, sort_keys=True)
    return rows
