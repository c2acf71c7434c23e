"""Manifest loading, validation, and utterance decoding.

The manifest is one UTF-8 JSON file; signal paths are relative to its
directory. Validation is eager so a bad corpus fails at load time with the
offending utterance id, not mid-pipeline.
"""

import json
import os

from emgvoice.errors import DataError

from . import io
from .types import (
    AUDIO_SAMPLE_RATE,
    EMG_CHANNELS,
    EMG_SAMPLE_RATE,
    MODES,
    SILENT,
    VOCALIZED,
    CorpusManifest,
    Utterance,
    UtteranceRecord,
)

MANIFEST_VERSION = 1
_REQUIRED_FIELDS = ("id", "text", "session_id", "mode", "emg_path")


def load_manifest(path):
    """Parse and validate a corpus manifest."""
    if not os.path.isfile(path):
        raise DataError(f"manifest not found: {path}")
    with open(path, encoding="utf-8") as f:
        try:
            raw = json.load(f)
        except json.JSONDecodeError as exc:
            raise DataError(f"manifest is not valid JSON: {exc}") from exc
    root = os.path.dirname(os.path.abspath(path))

    domain = raw.get("domain", "open-vocabulary")
    records = {}
    for entry in raw.get("utterances", []):
        missing = [k for k in _REQUIRED_FIELDS if k not in entry]
        if missing:
            raise DataError(f"malformed record {entry.get('id', '?')!r}: missing {missing}")
        rec = UtteranceRecord(
            id=entry["id"],
            text=entry["text"],
            session_id=entry["session_id"],
            mode=entry["mode"],
            emg_path=entry["emg_path"],
            audio_path=entry.get("audio_path"),
            parallel_id=entry.get("parallel_id"),
        )
        if rec.id in records:
            raise DataError(f"duplicate utterance id {rec.id!r}")
        records[rec.id] = rec

    sessions = tuple(raw.get("sessions", sorted({r.session_id for r in records.values()})))
    splits = {k: tuple(v) for k, v in raw.get("splits", {}).items()}
    noise_profiles = dict(raw.get("noise_profiles", {}))
    manifest = CorpusManifest(
        root=root,
        domain=domain,
        sessions=sessions,
        records=records,
        splits=splits,
        noise_profiles=noise_profiles,
    )
    _validate(manifest)
    return manifest


def _validate(manifest):
    for rec in manifest.records.values():
        if rec.mode not in MODES:
            raise DataError(f"utterance {rec.id!r}: unknown mode {rec.mode!r}")
        emg_file = os.path.join(manifest.root, rec.emg_path)
        if not os.path.isfile(emg_file):
            raise DataError(f"utterance {rec.id!r}: missing EMG file {rec.emg_path}")
        if rec.mode == VOCALIZED:
            if rec.audio_path is None:
                raise DataError(f"utterance {rec.id!r}: vocalized mode requires audio_path")
            if not os.path.isfile(os.path.join(manifest.root, rec.audio_path)):
                raise DataError(f"utterance {rec.id!r}: missing audio file {rec.audio_path}")
        if rec.parallel_id is not None:
            other = manifest.records.get(rec.parallel_id)
            if other is None:
                raise DataError(f"utterance {rec.id!r}: dangling parallel_id {rec.parallel_id!r}")
            if other.text != rec.text:
                raise DataError(f"utterance {rec.id!r}: parallel counterpart has different text")
            if other.session_id != rec.session_id:
                raise DataError(f"utterance {rec.id!r}: parallel counterpart from another session")
            if other.mode == rec.mode:
                raise DataError(f"utterance {rec.id!r}: parallel counterpart has same mode")

    for session, rel in manifest.noise_profiles.items():
        if not os.path.isfile(os.path.join(manifest.root, rel)):
            raise DataError(f"session {session!r}: missing noise profile {rel}")

    seen = set()
    for name, ids in manifest.splits.items():
        for uid in ids:
            if uid not in manifest.records:
                raise DataError(f"split {name!r} references unknown id {uid!r}")
            if uid in seen:
                raise DataError(f"utterance {uid!r} assigned to more than one split")
            seen.add(uid)


def save_manifest(manifest, path):
    """Serialize a manifest; paths stay relative, so the corpus is movable."""
    doc = {
        "version": MANIFEST_VERSION,
        "domain": manifest.domain,
        "sessions": list(manifest.sessions),
        "utterances": [
            {
                "id": r.id,
                "text": r.text,
                "session_id": r.session_id,
                "mode": r.mode,
                "emg_path": r.emg_path,
                "audio_path": r.audio_path,
                "parallel_id": r.parallel_id,
            }
            for r in manifest.records.values()
        ],
        "splits": {k: list(v) for k, v in manifest.splits.items()},
    }
    if manifest.noise_profiles:
        doc["noise_profiles"] = dict(manifest.noise_profiles)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=1, sort_keys=True)


def load_noise_profile(manifest, session_id):
    """Session noise calibration waveform, or None if the corpus has none."""
    rel = manifest.noise_profiles.get(session_id)
    if rel is None:
        return None
    audio, rate = io.read_wav(os.path.join(manifest.root, rel))
    if rate != AUDIO_SAMPLE_RATE:
        raise DataError(f"session {session_id!r}: noise profile sample rate {rate} != {AUDIO_SAMPLE_RATE}")
    return audio


def load_utterance(manifest, utt_id):
    """Load raw (unfiltered) signals for one utterance."""
    rec = manifest.record(utt_id)
    emg_file = os.path.join(manifest.root, rec.emg_path)
    try:
        emg, rate = io.read_emg(emg_file)
    except (OSError, ValueError) as exc:
        raise DataError(f"utterance {utt_id!r}: cannot decode EMG: {exc}") from exc
    if emg.shape[0] != EMG_CHANNELS:
        raise DataError(f"utterance {utt_id!r}: expected {EMG_CHANNELS} channels, found {emg.shape[0]}")
    if rate != EMG_SAMPLE_RATE:
        raise DataError(f"utterance {utt_id!r}: EMG sample rate {rate} != {EMG_SAMPLE_RATE}")

    audio = None
    if rec.mode == VOCALIZED:
        audio_file = os.path.join(manifest.root, rec.audio_path)
        try:
            audio, arate = io.read_wav(audio_file)
        except (OSError, ValueError, EOFError) as exc:
            raise DataError(f"utterance {utt_id!r}: cannot decode audio: {exc}") from exc
        if arate != AUDIO_SAMPLE_RATE:
            raise DataError(f"utterance {utt_id!r}: audio sample rate {arate} != {AUDIO_SAMPLE_RATE}")

    return Utterance(
        id=rec.id,
        text=rec.text,
        session_id=rec.session_id,
        mode=rec.mode,
        emg=emg,
        audio=audio,
        parallel_id=rec.parallel_id,
    )
