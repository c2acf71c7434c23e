"""Synthetic mini-corpora with known cross-mode time warps.

Both speaking modes of an utterance are driven by one smooth latent
articulation trajectory. The vocalized recording renders the trajectory as
amplitude-modulated broadband EMG plus a harmonic audio signal; the silent
recording renders a smoothly time-warped copy of the trajectory with
mode-specific channel gains, a perturbed mixing matrix, fresh carrier
noise, and a suppressed throat channel. The warp used for each silent
utterance is written to a sidecar, giving alignment experiments a ground
truth to score against.
"""

import json
import os

import numpy as np

from . import io, manifest as manifest_mod
from .types import AUDIO_SAMPLE_RATE, EMG_CHANNELS, SILENT, VOCALIZED

LATENT_DIM = 4
FRAME_RATE = 100  # latent frames per second; matches the feature rate
F0_HZ = 150.0  # fixed pitch: moving harmonics across mel band edges makes
               # band energies jagged in the latent and the corpus unlearnable
N_HARMONICS = 53  # 53 * 150 Hz = 7950 Hz, lights every mel band up to Nyquist
NOISE_BED = 2e-4  # recording-noise amplitude, matched by the session noise
                  # calibration file so the spectral gate keeps all content

_WEEKDAYS = ["monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"]
_MONTHS = ["january", "february", "march", "april", "may", "june", "july"]
_NUMBERS = ["one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten"]
_TEMPLATES = [
    ("set an alarm for", _NUMBERS, ["am", "pm"]),
    (_WEEKDAYS, _MONTHS, _NUMBERS),
    ("the meeting is at", _NUMBERS, ["thirty", "fifteen", "oclock"]),
    ("remind me on", _WEEKDAYS, ["morning", "evening", "afternoon"]),
]


def _pick_text(rng):
    template = _TEMPLATES[rng.integers(len(_TEMPLATES))]
    words = []
    for part in template:
        if isinstance(part, str):
            words.append(part)
        else:
            words.append(part[rng.integers(len(part))])
    return " ".join(words)


def _smooth_curves(rng, n_frames, dims, max_hz=1.5, components=4):
    """Random smooth trajectories: sums of low-frequency sinusoids, ~unit scale."""
    t = np.arange(n_frames) / FRAME_RATE
    out = np.zeros((n_frames, dims))
    for d in range(dims):
        for _ in range(components):
            freq = rng.uniform(0.2, max_hz)
            phase = rng.uniform(0, 2 * np.pi)
            amp = rng.uniform(0.4, 1.0)
            out[:, d] += amp * np.sin(2 * np.pi * freq * t + phase)
    return out / np.sqrt(components)


def _softplus(x):
    return np.logaddexp(0.0, x)


def _upsample(frames, factor):
    """Linear interpolation from frame rate to sample rate."""
    n = frames.shape[0]
    src = np.arange(n, dtype=np.float64)
    dst = np.arange(n * factor, dtype=np.float64) / factor
    dst = np.minimum(dst, n - 1)
    cols = [np.interp(dst, src, frames[:, d]) for d in range(frames.shape[1])]
    return np.stack(cols, axis=1)


class _Renderer:
    """Corpus-wide rendering parameters, fixed per seed."""

    def __init__(self, rng, emg_noise, throat_gain=0.15, mode_mix=0.2):
        self.mix_voc = rng.normal(0.0, 1.0, size=(EMG_CHANNELS, LATENT_DIM))
        self.mix_sil = self.mix_voc + mode_mix * rng.normal(0.0, 1.0, size=(EMG_CHANNELS, LATENT_DIM))
        self.bias = rng.uniform(-0.2, 0.6, size=EMG_CHANNELS)
        gains = rng.uniform(0.8, 1.2, size=EMG_CHANNELS)
        gains[3] = throat_gain  # electrode 4 sits on the throat; silent mode mutes it
        self.silent_gains = gains
        self.emg_noise = emg_noise
        self.amp_weights = rng.normal(0.0, 1.0, size=LATENT_DIM)
        self.tilt_weights = rng.normal(0.0, 1.0, size=LATENT_DIM)
        # three formant tracks, each steered by its own latent projection
        self.formant_weights = rng.normal(0.0, 1.0, size=(3, LATENT_DIM))
        # fixed per corpus, not per utterance: random phases would make the
        # spectral envelope unpredictable from the articulation trajectory
        self.harmonic_phases = rng.uniform(0, 2 * np.pi, size=N_HARMONICS)

    def emg(self, rng, latent, mode):
        """Render (8, 10*n_frames) EMG from a 100 Hz latent trajectory."""
        mix = self.mix_voc if mode == VOCALIZED else self.mix_sil
        gains = np.ones(EMG_CHANNELS) if mode == VOCALIZED else self.silent_gains
        env = _softplus(latent @ mix.T + self.bias)  # (n_frames, 8)
        env_s = _upsample(env, 10)  # (T, 8)
        t_total = env_s.shape[0]
        carrier = rng.normal(0.0, 1.0, size=(t_total, EMG_CHANNELS))
        # first difference whitens toward high frequencies, EMG-like
        carrier[1:] = carrier[1:] - 0.6 * carrier[:-1]
        x = env_s * carrier * gains
        x += self.emg_noise * rng.normal(0.0, 1.0, size=x.shape)
        return np.ascontiguousarray(x.T)

    def audio(self, rng, latent):
        """Render (160*n_frames,) vowel-like audio from the latent.

        A fixed-pitch harmonic comb shaped by three latent-driven formant
        resonances plus a spectral tilt. Harmonics never move, so every mel
        band's energy is a smooth function of the trajectory alone.
        """
        n_frames = latent.shape[0]
        up = _upsample(latent, 160)
        # amplitude floor keeps log-mel away from the cliff at silence, so
        # low cepstra stay a gentle function of the latent
        amp = 0.2 + _softplus(up @ self.amp_weights)
        amp /= max(np.max(amp), 1e-9)
        slope = 0.6 + 0.9 / (1.0 + np.exp(-(up @ self.tilt_weights)))
        centers = np.stack([
            550.0 + 350.0 / (1.0 + np.exp(-(up @ self.formant_weights[0]))),
            1300.0 + 900.0 / (1.0 + np.exp(-(up @ self.formant_weights[1]))),
            2600.0 + 1200.0 / (1.0 + np.exp(-(up @ self.formant_weights[2]))),
        ], axis=1)  # (T, 3)
        widths = np.array([150.0, 250.0, 350.0])
        gains = np.array([1.2, 1.0, 0.8])
        phase = 2 * np.pi * F0_HZ * np.arange(n_frames * 160) / AUDIO_SAMPLE_RATE
        wave = np.zeros(n_frames * 160)
        for h in range(1, N_HARMONICS + 1):
            freq = h * F0_HZ
            res = np.exp(-((freq - centers) ** 2) / (2.0 * widths ** 2)) @ gains
            wave += (0.12 + res) * h ** -slope * np.sin(h * phase + self.harmonic_phases[h - 1])
        wave *= amp
        peak = np.max(np.abs(wave))
        wave = 0.5 * wave / max(peak, 1e-9)
        # noise bed added in file units, so every utterance shares the level
        # the session noise calibration recording advertises
        return wave + NOISE_BED * rng.normal(0.0, 1.0, size=wave.shape)


def _make_warp(rng, n_voc_frames, strength):
    """Smooth monotone map: silent frame index -> vocalized frame position."""
    duration_factor = rng.uniform(0.9, 1.25)
    n_sil = max(int(round(duration_factor * n_voc_frames)), 20)
    wobble = _smooth_curves(rng, n_sil, 1, max_hz=0.8, components=3)[:, 0]
    rate = np.exp(strength * wobble)
    pos = np.concatenate([[0.0], np.cumsum(rate)[:-1]])
    pos *= (n_voc_frames - 1) / pos[-1]
    return pos  # length n_sil, in [0, n_voc_frames - 1]


def _warp_latent(latent, warp):
    src = np.arange(latent.shape[0], dtype=np.float64)
    cols = [np.interp(warp, src, latent[:, d]) for d in range(latent.shape[1])]
    return np.stack(cols, axis=1)


def warp_sidecar_path(manifest, silent_id):
    rec = manifest.record(silent_id)
    return os.path.join(manifest.root, os.path.splitext(rec.emg_path)[0] + ".warp.json")


def load_warp(manifest, silent_id):
    """Ground-truth warp for a synthetic silent utterance (frame positions)."""
    with open(warp_sidecar_path(manifest, silent_id), encoding="utf-8") as f:
        return np.array(json.load(f)["frame_map"], dtype=np.float64)


def generate_corpus(
    out_dir,
    n_pairs=15,
    n_nonparallel=0,
    seed=0,
    n_sessions=2,
    domain="closed-vocabulary",
    min_seconds=1.5,
    max_seconds=2.5,
    emg_noise=0.5,
    warp_strength=0.35,
    mode_mix=0.2,
    throat_gain=0.15,
    latent_max_hz=1.5,
):
    """Write a synthetic corpus and return its manifest path."""
    rng = np.random.default_rng(seed)
    renderer = _Renderer(rng, emg_noise=emg_noise, throat_gain=throat_gain, mode_mix=mode_mix)
    os.makedirs(out_dir, exist_ok=True)

    sessions = [f"session_{i}" for i in range(n_sessions)]
    noise_profiles = {}
    for s in sessions:
        os.makedirs(os.path.join(out_dir, s), exist_ok=True)
        # one second of the recording-noise bed, captured before speaking;
        # the gate takes its threshold from this instead of guessing
        bed = NOISE_BED * rng.normal(0.0, 1.0, size=AUDIO_SAMPLE_RATE)
        io.write_wav(os.path.join(out_dir, s, "noise.wav"), bed)
        noise_profiles[s] = f"{s}/noise.wav"

    utterances = []

    def _render_vocalized(uid, session, text):
        n_frames = int(rng.integers(int(min_seconds * FRAME_RATE), int(max_seconds * FRAME_RATE) + 1))
        # per-utterance tempo jitter keeps time-warped silent recordings
        # inside the dynamics range seen in vocalized training material
        tempo = rng.uniform(0.85, 1.25)
        latent = _smooth_curves(rng, n_frames, LATENT_DIM, max_hz=tempo * latent_max_hz)
        emg = renderer.emg(rng, latent, VOCALIZED)
        audio = renderer.audio(rng, latent)
        emg_path = f"{session}/{uid}.emg"
        wav_path = f"{session}/{uid}.wav"
        io.write_emg(os.path.join(out_dir, emg_path), emg)
        io.write_wav(os.path.join(out_dir, wav_path), audio)
        utterances.append(
            {
                "id": uid,
                "text": text,
                "session_id": session,
                "mode": VOCALIZED,
                "emg_path": emg_path,
                "audio_path": wav_path,
            }
        )
        return latent

    for k in range(n_pairs):
        session = sessions[k % n_sessions]
        text = _pick_text(rng)
        voc_id = f"{session}_p{k:03d}_voc"
        sil_id = f"{session}_p{k:03d}_sil"
        latent = _render_vocalized(voc_id, session, text)

        warp = _make_warp(rng, latent.shape[0], warp_strength)
        silent_latent = _warp_latent(latent, warp)
        emg_s = renderer.emg(rng, silent_latent, SILENT)
        emg_path = f"{session}/{sil_id}.emg"
        io.write_emg(os.path.join(out_dir, emg_path), emg_s)
        with open(os.path.join(out_dir, f"{session}/{sil_id}.warp.json"), "w", encoding="utf-8") as f:
            json.dump({"frame_map": warp.tolist()}, f)
        utterances.append(
            {
                "id": sil_id,
                "text": text,
                "session_id": session,
                "mode": SILENT,
                "emg_path": emg_path,
                "parallel_id": voc_id,
            }
        )

    for k in range(n_nonparallel):
        session = sessions[k % n_sessions]
        _render_vocalized(f"{session}_n{k:03d}_voc", session, _pick_text(rng))

    doc = {
        "version": manifest_mod.MANIFEST_VERSION,
        "domain": domain,
        "sessions": sessions,
        "utterances": utterances,
        "splits": {},
        "noise_profiles": noise_profiles,
    }
    manifest_path = os.path.join(out_dir, "manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=1, sort_keys=True)
    return manifest_path
