"""Pipeline configuration: defaults, TOML file, environment, flag overrides.

Precedence, lowest to highest: built-in defaults, the TOML file, environment
variables (``EMGVOICE_<SECTION>__<FIELD>``), then ``--set section.field=v``
flags.  Every stage gets a hash over the config sections that can change its
output (plus everything upstream), so stale artifacts are detected instead
of silently reused.  Paths, worker counts, and log settings stay out of the
hashes: they change where and how work happens, not what is computed.
"""

import hashlib
import json
import os
from dataclasses import dataclass, fields, replace

try:
    import tomllib
except ModuleNotFoundError:  # stdlib from 3.11 on
    import tomli as tomllib

from ..errors import ConfigError


@dataclass(frozen=True)
class PipelineConfig:
    # data
    manifest: str = "corpus/manifest.json"
    workdir: str = "work"
    seed: int = 0
    n_val: int = 2
    n_test: int = 2
    data_fraction: float = 1.0
    removed_electrodes: tuple = ()
    workers: int = 0  # 0 = one thread per CPU

    # signals
    highpass_hz: float = 2.0
    highpass_order: int = 3
    notch_base_hz: float = 60.0
    notch_q: float = 30.0

    # align
    cca_dims: int = 15
    align_lambda: float = 10.0

    # transducer
    hidden_size: int = 1024
    num_layers: int = 3
    embed_dim: int = 32
    dropout: float = 0.5
    epochs: int = 20
    batch_size: int = 8
    lr: float = 1e-3
    warmup_epochs: int = 4
    realign_period: int = 5
    plateau_patience: int = 5
    lr_decay: float = 0.5
    dtype: str = "float32"
    realign_validation: bool = True

    # vocoder
    vocoder: str = "phase"  # "phase" (no training needed) or "wavenet"
    wavenet_preset: str = "desk"  # "desk" or "full"
    wavenet_steps: int = 300
    wavenet_lr: float = 1e-3
    sampling: str = "sample"  # or "argmax"
    temperature: float = 1.0
    griffin_iterations: int = 60

    # evaluation
    provider: str = "echo"  # echo | empty | file | http
    transcript_file: str = ""
    endpoint: str = ""
    timeout: float = 30.0


SECTIONS = {
    "data": (
        "manifest", "workdir", "seed", "n_val", "n_test", "data_fraction",
        "removed_electrodes", "workers",
    ),
    "signals": ("highpass_hz", "highpass_order", "notch_base_hz", "notch_q"),
    "align": ("cca_dims", "align_lambda"),
    "transducer": (
        "hidden_size", "num_layers", "embed_dim", "dropout", "epochs",
        "batch_size", "lr", "warmup_epochs", "realign_period",
        "plateau_patience", "lr_decay", "dtype", "realign_validation",
    ),
    "vocoder": (
        "vocoder", "wavenet_preset", "wavenet_steps", "wavenet_lr",
        "sampling", "temperature", "griffin_iterations",
    ),
    "evaluation": ("provider", "transcript_file", "endpoint", "timeout"),
}

# fields that never enter a stage hash: they do not change computed values
UNHASHED = {"manifest", "workdir", "workers", "timeout"}

# config sections each stage's output depends on, cumulatively
STAGE_SECTIONS = {
    "preprocess": ("data", "signals"),
    "featurize": ("data", "signals"),
    "align": ("data", "signals", "align"),
    "train": ("data", "signals", "align", "transducer", "vocoder"),
    "synthesize": ("data", "signals", "align", "transducer", "vocoder"),
    "evaluate": ("data", "signals", "align", "transducer", "vocoder", "evaluation"),
}

STAGE_ORDER = ("preprocess", "featurize", "align", "train", "synthesize", "evaluate")

_FIELD_TYPES = {f.name: f.type for f in fields(PipelineConfig)}
_FIELD_SECTION = {
    name: section for section, names in SECTIONS.items() for name in names
}


def _coerce(name, value):
    """Parse a string override into the field's type."""
    if name not in _FIELD_SECTION:
        raise ConfigError("unknown config field %r" % name)
    default = getattr(PipelineConfig(), name)
    if isinstance(default, bool):
        if str(value).lower() in ("1", "true", "yes", "on"):
            return True
        if str(value).lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError("%s: expected a boolean, got %r" % (name, value))
    if isinstance(default, int):
        try:
            return int(value)
        except ValueError:
            raise ConfigError("%s: expected an integer, got %r" % (name, value))
    if isinstance(default, float):
        try:
            return float(value)
        except ValueError:
            raise ConfigError("%s: expected a number, got %r" % (name, value))
    if isinstance(default, tuple):
        if isinstance(value, (list, tuple)):
            return tuple(int(v) for v in value)
        text = str(value).strip()
        if not text:
            return ()
        try:
            return tuple(int(v) for v in text.split(","))
        except ValueError:
            raise ConfigError("%s: expected comma-separated integers" % name)
    return str(value)


def load_config(path=None, env=None, overrides=()):
    """Assemble the effective configuration.

    overrides: iterable of "section.field=value" strings (the section part
    is optional but catches typos when given).
    """
    values = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                doc = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError("cannot read config file: %s" % exc)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError("cannot parse %s: %s" % (path, exc))
        for section, body in doc.items():
            if section not in SECTIONS:
                raise ConfigError("%s: unknown section [%s]" % (path, section))
            if not isinstance(body, dict):
                raise ConfigError("%s: [%s] must be a table" % (path, section))
            for name, value in body.items():
                if name not in SECTIONS[section]:
                    raise ConfigError(
                        "%s: unknown field %r in [%s]" % (path, name, section)
                    )
                values[name] = _coerce(name, value)

    env = os.environ if env is None else env
    for section, names in SECTIONS.items():
        for name in names:
            key = "EMGVOICE_%s__%s" % (section.upper(), name.upper())
            if key in env:
                values[name] = _coerce(name, env[key])

    for item in overrides:
        if "=" not in item:
            raise ConfigError("override %r is not of the form field=value" % item)
        target, value = item.split("=", 1)
        target = target.strip()
        if "." in target:
            section, name = target.split(".", 1)
            if section not in SECTIONS or name not in SECTIONS[section]:
                raise ConfigError("unknown config field %r" % target)
        else:
            name = target
        values[name] = _coerce(name, value)

    return PipelineConfig(**values)


def with_updates(cfg, **kw):
    coerced = {}
    for name, value in kw.items():
        if value is None:
            continue
        current = getattr(cfg, name)
        if isinstance(value, str) and not isinstance(current, str):
            value = _coerce(name, value)
        coerced[name] = value
    return replace(cfg, **coerced)


def stage_hash(cfg, stage):
    """Digest of every config value that can alter this stage's output."""
    if stage not in STAGE_SECTIONS:
        raise ConfigError("unknown stage %r" % stage)
    doc = {"stage": stage}
    for section in STAGE_SECTIONS[stage]:
        doc[section] = {
            name: list(v) if isinstance(v := getattr(cfg, name), tuple) else v
            for name in SECTIONS[section]
            if name not in UNHASHED
        }
    blob = json.dumps(doc, sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]
