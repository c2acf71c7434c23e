"""Transcription backends for intelligibility scoring.

A provider is anything with ``transcribe(uid, wav_path) -> str``.  The HTTP
provider talks to a real recognizer; the file provider replays transcripts
produced offline; echo and empty providers are controllable stand-ins for
pipeline tests (echo gives a 0% error floor, empty a 100% ceiling).
"""

import json
import logging
import urllib.request
from concurrent.futures import ThreadPoolExecutor

from ..errors import ConfigError, DataError

log = logging.getLogger(__name__)


class EchoProvider:
    """Returns the reference text itself: a perfect recognizer stand-in."""

    def __init__(self, references):
        self.references = dict(references)

    def transcribe(self, uid, wav_path):
        if uid not in self.references:
            raise DataError("no reference text for %s" % uid)
        return self.references[uid]


class EmptyProvider:
    """Returns an empty transcript for everything: the worst recognizer."""

    def transcribe(self, uid, wav_path):
        return ""


class FileTranscriptProvider:
    """Reads transcripts from a tab-separated file of ``uid<TAB>text`` lines."""

    def __init__(self, path):
        self.transcripts = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                if "\t" not in line:
                    raise DataError(
                        "%s:%d: expected uid<TAB>text" % (path, lineno)
                    )
                uid, text = line.split("\t", 1)
                self.transcripts[uid] = text

    def transcribe(self, uid, wav_path):
        if uid not in self.transcripts:
            raise DataError("no transcript for %s" % uid)
        return self.transcripts[uid]


class HttpTranscriptionProvider:
    """POSTs WAV bytes to a recognizer endpoint and reads back the text.

    The response may be JSON with a ``text`` field or a plain-text body.
    Network and HTTP errors propagate; the batch runner turns them into
    per-utterance failures.
    """

    def __init__(self, endpoint, timeout=30.0):
        if not endpoint.startswith(("http://", "https://")):
            raise ConfigError("endpoint must be an http(s) URL")
        self.endpoint = endpoint
        self.timeout = timeout

    def transcribe(self, uid, wav_path):
        with open(wav_path, "rb") as fh:
            body = fh.read()
        req = urllib.request.Request(
            self.endpoint,
            data=body,
            headers={"Content-Type": "audio/wav", "X-Utterance-Id": uid},
            method="POST",
        )
        with urllib.request.urlopen(req, timeout=self.timeout) as resp:
            payload = resp.read().decode("utf-8")
        try:
            return json.loads(payload)["text"]
        except (json.JSONDecodeError, KeyError, TypeError):
            return payload.strip()


def transcribe_all(provider, items, max_workers=4):
    """Transcribe (uid, wav_path) pairs concurrently.

    A provider exception fails that utterance only: its transcript comes
    back as None, which the scorer counts as fully deleted.  Results are
    keyed by uid, so ordering and scheduling do not affect the outcome.
    """
    results = {}

    def run(item):
        uid, path = item
        try:
            return uid, provider.transcribe(uid, path)
        except Exception as exc:
            log.warning("transcription failed for %s: %s", uid, exc)
            return uid, None

    if max_workers <= 1:
        for item in items:
            uid, text = run(item)
            results[uid] = text
        return results
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        for uid, text in pool.map(run, items):
            results[uid] = text
    return results
