"""Word error rate with a substitution/insertion/deletion breakdown.

Per utterance: WER = (S + I + D) / len(reference), which exceeds 1 when the
hypothesis inserts more words than the reference holds.  The corpus-level
number pools error and reference counts over all utterances before dividing,
so long utterances weigh more than short ones; the unweighted mean of
per-utterance rates is reported alongside for reference.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError
from .text import normalize_text


@dataclass(frozen=True)
class WerEntry:
    uid: str
    substitutions: int
    insertions: int
    deletions: int
    ref_len: int
    failed: bool = False

    @property
    def errors(self):
        return self.substitutions + self.insertions + self.deletions

    @property
    def wer(self):
        if self.ref_len == 0:
            return 0.0 if self.errors == 0 else float("inf")
        return self.errors / self.ref_len

    def to_dict(self):
        return {
            "uid": self.uid,
            "substitutions": self.substitutions,
            "insertions": self.insertions,
            "deletions": self.deletions,
            "ref_len": self.ref_len,
            "wer": self.wer,
            "failed": self.failed,
        }


def word_error_rate(reference, hypothesis, uid=""):
    """Count word edits between a reference and a hypothesis.

    Arguments may be raw strings (normalized here) or token lists.  Uses the
    standard edit-distance table; the backtrace prefers matches, then
    substitutions, then deletions, then insertions, which picks one minimal
    decomposition when several exist.
    """
    ref = normalize_text(reference) if isinstance(reference, str) else list(reference)
    hyp = normalize_text(hypothesis) if isinstance(hypothesis, str) else list(hypothesis)
    n, m = len(ref), len(hyp)
    d = np.zeros((n + 1, m + 1), dtype=np.int64)
    d[:, 0] = np.arange(n + 1)
    d[0, :] = np.arange(m + 1)
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            sub = d[i - 1, j - 1] + (ref[i - 1] != hyp[j - 1])
            d[i, j] = min(sub, d[i - 1, j] + 1, d[i, j - 1] + 1)
    subs = ins = dels = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and d[i, j] == d[i - 1, j - 1] and ref[i - 1] == hyp[j - 1]:
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and d[i, j] == d[i - 1, j - 1] + 1:
            subs += 1
            i, j = i - 1, j - 1
        elif i > 0 and d[i, j] == d[i - 1, j] + 1:
            dels += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return WerEntry(uid, subs, ins, dels, n)


@dataclass
class WerReport:
    entries: list = field(default_factory=list)

    @property
    def total_errors(self):
        return sum(e.errors for e in self.entries)

    @property
    def total_ref(self):
        return sum(e.ref_len for e in self.entries)

    @property
    def aggregate_wer(self):
        """Pooled rate: all errors over all reference words."""
        if self.total_ref == 0:
            raise DataError("empty references: aggregate rate undefined")
        return self.total_errors / self.total_ref

    @property
    def mean_utterance_wer(self):
        rates = [e.wer for e in self.entries if e.ref_len > 0]
        if not rates:
            raise DataError("no scorable utterances")
        return float(np.mean(rates))

    @property
    def n_failed(self):
        return sum(1 for e in self.entries if e.failed)

    def to_dict(self):
        return {
            "aggregate_wer": self.aggregate_wer,
            "mean_utterance_wer": self.mean_utterance_wer,
            "total_errors": self.total_errors,
            "total_ref_words": self.total_ref,
            "n_utterances": len(self.entries),
            "n_failed": self.n_failed,
            "utterances": [e.to_dict() for e in sorted(self.entries, key=lambda e: e.uid)],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def render(self):
        lines = ["%-24s %6s %4s %4s %4s %8s" % ("utterance", "ref", "S", "I", "D", "WER")]
        for e in sorted(self.entries, key=lambda e: e.uid):
            mark = " (transcription failed)" if e.failed else ""
            lines.append(
                "%-24s %6d %4d %4d %4d %7.1f%%%s"
                % (e.uid, e.ref_len, e.substitutions, e.insertions, e.deletions,
                   100 * e.wer, mark)
            )
        lines.append(
            "aggregate: %.1f%% (%d errors / %d words over %d utterances)"
            % (100 * self.aggregate_wer, self.total_errors, self.total_ref,
               len(self.entries))
        )
        return "\n".join(lines)


def evaluate_transcripts(references, hypotheses):
    """Score a batch: references and hypotheses are dicts keyed by utterance id.

    Every reference must have a hypothesis entry; a None hypothesis marks a
    transcription failure and scores as an empty transcript (all deletions),
    so failures hurt the aggregate instead of vanishing from it.
    """
    if not references:
        raise DataError("no references to score")
    missing = sorted(set(references) - set(hypotheses))
    if missing:
        raise DataError("missing hypotheses for: %s" % ", ".join(missing))
    report = WerReport()
    for uid in sorted(references):
        hyp = hypotheses[uid]
        entry = word_error_rate(references[uid], hyp or "", uid=uid)
        if hyp is None:
            entry = WerEntry(
                uid, entry.substitutions, entry.insertions, entry.deletions,
                entry.ref_len, failed=True,
            )
        report.entries.append(entry)
    return report
