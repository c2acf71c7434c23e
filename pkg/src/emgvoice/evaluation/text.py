"""Text normalization applied to both references and transcripts.

Scoring compares word sequences, so both sides must pass through the same
rules: lowercase, drop apostrophes inside words (o'clock -> oclock), treat
hyphens and slashes as separators, strip all other punctuation, and split
on whitespace.  Digits stay as they are; references in this domain are
already written out as words.
"""

import re

_SEPARATORS = re.compile(r"[-‐-―/]")
_APOSTROPHES = re.compile(r"['’]")
_DROP = re.compile(r"[^a-z0-9 ]")


def normalize_text(text):
    """Reduce a sentence to the list of words used for error counting."""
    s = text.lower()
    s = _APOSTROPHES.sub("", s)
    s = _SEPARATORS.sub(" ", s)
    s = _DROP.sub("", s)
    return s.split()
