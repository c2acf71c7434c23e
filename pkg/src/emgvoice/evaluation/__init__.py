"""Intelligibility scoring of synthesized speech via transcription."""

from .text import normalize_text
from .wer import WerEntry, WerReport, word_error_rate, evaluate_transcripts
from .providers import (
    EchoProvider,
    EmptyProvider,
    FileTranscriptProvider,
    HttpTranscriptionProvider,
    transcribe_all,
)

__all__ = [
    "normalize_text",
    "WerEntry",
    "WerReport",
    "word_error_rate",
    "evaluate_transcripts",
    "EchoProvider",
    "EmptyProvider",
    "FileTranscriptProvider",
    "HttpTranscriptionProvider",
    "transcribe_all",
]
