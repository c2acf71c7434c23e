"""Silent-speech EMG to audible speech.

Pipeline stages: corpus loading, signal conditioning, featurization,
cross-mode alignment for target transfer, recurrent feature transduction,
vocoding, and transcription-based evaluation.
"""

__version__ = "0.1.0"


def alignment_backend():
    """Name of the alignment kernel selected at import ('native' or 'python')."""
    from emgvoice.align.dtw import BACKEND

    return BACKEND
