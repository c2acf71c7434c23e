"""Command-line pipeline: staged processing with cached artifacts."""
