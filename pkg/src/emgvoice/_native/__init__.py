"""Compiled kernels. Optional: importers fall back to pure Python."""
