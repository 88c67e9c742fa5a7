"""Exact certificates for Lefschetz-type modules and weight-monodromy checks."""
from __future__ import annotations

__version__ = "0.1.0"
FORMAT = "wm-lab/1"
