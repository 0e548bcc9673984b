"""Encoder export tooling for the vlm-iris toolkit."""

__version__ = "0.1.0"

from .bundle import export_encoders, run_parity_probe, verify_bundle
from .cachefile import build_cache_from_bundle, image_key, text_key, write_cache

__all__ = [
    "export_encoders",
    "run_parity_probe",
    "verify_bundle",
    "build_cache_from_bundle",
    "image_key",
    "text_key",
    "write_cache",
]
