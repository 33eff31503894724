"""Exact few-qubit laboratory for EFI pairs and the cryptographic primitives equivalent to them."""

__version__ = "0.1.0"
