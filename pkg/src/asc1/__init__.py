"""Executable model of the Algorand ledger and its stateless contracts."""

__version__ = "0.1.0"
