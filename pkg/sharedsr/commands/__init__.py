"""Command-line subcommands; each module exposes ``register`` and ``run``."""

from sharedsr.commands import check, fit, procession, search

COMMANDS = (fit, search, check, procession)

__all__ = ["COMMANDS"]
