"""
Command handlers for the altmindict CLI.

Handlers take the merged options and the active config class and return
an exit code.
"""

from altmindict.commands.cli import main

__all__ = ['main']
