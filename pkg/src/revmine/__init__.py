"""Keystroke-log mining for revision behaviour in writing-support experiments."""

__version__ = "0.1.0"
