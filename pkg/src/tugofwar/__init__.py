"""Tug-of-war lane game, planning agent with learned models, and tree flaw-finding tools."""

__version__ = "0.1.0"
