"""Thin-film profiles - similarity solutions of the fourth-order thin-film equation."""

__version__ = "0.1.0"
