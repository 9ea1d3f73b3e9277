"""Concentration inequalities on permutation groups: groups, measures, weak transport and verification."""

__version__ = "0.1.0"
