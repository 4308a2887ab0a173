"""Miniature OMT solver for Booleans plus linear rational arithmetic, with
MaxSMT through both an OMT engine and a core-guided engine, and bidirectional
sorting networks attached to pseudo-Boolean objectives."""

__version__ = "0.1.0"
