"""Adaptive overcurrent protection for DC microgrids"""

__version__ = "1.0.0"
