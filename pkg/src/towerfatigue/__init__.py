"""Fatigue-aware design toolkit for floating wind turbine towers."""

__version__ = "0.1.0"
