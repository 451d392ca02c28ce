"""Utility modules for the KdV small-dispersion study."""
