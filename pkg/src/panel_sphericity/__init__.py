"""
Panel Sphericity - John's test for large fixed-effects panel data models
"""

__version__ = "0.1.0"
