"""
Command-line surface: grad-check, simulate, missing-rate, report.
"""

from .app import app, run

__all__ = ['app', 'run']
