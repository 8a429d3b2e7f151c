"""Forensic acquisition and analysis of Alexa management API artifacts."""

__version__ = "0.1.0"
