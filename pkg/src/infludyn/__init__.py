"""Influencer detection on discrete-time dynamic graphs."""
__version__ = "0.1.0"
