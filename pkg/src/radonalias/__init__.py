"""Radon transform laboratory for angular undersampling."""
__version__ = "0.1.0"
