"""Exact arithmetic for generalized complex, generalized Kahler and bihermitian deformations on flat tori."""

__version__ = "0.1.0"
