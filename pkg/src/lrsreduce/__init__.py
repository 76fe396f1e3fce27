"""Exact reductions from positivity of linear recurrence sequences to
threshold problems on one-counter Markov decision processes."""

__version__ = "0.1.0"
