"""Distributed parameter estimation with one-bit, noise-dithered messages over
Markov-switching graphs, plus Fisher-information privacy bounds."""

__version__ = "0.1.0"
