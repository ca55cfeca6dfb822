"""Tactile fabric inspection toolkit.

Spectral intensity adjustment, block texture-frequency uniformity scoring,
uniformity-driven dataset splitting, and a majority-vote ensemble of
compact residual classifiers, exercised on a built-in synthetic corpus.
"""

__version__ = "0.1.0"
