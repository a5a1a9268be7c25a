"""Level-2 rough path arithmetic, hidden Markov walks and their area anomaly."""

__version__ = "0.1.0"
