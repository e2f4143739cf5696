"""sociolens: interaction-graph analytics for incrementally collected social datasets."""

__version__ = "0.1.0"
