"""Figure rendering for vaxopsim result CSVs."""

__version__ = "0.1.0"
