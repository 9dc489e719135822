"""Zero-training temporal drift detection from prediction logs."""

__version__ = "0.1.0"
