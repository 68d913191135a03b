"""Text data augmentation and low-resource classification benchmark harness."""

__version__ = "0.1.0"
