"""Multi-task learning with selective augmentation for disjoint datasets."""

__version__ = "0.1.0"
