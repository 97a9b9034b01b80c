"""Sample-based convexity testing under the Gaussian measure: testers, hard instances and checks."""

__version__ = "0.1.0"
