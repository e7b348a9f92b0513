"""Construction, classification and verification of p-elasticae in R^n."""

__version__ = "0.1.0"
