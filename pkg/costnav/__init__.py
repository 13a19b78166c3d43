"""CostNav: economic evaluation of delivery-robot navigation policies."""

__version__ = "0.1.0"
