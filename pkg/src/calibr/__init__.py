"""calibr: numerical operators, cones and dualities of calibrated geometry in flat R^n."""

__version__ = "0.1.0"
