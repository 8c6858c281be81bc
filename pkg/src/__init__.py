"""aqmsense - infer the bottleneck queue discipline (Drop-Tail or PIE) from end-host traces."""

__version__ = "1.0.0"
