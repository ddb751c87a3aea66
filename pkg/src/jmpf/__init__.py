"""Joint maximum purity forests and forest-based single-image super-resolution."""

__version__ = "0.1.0"
