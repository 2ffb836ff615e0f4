"""Stock-interaction networks from LASSO regressions, map-equation modules and topology indicators."""

__version__ = "0.1.0"
