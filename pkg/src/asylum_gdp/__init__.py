"""Time-varying-parameter econometrics of asylum applications against GDP per capita."""

__version__ = "0.1.0"
