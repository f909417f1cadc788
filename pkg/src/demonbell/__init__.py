"""Maxwell-demon cheating in steering and Bell tests, with Landauer heat accounting."""

__version__ = "0.1.0"
