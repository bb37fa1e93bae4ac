"""Device-independent key distribution from the Peres-Mermin contextuality game."""

__version__ = "0.1.0"
