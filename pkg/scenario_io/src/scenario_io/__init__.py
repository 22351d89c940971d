"""scenario_io: noiseless inverse optimization as scenario programs."""
__version__ = "0.1.0"
