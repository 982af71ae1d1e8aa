"""BCRB-driven transmit/receive array partitioning and beamforming for ISAC."""

__version__ = "0.1.0"
