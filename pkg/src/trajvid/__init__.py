"""Trajectory-conditioned RGB+depth video diffusion on a procedural manipulation world."""

__version__ = "0.1.0"
