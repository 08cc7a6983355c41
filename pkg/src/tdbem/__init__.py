"""Time-domain boundary element solver for transient PEC scattering."""

__version__ = "0.1.0"
