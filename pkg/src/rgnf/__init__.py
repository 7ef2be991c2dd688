"""Normal forms of vector fields near a fixed point by the renormalization-group method."""
__version__ = "0.1.0"
