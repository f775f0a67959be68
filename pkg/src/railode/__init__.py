"""SAT modulo ODE solving with a railway scheduling encoder."""

__version__ = "0.1.0"
