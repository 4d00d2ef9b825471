"""Conservation laws of first-order ODE systems from Lie point symmetries."""

__version__ = "0.1.0"
