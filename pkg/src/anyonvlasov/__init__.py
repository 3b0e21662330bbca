"""Mean-field and semi-classical numerics for almost-fermionic anyons in 2D."""

__version__ = "0.1.0"
