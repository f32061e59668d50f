"""horolab: numerics for long-horocycle averages of modular-invariant functions."""

__version__ = "0.1.0"
