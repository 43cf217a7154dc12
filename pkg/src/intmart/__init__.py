"""Integer-valued, finitely-valued and single-valued martingales: a laboratory."""

__version__ = "0.1.0"
