"""gl2d: desk-scale numerical laboratory for the 2D Ginzburg-Landau system."""

__version__ = "0.1.0"
