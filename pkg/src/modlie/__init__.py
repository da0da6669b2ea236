"""Cohomology of the restricted Cartan-type Lie algebras W(n) and S(n) over F_p."""

__version__ = "0.1.0"
