"""Oracle-based computational convex geometry: regularisations, polars,
sections and projections of convex bodies, log-concave functional
calculus, and Monte Carlo checks of volume-ratio inequalities."""

__version__ = "0.1.0"
