"""Random-graph peeling and (1:b) Maker-Breaker component games on G(n, c/n)."""

__version__ = "0.1.0"
