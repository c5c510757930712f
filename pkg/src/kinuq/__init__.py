"""kinuq: multiscale kinetic/fluid solver with sampling-based UQ estimators."""

__version__ = "0.1.0"
