"""Solvers and a posteriori error estimators for time-fractional subdiffusion."""
