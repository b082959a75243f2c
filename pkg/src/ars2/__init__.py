"""Numerics for two-dimensional almost-Riemannian structures."""

from .expr import FieldExpr, Jet2, parse_field, taylor_jet

__all__ = ["FieldExpr", "Jet2", "parse_field", "taylor_jet"]
