"""Bounds and verification tools for sums of weakly dependent random fields."""
