"""Shipped benchmark models and task directories (data only)."""
