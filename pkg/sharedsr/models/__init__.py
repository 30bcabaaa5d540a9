"""Domain types and validated schemas."""
