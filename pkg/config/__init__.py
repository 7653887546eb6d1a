"""Runtime settings and physical parameter models."""
