"""Bundled scenario configs."""
