"""Bundled task schema files (*.schema)."""
