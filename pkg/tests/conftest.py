"""Pytest bootstrap; keeps ``support`` importable from every test module."""
