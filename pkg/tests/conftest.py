"""Shared pytest configuration; keeps the tests directory importable so the
reference-oracle helpers in mcref.py can be imported by test modules."""
