"""Generators, benchmark harness and command-line entry point."""
