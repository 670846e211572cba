"""File formats and command-line entry point."""
