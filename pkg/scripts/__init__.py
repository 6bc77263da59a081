"""Command-line entry points for the workbench."""
