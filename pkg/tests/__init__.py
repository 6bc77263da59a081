"""Unit, integration and slow acceptance tests for the workbench."""
