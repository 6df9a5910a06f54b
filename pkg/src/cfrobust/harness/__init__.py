"""Ingestion, experiment orchestration, numerical sweeps and the command line."""
