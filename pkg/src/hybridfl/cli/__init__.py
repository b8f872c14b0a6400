"""Experiment orchestration and command-line entry points."""
