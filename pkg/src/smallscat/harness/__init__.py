"""Experiment drivers, configuration, metrics and the command-line interface."""
