"""Measurement-based entanglement distillation and repeater simulation for stabilizer codes."""

__version__ = "0.1.0"
