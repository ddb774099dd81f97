"""Dipolar waveguide-polariton blockade: device physics, quantum model and HBT analysis."""

__version__ = "0.1.0"
