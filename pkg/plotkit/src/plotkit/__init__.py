"""Offline figure rendering for the synchronization simulator's CSV output."""

from .render import KINDS, PlotSpec, SchemaError, WindowRangeError, render

__version__ = "0.1.0"
