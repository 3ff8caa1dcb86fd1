"""Desk-scale EEG-driven prosthetic arm pipeline.

Synthetic EEG -> band-power features -> UDP frames -> windowed classifier
-> serial action bytes -> simulated 4-joint arm.
"""

from eegarm.labels import ActionLabel, BrainState

__version__ = "0.1.0"

__all__ = ["ActionLabel", "BrainState", "__version__"]
