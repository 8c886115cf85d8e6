"""genie: an 8-button piano improvisation engine.

Trains a discrete sequence autoencoder that compresses 88-key note
sequences into 8-button sequences, and serves the decoder as a realtime
instrument driven by button presses.
"""

__version__ = "0.1.0"
