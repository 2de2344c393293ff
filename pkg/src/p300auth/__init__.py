"""P300 oddball EEG authentication: simulation, preprocessing, features and classifiers."""

__version__ = "0.1.0"
