"""EEG classification pipeline for stimulation-procedure recordings (IPS / HV)."""

__version__ = "0.1.0"
