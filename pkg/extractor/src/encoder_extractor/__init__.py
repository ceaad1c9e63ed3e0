"""Bridge from pre-trained vision encoders to the embedding interchange files."""

__version__ = "0.1.0"
