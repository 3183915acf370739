"""Barcode images from malware feature vectors, and the models that classify them."""

__version__ = "0.1.0"
