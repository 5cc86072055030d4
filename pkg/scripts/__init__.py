"""
SSC-SR: self-supervised consistency training for single-image super-resolution
"""

__version__ = '0.1.0'
