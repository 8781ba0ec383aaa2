"""Desk-scale CO-OFDM nonlinear-fiber simulation lab with four receiver equalizers."""
__version__ = "0.1.0"
