"""Federated learning over a high-altitude platform: simulator and delay solver."""
