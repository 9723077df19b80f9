"""Algorithmic core of rlbwt-lab."""
