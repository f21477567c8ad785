"""Desk-scale contrastive training on synthetic token grids."""
