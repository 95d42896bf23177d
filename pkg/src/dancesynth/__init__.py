"""Two-stage music-to-dance synthesis."""
