"""Infrastructure layer for configuration files and result persistence."""
