"""Scripts running the benchmark problems end to end."""
