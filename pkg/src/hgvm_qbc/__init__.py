"""High-gain voltage-multiplier quadratic boost converter toolkit."""
