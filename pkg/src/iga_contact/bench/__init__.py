"""Benchmark drivers: configuration, problem builders, metrics and CLI."""
