"""Agent-only evaluation: conditions, surface metrics, significance tests."""
