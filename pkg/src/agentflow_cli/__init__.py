"""Command-line interface for the agentflow simulator."""
